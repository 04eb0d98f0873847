use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{GradientSpace, DEFAULT_IG_STEPS};

/// One scoring procedure. Declaration order is the column order of reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Test {
    Faux,
    FauxNg,
    FauxIg,
    Fta,
    FtaWeighted,
    UnfairMap,
    LicUb,
}

impl Test {
    pub const ALL: [Test; 7] = [
        Test::Faux,
        Test::FauxNg,
        Test::FauxIg,
        Test::Fta,
        Test::FtaWeighted,
        Test::UnfairMap,
        Test::LicUb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Test::Faux => "faux",
            Test::FauxNg => "faux_ng",
            Test::FauxIg => "faux_ig",
            Test::Fta => "fta",
            Test::FtaWeighted => "fta_weighted",
            Test::UnfairMap => "unfair_map",
            Test::LicUb => "lic_ub",
        }
    }

    pub fn needs_aux(self) -> bool {
        matches!(self, Test::Faux | Test::FauxNg | Test::FauxIg)
    }

    pub fn needs_linear(self) -> bool {
        matches!(self, Test::FtaWeighted | Test::UnfairMap)
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Test {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Test::ALL
            .into_iter()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Test::ALL.iter().map(|t| t.name()).collect();
                Error::Config(format!("unknown test {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

/// Parses a comma-separated test list such as `faux,faux_ng`.
pub fn parse_tests(list: &str) -> Result<Vec<Test>> {
    let mut tests = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Test>>>()?;
    tests.sort();
    tests.dedup();
    if tests.is_empty() {
        return Err(Error::Config("empty test list".into()));
    }
    Ok(tests)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormOrder {
    L1,
    #[default]
    L2,
    Linf,
}

/// How integrated-gradient vectors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgForm {
    /// Cosine alignment, as fAux+NG.
    #[default]
    Normalized,
    /// Regularized gram solve, as plain fAux.
    Pseudoinverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnfairMapConfig {
    pub steps: usize,
    pub step_size: f64,
    pub subspace_reg: f64,
}

impl Default for UnfairMapConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            step_size: 0.01,
            subspace_reg: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// A row is flagged by a test when its score exceeds `delta`.
    pub delta: f64,
    pub ig_steps: usize,
    /// Integrated-gradient baseline; the dataset's feature mean when absent.
    pub ig_baseline: Option<Vec<f64>>,
    pub ig_form: IgForm,
    pub unfair_map: UnfairMapConfig,
    pub fta_norm: NormOrder,
    pub gradient_space: GradientSpace,
    /// Tests to run; every test whose inputs are available when absent.
    pub tests: Option<Vec<Test>>,
    /// Per-feature clipping box for Unfair Map; the observed range when absent.
    pub domain: Option<Vec<(f64, f64)>>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            ig_steps: DEFAULT_IG_STEPS,
            ig_baseline: None,
            ig_form: IgForm::default(),
            unfair_map: UnfairMapConfig::default(),
            fta_norm: NormOrder::default(),
            gradient_space: GradientSpace::default(),
            tests: None,
            domain: None,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(Error::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.ig_steps == 0 {
            return Err(Error::Config("ig_steps must be >= 1".into()));
        }
        let um = &self.unfair_map;
        if !(um.step_size.is_finite() && um.step_size >= 0.0) {
            return Err(Error::Config("unfair_map.step_size must be finite and >= 0".into()));
        }
        if !(um.subspace_reg.is_finite() && um.subspace_reg >= 0.0) {
            return Err(Error::Config("unfair_map.subspace_reg must be finite and >= 0".into()));
        }
        if let Some(domain) = &self.domain {
            if domain.iter().any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
                return Err(Error::Config("domain bounds must satisfy lo <= hi".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_names_round_trip() {
        for t in Test::ALL {
            assert_eq!(t.name().parse::<Test>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
    }

    #[test]
    fn parse_list_sorts_and_dedups() {
        assert_eq!(
            parse_tests("fta, faux_ng,fta").unwrap(),
            vec![Test::FauxNg, Test::Fta]
        );
        assert!(parse_tests("faux,bogus").is_err());
        assert!(parse_tests(" , ").is_err());
    }

    #[test]
    fn validation() {
        assert!(AuditConfig::default().validate().is_ok());
        let bad = AuditConfig {
            delta: -1.0,
            ..AuditConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AuditConfig {
            ig_steps: 0,
            ..AuditConfig::default()
        };
        assert!(bad.validate().is_err());
        let inf = AuditConfig {
            delta: f64::INFINITY,
            ..AuditConfig::default()
        };
        assert!(inf.validate().is_ok());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: AuditConfig = serde_json::from_str(r#"{"delta": 0.5, "unfair_map": {"steps": 3}}"#).unwrap();
        assert_eq!(cfg.delta, 0.5);
        assert_eq!(cfg.unfair_map.steps, 3);
        assert_eq!(cfg.unfair_map.step_size, 0.01);
        assert_eq!(cfg.ig_steps, DEFAULT_IG_STEPS);
    }
}

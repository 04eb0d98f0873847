use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairtest::config::{AuditConfig, Test};
use crate::fairtest::score::{
    aux_jacobian, faux_from_gradients, faux_ng_from_gradients, fta_from_gradient,
    fta_weighted_from_gradient, lic_ub_from_gradient, score_faux_ig, score_unfair_map,
    sensitive_direction, target_gradient, IgSettings, Scored,
};
use crate::neural::{LinearModel, MlpModel};
use crate::synthgen::{true_dxdc, Dataset, SyntheticSpec};

/// Models an audit may draw on. Only `target` is mandatory.
#[derive(Debug, Clone, Copy)]
pub struct AuditModels<'a> {
    pub target: &'a MlpModel,
    pub aux: Option<&'a MlpModel>,
    pub linear: Option<&'a LinearModel>,
    /// Generative recipe of a synthetic dataset, for the LIC upper bound.
    pub spec: Option<&'a SyntheticSpec>,
}

impl<'a> AuditModels<'a> {
    pub fn new(target: &'a MlpModel) -> Self {
        Self {
            target,
            aux: None,
            linear: None,
            spec: None,
        }
    }

    pub fn with_aux(mut self, aux: &'a MlpModel) -> Self {
        self.aux = Some(aux);
        self
    }

    pub fn with_linear(mut self, linear: &'a LinearModel) -> Self {
        self.linear = Some(linear);
        self
    }

    pub fn with_spec(mut self, spec: &'a SyntheticSpec) -> Self {
        self.spec = Some(spec);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub row_index: usize,
    pub scores: BTreeMap<Test, f64>,
    pub flags: BTreeMap<Test, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ScoreRecord {
    pub fn score(&self, test: Test) -> Option<f64> {
        self.scores.get(&test).copied()
    }

    pub fn flagged(&self, test: Test) -> bool {
        self.flags.get(&test).copied().unwrap_or(false)
    }
}

/// Tests that will run: the configured list, or everything the supplied
/// models and dataset support.
pub fn resolve_tests(dataset: &Dataset, models: &AuditModels<'_>, config: &AuditConfig) -> Result<Vec<Test>> {
    let available = |t: Test| -> std::result::Result<(), String> {
        if t.needs_aux() && models.aux.is_none() {
            return Err("an auxiliary model".into());
        }
        if t.needs_linear() && models.linear.is_none() {
            return Err("a linear protected-attribute model".into());
        }
        if t == Test::LicUb && (models.spec.is_none() || dataset.provenance.is_none()) {
            return Err("a synthetic dataset with provenance".into());
        }
        Ok(())
    };
    match &config.tests {
        None => Ok(Test::ALL.into_iter().filter(|&t| available(t).is_ok()).collect()),
        Some(list) => {
            let mut tests = list.clone();
            tests.sort();
            tests.dedup();
            for &t in &tests {
                if let Err(what) = available(t) {
                    return Err(Error::Config(format!("test {t} requires {what}")));
                }
            }
            Ok(tests)
        }
    }
}

fn check_dims(dataset: &Dataset, models: &AuditModels<'_>) -> Result<()> {
    let d = dataset.n_features();
    let check = |context: &'static str, actual: usize| {
        if actual == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected: d,
                actual,
            })
        }
    };
    check("target model input vs dataset features", models.target.input_dim())?;
    if let Some(aux) = models.aux {
        check("auxiliary model input vs dataset features", aux.input_dim())?;
    }
    if let Some(lin) = models.linear {
        check("linear model weights vs dataset features", lin.weights.len())?;
    }
    if let Some(spec) = models.spec {
        check("synthetic spec width vs dataset features", spec.feature_dim())?;
    }
    Ok(())
}

/// Scores every row of `dataset` with each selected test. Rows are scored in
/// parallel and returned in row order; failures are collected per row.
pub fn audit(dataset: &Dataset, models: &AuditModels<'_>, config: &AuditConfig) -> Result<Vec<ScoreRecord>> {
    config.validate()?;
    let tests = resolve_tests(dataset, models, config)?;
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    check_dims(dataset, models)?;

    let baseline = match &config.ig_baseline {
        Some(b) if b.len() != dataset.n_features() => {
            return Err(Error::DimensionMismatch {
                context: "ig_baseline vs dataset features",
                expected: dataset.n_features(),
                actual: b.len(),
            })
        }
        Some(b) => b.clone(),
        None => dataset.feature_mean(),
    };
    let domain = config.domain.clone().unwrap_or_else(|| dataset.feature_bounds());
    if domain.len() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            context: "audit domain vs dataset features",
            expected: dataset.n_features(),
            actual: domain.len(),
        });
    }
    let direction = match models.linear {
        Some(lin) if tests.iter().any(|t| t.needs_linear()) => Some(sensitive_direction(lin)?),
        _ => None,
    };
    let ctx = RowContext {
        models,
        config,
        tests: &tests,
        baseline: &baseline,
        domain: &domain,
        direction: direction.as_deref(),
        dataset,
    };

    let results: Vec<Result<ScoreRecord>> = (0..dataset.len()).into_par_iter().map(|i| ctx.score_row(i)).collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.is_empty() {
        Ok(records)
    } else {
        Err(Error::Rows(failures))
    }
}

struct RowContext<'a> {
    models: &'a AuditModels<'a>,
    config: &'a AuditConfig,
    tests: &'a [Test],
    baseline: &'a [f64],
    domain: &'a [(f64, f64)],
    direction: Option<&'a [f64]>,
    dataset: &'a Dataset,
}

impl RowContext<'_> {
    fn score_row(&self, i: usize) -> Result<ScoreRecord> {
        let x = self.dataset.row(i);
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {j} is not finite")));
        }
        let space = self.config.gradient_space;
        let g_tar = target_gradient(self.models.target, x, space)?;
        let j_aux = match self.models.aux {
            Some(aux) if self.tests.iter().any(|&t| t == Test::Faux || t == Test::FauxNg) => {
                Some(aux_jacobian(aux, x, space)?)
            }
            _ => None,
        };
        let mut scores = BTreeMap::new();
        let mut notes = Vec::new();
        let mut keep = |test: Test, s: Scored, notes: &mut Vec<String>| {
            if let Some(n) = s.note {
                notes.push(format!("{test}: {n}"));
            }
            scores.insert(test, s.score);
        };
        for &test in self.tests {
            let scored = match test {
                Test::Faux => faux_from_gradients(&g_tar, j_aux.as_ref().expect("aux jacobian"))?,
                Test::FauxNg => faux_ng_from_gradients(&g_tar, j_aux.as_ref().expect("aux jacobian"))?,
                Test::FauxIg => {
                    let ig = IgSettings {
                        baseline: self.baseline,
                        steps: self.config.ig_steps,
                        form: self.config.ig_form,
                        space,
                    };
                    score_faux_ig(self.models.target, self.models.aux.expect("aux model"), x, &ig)?
                }
                Test::Fta => plain(fta_from_gradient(&g_tar, self.config.fta_norm)),
                Test::FtaWeighted => plain(fta_weighted_from_gradient(
                    &g_tar,
                    self.direction.expect("sensitive direction"),
                )?),
                Test::UnfairMap => plain(score_unfair_map(
                    self.models.target,
                    self.models.linear.expect("linear model"),
                    x,
                    &self.config.unfair_map,
                    Some(self.domain),
                    space,
                )?),
                Test::LicUb => {
                    let prov = self
                        .dataset
                        .provenance
                        .as_ref()
                        .and_then(|p| p.get(i))
                        .ok_or(Error::MissingProvenance { row: i })?;
                    let spec = self.models.spec.ok_or(Error::MissingProvenance { row: i })?;
                    plain(lic_ub_from_gradient(&g_tar, &true_dxdc(spec, prov)?)?)
                }
            };
            if !(scored.score.is_finite() && scored.score >= 0.0) {
                return Err(Error::invalid(format!("{test} score is {}", scored.score)));
            }
            keep(test, scored, &mut notes);
        }
        let flags = scores.iter().map(|(&t, &s)| (t, s > self.config.delta)).collect();
        Ok(ScoreRecord {
            row_index: i,
            scores,
            flags,
            notes,
        })
    }
}

fn plain(score: f64) -> Scored {
    Scored { score, note: None }
}

/// Column of scores for one test, in row order.
pub fn score_column(records: &[ScoreRecord], test: Test) -> Option<Vec<f64>> {
    records.iter().map(|r| r.score(test)).collect()
}

//! Turns a raw tabular CSV into a [`Dataset`]: numeric columns pass through
//! (optionally standardized), categorical columns are one-hot encoded, and
//! label and protected columns are binarized by explicit predicates.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synthgen::{Dataset, OneHotGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    Gt { value: f64 },
    Ge { value: f64 },
    Lt { value: f64 },
    Le { value: f64 },
    /// Exact match on the trimmed raw field.
    Eq { value: String },
    In { values: Vec<String> },
}

impl Predicate {
    fn test(&self, raw: &str) -> std::result::Result<bool, String> {
        let raw = raw.trim();
        let num = || raw.parse::<f64>().map_err(|_| format!("not a number: {raw:?}"));
        Ok(match self {
            Predicate::Gt { value } => num()? > *value,
            Predicate::Ge { value } => num()? >= *value,
            Predicate::Lt { value } => num()? < *value,
            Predicate::Le { value } => num()? <= *value,
            Predicate::Eq { value } => raw == value,
            Predicate::In { values } => values.iter().any(|v| v == raw),
        })
    }
}

/// A column mapped to `{0, 1}` by a predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binarize {
    pub column: String,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub csv: PathBuf,
    pub label: Binarize,
    pub protected: Vec<Binarize>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    /// Z-score numeric columns (one-hot columns are left as 0/1).
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

pub fn ingest(cfg: &IngestConfig, csv_path: &Path) -> Result<Dataset> {
    if cfg.protected.is_empty() {
        return Err(Error::Config("ingest needs at least one protected column".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(csv_path)
        .map_err(|e| parse_err(csv_path, 0, e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(csv_path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: no column named {name:?}", csv_path.display())))
    };
    let label_idx = find(&cfg.label.column)?;
    let protected_idx = cfg
        .protected
        .iter()
        .map(|b| find(&b.column))
        .collect::<Result<Vec<_>>>()?;
    for name in cfg.categorical.iter().chain(&cfg.drop) {
        find(name)?;
    }
    let excluded: HashSet<usize> = cfg
        .drop
        .iter()
        .map(|d| find(d))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .chain(protected_idx.iter().copied())
        .chain([label_idx])
        .collect();
    let categorical: HashSet<&str> = cfg.categorical.iter().map(String::as_str).collect();

    let records: Vec<csv::StringRecord> = rdr
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| parse_err(csv_path, i as u64 + 2, e.to_string())))
        .collect::<Result<_>>()?;
    let n = records.len();

    let mut labels = Vec::with_capacity(n);
    let mut protected = Vec::with_capacity(n * protected_idx.len());
    for (i, rec) in records.iter().enumerate() {
        let line = i as u64 + 2;
        let bin = |b: &Binarize, j: usize| {
            b.predicate
                .test(rec.get(j).unwrap_or(""))
                .map(|v| if v { 1.0 } else { 0.0 })
                .map_err(|m| parse_err(csv_path, line, format!("column {:?}: {m}", b.column)))
        };
        labels.push(bin(&cfg.label, label_idx)?);
        for (b, &j) in cfg.protected.iter().zip(&protected_idx) {
            protected.push(bin(b, j)?);
        }
    }

    // column plan: (name, source column, Some(category) for one-hot)
    let mut plan: Vec<(String, usize, Option<String>)> = Vec::new();
    let mut groups = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if excluded.contains(&j) {
            continue;
        }
        if categorical.contains(name.as_str()) {
            let levels: BTreeSet<&str> = records.iter().map(|r| r.get(j).unwrap_or("")).collect();
            let start = plan.len();
            for level in levels {
                plan.push((format!("{name}={level}"), j, Some(level.to_owned())));
            }
            groups.push(OneHotGroup {
                name: name.clone(),
                columns: (start..plan.len()).collect(),
            });
        } else {
            plan.push((name.clone(), j, None));
        }
    }
    let d = plan.len();
    let mut features = Matrix::zeros(n, d);
    for (i, rec) in records.iter().enumerate() {
        for (c, (name, j, level)) in plan.iter().enumerate() {
            let raw = rec.get(*j).unwrap_or("");
            features[(i, c)] = match level {
                Some(l) => f64::from(u8::from(raw == l)),
                None => raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(
                            csv_path,
                            i as u64 + 2,
                            format!("column {name:?}: not a number: {raw:?} (list it under \"categorical\"?)"),
                        )
                    })?,
            };
        }
    }
    if cfg.standardize && n > 0 {
        for (c, (_, _, level)) in plan.iter().enumerate() {
            if level.is_some() {
                continue;
            }
            let col = features.col(c);
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            for i in 0..n {
                features[(i, c)] = (features[(i, c)] - mean) * scale;
            }
        }
    }
    let column_names: Vec<String> = plan.into_iter().map(|p| p.0).collect();
    let mut seen = HashSet::new();
    for name in column_names.iter().chain(cfg.protected.iter().map(|b| &b.column)) {
        if name == "y" || !seen.insert(name.as_str()) {
            return Err(Error::Config(format!("duplicate or reserved column name {name:?}")));
        }
    }
    let mut ds = Dataset::new(
        features,
        labels,
        Matrix::new(n, protected_idx.len(), protected)?,
        column_names,
        cfg.protected.iter().map(|b| b.column.clone()).collect(),
    )?;
    ds.one_hot_groups = groups;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("raw.csv");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn config(csv: PathBuf) -> IngestConfig {
        IngestConfig {
            csv,
            label: Binarize {
                column: "income".into(),
                predicate: Predicate::Eq { value: ">50K".into() },
            },
            protected: vec![Binarize {
                column: "age".into(),
                predicate: Predicate::Ge { value: 40.0 },
            }],
            categorical: vec!["job".into()],
            drop: vec!["id".into()],
            standardize: false,
        }
    }

    #[test]
    fn encodes_and_binarizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "id,age,job,hours,income\n1,25,clerk,40,<=50K\n2,52,exec,50,>50K\n3,40,clerk,35,>50K\n",
        );
        let ds = ingest(&config(p.clone()), &p).unwrap();
        assert_eq!(ds.column_names, vec!["job=clerk", "job=exec", "hours"]);
        assert_eq!(ds.labels, vec![0.0, 1.0, 1.0]);
        assert_eq!(ds.protected.col(0), vec![0.0, 1.0, 1.0]);
        assert_eq!(ds.row(1), &[0.0, 1.0, 50.0]);
        assert_eq!(ds.one_hot_groups[0].columns, vec![0, 1]);
        assert_eq!(ds.feature_groups().len(), 2);
    }

    #[test]
    fn standardizes_numeric_columns_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "id,age,job,hours,income\n1,25,a,10,x\n2,52,b,30,x\n");
        let mut cfg = config(p.clone());
        cfg.standardize = true;
        let ds = ingest(&cfg, &p).unwrap();
        assert_eq!(ds.features.col(2), vec![-1.0, 1.0]);
        assert_eq!(ds.features.col(0), vec![1.0, 0.0]);
    }

    #[test]
    fn reports_line_of_bad_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "id,age,job,hours,income\n1,25,a,10,x\n2,52,b,lots,x\n");
        match ingest(&config(p.clone()), &p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("hours"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_protected_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "id,job,hours,income\n1,a,10,x\n");
        let err = ingest(&config(p.clone()), &p).unwrap_err();
        assert!(err.to_string().contains("\"age\""), "{err}");
    }

    #[test]
    fn predicate_json_shape() {
        let b: Binarize = serde_json::from_str(r#"{"column": "age", "predicate": {"op": "ge", "value": 40}}"#).unwrap();
        assert_eq!(b.predicate, Predicate::Ge { value: 40.0 });
    }
}

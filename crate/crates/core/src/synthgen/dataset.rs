use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synthgen::spec::RowProvenance;

/// Columns that together encode one categorical feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

/// A logical feature: either a plain column or a one-hot group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

/// Features, labels, protected attributes and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<f64>,
    /// `n × k`, one `{0,1}` column per protected attribute (or one-hot class).
    pub protected: Matrix,
    pub ifs: Option<Vec<f64>>,
    pub fairness_label: Option<Vec<f64>>,
    pub column_names: Vec<String>,
    pub protected_names: Vec<String>,
    pub one_hot_groups: Vec<OneHotGroup>,
    /// Latent draws per row when the data came from the synthetic pipeline.
    pub provenance: Option<Vec<RowProvenance>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<f64>,
        protected: Matrix,
        column_names: Vec<String>,
        protected_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            protected,
            ifs: None,
            fairness_label: None,
            column_names,
            protected_names,
            one_hot_groups: Vec::new(),
            provenance: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        let check = |what: &'static str, len: usize| {
            if len != n {
                Err(Error::DimensionMismatch {
                    context: what,
                    expected: n,
                    actual: len,
                })
            } else {
                Ok(())
            }
        };
        check("labels", self.labels.len())?;
        check("protected attributes", self.protected.rows())?;
        if let Some(ifs) = &self.ifs {
            check("ifs", ifs.len())?;
        }
        if let Some(fl) = &self.fairness_label {
            check("fairness labels", fl.len())?;
            if self.ifs.is_none() {
                return Err(Error::invalid("fairness labels require ifs scores"));
            }
        }
        if let Some(p) = &self.provenance {
            check("provenance", p.len())?;
        }
        if self.column_names.len() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                context: "column names",
                expected: self.features.cols(),
                actual: self.column_names.len(),
            });
        }
        if self.protected_names.len() != self.protected.cols() {
            return Err(Error::DimensionMismatch {
                context: "protected names",
                expected: self.protected.cols(),
                actual: self.protected_names.len(),
            });
        }
        for g in &self.one_hot_groups {
            if let Some(&bad) = g.columns.iter().find(|&&c| c >= self.features.cols()) {
                return Err(Error::invalid(format!(
                    "one-hot group {} references column {bad}",
                    g.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_protected(&self) -> usize {
        self.protected.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Rows restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let pick = |v: &Vec<f64>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset {
            features: self.features.select_rows(indices),
            labels: pick(&self.labels),
            protected: self.protected.select_rows(indices),
            ifs: self.ifs.as_ref().map(pick),
            fairness_label: self.fairness_label.as_ref().map(pick),
            column_names: self.column_names.clone(),
            protected_names: self.protected_names.clone(),
            one_hot_groups: self.one_hot_groups.clone(),
            provenance: self
                .provenance
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i].clone()).collect()),
        }
    }

    /// Logical features in column order: one-hot groups collapse to one entry
    /// placed at their first column.
    pub fn feature_groups(&self) -> Vec<FeatureGroup> {
        let mut owner = vec![None; self.n_features()];
        for (gi, g) in self.one_hot_groups.iter().enumerate() {
            for &c in &g.columns {
                owner[c] = Some(gi);
            }
        }
        let mut emitted = vec![false; self.one_hot_groups.len()];
        let mut out = Vec::new();
        for (c, o) in owner.iter().enumerate() {
            match o {
                None => out.push(FeatureGroup {
                    name: self.column_names[c].clone(),
                    columns: vec![c],
                }),
                Some(gi) if !emitted[*gi] => {
                    emitted[*gi] = true;
                    let g = &self.one_hot_groups[*gi];
                    out.push(FeatureGroup {
                        name: g.name.clone(),
                        columns: g.columns.clone(),
                    });
                }
                Some(_) => {}
            }
        }
        out
    }

    /// Per-feature minimum and maximum over all rows.
    pub fn feature_bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.n_features()];
        for row in self.features.iter_rows() {
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    /// Column-wise mean of the features.
    pub fn feature_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.n_features()];
        if self.is_empty() {
            return mean;
        }
        for row in self.features.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

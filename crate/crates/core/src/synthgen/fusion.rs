use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    Concat,
    Outer,
}

impl Fusion {
    pub fn output_dim(self, a: usize, b: usize) -> usize {
        match self {
            Fusion::Concat => a + b,
            Fusion::Outer => a * b,
        }
    }

    pub fn apply(self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Fusion::Concat => Ok(fuse_concat(a, b)),
            Fusion::Outer => fuse_outer(a, b),
        }
    }

    /// Derivative of the fused vector when only `b` moves by `db`.
    pub fn propagate_second(self, a: &[f64], db: &[f64]) -> Vec<f64> {
        match self {
            Fusion::Concat => {
                let mut out = vec![0.0; a.len()];
                out.extend_from_slice(db);
                out
            }
            Fusion::Outer => outer_unchecked(a, db),
        }
    }

    /// Column names for blocks of width `a` and `b`.
    pub fn column_names(self, a: usize, b: usize) -> Vec<String> {
        match self {
            Fusion::Concat => (0..a)
                .map(|i| format!("y_{i}"))
                .chain((0..b).map(|j| format!("c_{j}")))
                .collect(),
            Fusion::Outer => (0..a)
                .flat_map(|i| (0..b).map(move |j| format!("o_{i}_{j}")))
                .collect(),
        }
    }
}

pub fn fuse_concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// `vec(a ⊗ b)` in row-major order; both operands must sum to one.
pub fn fuse_outer(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    for (name, v) in [("first", a), ("second", b)] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "outer fusion needs simplex blocks; {name} block sums to {s}"
            )));
        }
    }
    Ok(outer_unchecked(a, b))
}

fn outer_unchecked(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_example() {
        assert_eq!(fuse_concat(&[1.0, 2.0], &[3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn outer_example() {
        assert_eq!(fuse_outer(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn outer_with_basis_vector_scatters_block() {
        let a = [0.2, 0.3, 0.5];
        let e1 = [0.0, 1.0];
        assert_eq!(fuse_outer(&a, &e1).unwrap(), vec![0.0, 0.2, 0.0, 0.3, 0.0, 0.5]);
    }

    #[test]
    fn outer_rejects_non_simplex() {
        assert!(fuse_outer(&[0.5, 0.6], &[1.0]).is_err());
    }

    #[test]
    fn names_match_width() {
        assert_eq!(Fusion::Concat.column_names(2, 1), vec!["y_0", "y_1", "c_0"]);
        assert_eq!(Fusion::Outer.column_names(2, 2).len(), 4);
    }
}

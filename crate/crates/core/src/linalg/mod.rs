//! Dense linear algebra and seeded randomness shared by every other module.

mod matrix;
mod rng;

pub use matrix::{matmul, solve_spd, Matrix};
pub use rng::Rng;

use crate::error::{Error, Result};

/// Vectors with a smaller l2 norm are treated as zero.
pub const EPS_NORM: f64 = 1e-12;

/// Added to the diagonal of auxiliary Jacobian grams before solving.
pub const EPS_RIDGE: f64 = 1e-9;

pub fn dot(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "dot",
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(matrix::dot_unchecked(u, v))
}

pub fn norm2(u: &[f64]) -> f64 {
    // scaled to avoid overflow on large gradients
    let scale = norm_inf(u);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * u.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn norm1(u: &[f64]) -> f64 {
    u.iter().map(|v| v.abs()).sum()
}

/// NaN if any component is NaN.
pub fn norm_inf(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Unit vector along `u`; fails when `‖u‖ ≤ EPS_NORM`.
pub fn normalize(u: &[f64]) -> Result<Vec<f64>> {
    let n = norm2(u);
    if !(n > EPS_NORM) {
        return Err(Error::DegenerateGradient { norm: n });
    }
    Ok(u.iter().map(|v| v / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(normalize(&[0.0, 2.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_rejects_tiny() {
        assert!(matches!(
            normalize(&[1e-13, 0.0]),
            Err(Error::DegenerateGradient { .. })
        ));
        assert!(normalize(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn dot_mismatch() {
        assert!(dot(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn nan_propagates_through_norms() {
        for u in [[f64::NAN, 1.0], [1.0, f64::NAN]] {
            assert!(norm_inf(&u).is_nan());
            assert!(norm2(&u).is_nan());
            assert!(norm1(&u).is_nan());
            assert!(normalize(&u).is_err());
        }
        assert_eq!(norm_inf(&[-3.0, 2.0]), 3.0);
        assert_eq!(norm2(&[1e200, 1e200]), 1e200 * 2f64.sqrt());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::neural::mlp::sigmoid;
use crate::synthgen::Dataset;

/// `σ(w·x + b)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Coefficient of `½‖w‖²`; the intercept is not penalized.
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            tolerance: 1e-6,
            max_iter: 5000,
        }
    }
}

/// l2-regularized logistic regression of protected column `column` on the
/// features, by full-batch gradient descent.
pub fn fit_logistic(dataset: &Dataset, column: usize, config: &LogisticConfig) -> Result<LinearModel> {
    if column >= dataset.n_protected() {
        return Err(Error::Config(format!(
            "protected column {column} does not exist ({} available)",
            dataset.n_protected()
        )));
    }
    let target = dataset.protected.col(column);
    if let Some(bad) = target.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid(format!(
            "logistic regression needs a binary protected attribute, found {bad}"
        )));
    }
    fit_logistic_xy(&dataset.features, &target, config)
}

pub fn fit_logistic_xy(x: &Matrix, target: &[f64], config: &LogisticConfig) -> Result<LinearModel> {
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::invalid("cannot fit logistic regression on no rows"));
    }
    if !(config.l2 >= 0.0) {
        return Err(Error::Config("l2 penalty must be >= 0".into()));
    }
    let step = 1.0 / lipschitz_bound(x, config.l2);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let inv_n = 1.0 / n as f64;
    for _ in 0..config.max_iter {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (row, &t) in x.iter_rows().zip(target) {
            let z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let r = sigmoid(z) - t;
            for (g, &a) in gw.iter_mut().zip(row) {
                *g += r * a;
            }
            gb += r;
        }
        for (g, &wi) in gw.iter_mut().zip(&w) {
            *g = *g * inv_n + config.l2 * wi;
        }
        gb *= inv_n;
        let gnorm = (norm2(&gw).powi(2) + gb * gb).sqrt();
        if gnorm <= config.tolerance {
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;
    }
    if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
        return Err(Error::Divergence {
            epoch: config.max_iter,
            loss: f64::NAN,
        });
    }
    Ok(LinearModel { weights: w, bias: b })
}

/// Upper bound on the gradient's Lipschitz constant: ¼·λ_max([X 1]ᵀ[X 1]/n) + l2.
fn lipschitz_bound(x: &Matrix, l2: f64) -> f64 {
    let (n, d) = x.shape();
    // power iteration on the augmented second-moment matrix
    let mut v = vec![1.0; d + 1];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut out = vec![0.0; d + 1];
        for row in x.iter_rows() {
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += s * a;
            }
            out[d] += s;
        }
        out.iter_mut().for_each(|o| *o /= n as f64);
        let norm = norm2(&out);
        if norm == 0.0 {
            break;
        }
        lambda = norm / norm2(&v);
        v = out.iter().map(|o| o / norm).collect();
    }
    // the trace is a hard upper bound on λ_max; use it when power iteration is unsure
    let trace = x.data().iter().map(|v| v * v).sum::<f64>() / n as f64 + 1.0;
    let lambda = (1.1 * lambda).min(trace).max(1e-12);
    0.25 * lambda + l2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;

    fn dataset(rows: Vec<Vec<f64>>, c: Vec<f64>) -> Dataset {
        let d = rows[0].len();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![0.0; c.len()],
            Matrix::column(&c),
            (0..d).map(|i| format!("x{i}")).collect(),
            vec!["c".into()],
        )
        .unwrap()
    }

    #[test]
    fn axis_aligned_attribute_recovers_axis() {
        let mut rng = Rng::new(3);
        let rows: Vec<Vec<f64>> = (0..2000).map(|_| rng.normals(3)).collect();
        let c = rows.iter().map(|r| (r[0] > 0.0) as u8 as f64).collect();
        let m = fit_logistic(&dataset(rows, c), 0, &LogisticConfig::default()).unwrap();
        let ratio = m.weights[0].abs() / norm2(&m.weights);
        assert!(ratio >= 0.99, "ratio {ratio}");
    }

    #[test]
    fn independent_attribute_gives_small_weights() {
        let mut rng = Rng::new(4);
        let rows: Vec<Vec<f64>> = (0..2000).map(|_| rng.normals(3)).collect();
        let c = (0..2000).map(|_| (rng.uniform() < 0.5) as u8 as f64).collect();
        let cfg = LogisticConfig {
            l2: 1.0,
            ..LogisticConfig::default()
        };
        let m = fit_logistic(&dataset(rows, c), 0, &cfg).unwrap();
        assert!(norm2(&m.weights) <= 0.1);
    }

    #[test]
    fn duplicated_columns_get_symmetric_weights() {
        let mut rng = Rng::new(5);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let a = rng.normal();
                vec![a, a, rng.normal()]
            })
            .collect();
        let c = rows
            .iter()
            .map(|r| (r[0] + 0.5 * r[2] + 0.3 * rng.normal() > 0.0) as u8 as f64)
            .collect();
        let m = fit_logistic(&dataset(rows, c), 0, &LogisticConfig::default()).unwrap();
        assert!((m.weights[0] - m.weights[1]).abs() <= 1e-6);
    }

    #[test]
    fn rejects_non_binary_attribute() {
        let ds = dataset(vec![vec![0.0], vec![1.0]], vec![0.0, 2.0]);
        assert!(matches!(
            fit_logistic(&ds, 0, &LogisticConfig::default()),
            Err(Error::Invalid(_))
        ));
    }
}

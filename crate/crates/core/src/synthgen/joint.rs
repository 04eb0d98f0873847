use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_POINTS: usize = 1001;
const GOLDEN_ITERS: usize = 60;

/// Joint distribution of a binary protected attribute `C` and label `Y`.
///
/// `table[c][y] = P(C = c, Y = y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointBias {
    pub p_c1: f64,
    pub p_y1: f64,
    pub bias: f64,
    pub table: [[f64; 2]; 2],
}

impl JointBias {
    /// Probabilities in row-major `(c, y)` order, for categorical sampling.
    pub fn cells(&self) -> [f64; 4] {
        [self.table[0][0], self.table[0][1], self.table[1][0], self.table[1][1]]
    }

    /// Relative entropy of the table against the product of its marginals.
    pub fn dependence(&self) -> f64 {
        relative_entropy(&self.table, &product_table(self.p_c1, self.p_y1))
    }
}

fn product_table(p_c1: f64, p_y1: f64) -> [[f64; 2]; 2] {
    [
        [(1.0 - p_c1) * (1.0 - p_y1), (1.0 - p_c1) * p_y1],
        [p_c1 * (1.0 - p_y1), p_c1 * p_y1],
    ]
}

/// Table with the given marginals and `P(1,1) = p`.
fn table_with_cell(p_c1: f64, p_y1: f64, p: f64) -> [[f64; 2]; 2] {
    [
        [(1.0 - p_c1 - p_y1 + p).max(0.0), (p_y1 - p).max(0.0)],
        [(p_c1 - p).max(0.0), p],
    ]
}

/// `Σ P log(P / Q)` with `0 · log 0 = 0`.
fn relative_entropy(p: &[[f64; 2]; 2], q: &[[f64; 2]; 2]) -> f64 {
    let mut h = 0.0;
    for c in 0..2 {
        for y in 0..2 {
            if p[c][y] > 0.0 {
                h += p[c][y] * (p[c][y] / q[c][y]).ln();
            }
        }
    }
    h
}

/// Builds the biased joint: a line search over the single free cell finds the
/// dependence-maximizing table under the marginals, then the result is
/// interpolated with the independent table by `bias`.
///
/// When both feasible endpoints are maximal the one with larger `P(1,1)` wins.
pub fn build_joint(p_c1: f64, p_y1: f64, bias: f64) -> Result<JointBias> {
    for (name, v) in [("p_c1", p_c1), ("p_y1", p_y1)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    if !(0.0..=1.0).contains(&bias) {
        return Err(Error::invalid(format!("bias must lie in [0, 1], got {bias}")));
    }

    let p_min = product_table(p_c1, p_y1);
    let lo = (p_c1 + p_y1 - 1.0).max(0.0);
    let hi = p_c1.min(p_y1);
    let h = |p: f64| relative_entropy(&table_with_cell(p_c1, p_y1, p), &p_min);

    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| if i + 1 == GRID_POINTS { hi } else { lo + step * i as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p| h(p)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1.0);
    let idx = values
        .iter()
        .rposition(|&v| v >= best - tol)
        .expect("grid is nonempty");
    let mut p_star = grid[idx];
    let mut h_star = values[idx];

    // two golden-section passes on successively narrower brackets
    let mut width = step;
    for _ in 0..2 {
        let a = (p_star - width).max(lo);
        let b = (p_star + width).min(hi);
        let (p_ref, h_ref) = golden_max(&h, a, b);
        if h_ref > h_star + tol {
            p_star = p_ref;
            h_star = h_ref;
        }
        width *= 0.1;
    }

    let p_max = table_with_cell(p_c1, p_y1, p_star);
    let mut table = [[0.0; 2]; 2];
    for c in 0..2 {
        for y in 0..2 {
            table[c][y] = (1.0 - bias) * p_min[c][y] + bias * p_max[c][y];
        }
    }
    Ok(JointBias {
        p_c1,
        p_y1,
        bias,
        table,
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

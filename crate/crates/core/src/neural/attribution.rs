use crate::error::{Error, Result};
use crate::neural::mlp::{GradientSpace, MlpModel};

pub const DEFAULT_IG_STEPS: usize = 64;

/// Integrated gradients of output `output_index` along the straight path from
/// `baseline` to `x`, using a midpoint Riemann sum with `steps` nodes.
pub fn integrated_gradient(
    model: &MlpModel,
    x: &[f64],
    baseline: &[f64],
    output_index: usize,
    steps: usize,
) -> Result<Vec<f64>> {
    integrated_gradient_in(model, x, baseline, output_index, steps, GradientSpace::Probability)
}

pub fn integrated_gradient_in(
    model: &MlpModel,
    x: &[f64],
    baseline: &[f64],
    output_index: usize,
    steps: usize,
    space: GradientSpace,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::invalid("integrated gradients need at least one step"));
    }
    if baseline.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "integrated gradient baseline",
            expected: x.len(),
            actual: baseline.len(),
        });
    }
    let delta: Vec<f64> = x.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let mut avg = vec![0.0; x.len()];
    let mut point = vec![0.0; x.len()];
    for s in 0..steps {
        let t = (s as f64 + 0.5) / steps as f64;
        for ((p, b), d) in point.iter_mut().zip(baseline).zip(&delta) {
            *p = b + t * d;
        }
        let g = model.input_gradient_in(&point, output_index, space)?;
        for (a, gi) in avg.iter_mut().zip(g) {
            *a += gi;
        }
    }
    let inv = 1.0 / steps as f64;
    Ok(avg.iter().zip(&delta).map(|(a, d)| a * inv * d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Rng};
    use crate::neural::mlp::{Activation, Head, Layer};

    fn linear(w: &[f64]) -> MlpModel {
        let layer = Layer::new(Matrix::from_rows(&[w]).unwrap(), vec![0.0], Activation::Identity).unwrap();
        MlpModel::from_layers(vec![layer]).unwrap()
    }

    #[test]
    fn linear_model_gives_weight_times_input() {
        let w = [1.5, -2.0, 0.25];
        let x = [2.0, 3.0, -4.0];
        for steps in [1, 2, 7, 64] {
            let ig = integrated_gradient(&linear(&w), &x, &[0.0; 3], 0, steps).unwrap();
            let expected: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a * b).collect();
            assert_eq!(ig, expected);
        }
    }

    #[test]
    fn zero_path_gives_zero() {
        let mut rng = Rng::new(0);
        let m = MlpModel::init(4, &[6], 1, Head::Sigmoid, &mut rng).unwrap();
        let x = rng.normals(4);
        assert_eq!(integrated_gradient(&m, &x, &x, 0, 16).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn completeness_on_random_mlp() {
        let mut rng = Rng::new(1);
        let m = MlpModel::init(5, &[16, 8], 1, Head::Sigmoid, &mut rng).unwrap();
        let x = rng.normals(5);
        let b = rng.normals(5);
        let ig = integrated_gradient(&m, &x, &b, 0, 256).unwrap();
        let gap = m.forward(&x).unwrap()[0] - m.forward(&b).unwrap()[0];
        assert!((ig.iter().sum::<f64>() - gap).abs() <= 1e-3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = linear(&[1.0, 1.0]);
        assert!(integrated_gradient(&m, &[1.0, 1.0], &[0.0, 0.0], 0, 0).is_err());
        assert!(integrated_gradient(&m, &[1.0, 1.0], &[0.0], 0, 4).is_err());
    }
}

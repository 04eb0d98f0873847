//! Ground-truth discrimination labels from generative counterfactuals.

use crate::error::{Error, Result};
use crate::linalg::{norm1, Rng};
use crate::neural::MlpModel;
use crate::synthgen::dataset::Dataset;
use crate::synthgen::spec::{counterfactual_pair, SyntheticSpec};

/// Default multiplier on the unbiased reference standard deviation.
pub const DEFAULT_KAPPA: f64 = 3.0;

const STREAM_PAIRS: u64 = 21;

fn l1_gap(model: &MlpModel, x: &[f64], x_cf: &[f64]) -> Result<f64> {
    let a = model.forward(x)?;
    let b = model.forward(x_cf)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
    Ok(norm1(&diff))
}

/// Individual fairness scores over `n_pairs` fresh counterfactual pairs.
pub fn ifs_scores(model: &MlpModel, spec: &SyntheticSpec, n_pairs: usize) -> Result<Vec<f64>> {
    if model.input_dim() != spec.feature_dim() {
        return Err(Error::DimensionMismatch {
            context: "ifs model input vs synthetic features",
            expected: spec.feature_dim(),
            actual: model.input_dim(),
        });
    }
    let mut rng = Rng::derive(spec.seed, STREAM_PAIRS);
    (0..n_pairs)
        .map(|_| {
            let pair = counterfactual_pair(spec, &mut rng)?;
            l1_gap(model, &pair.x, &pair.x_cf)
        })
        .collect()
}

/// Individual fairness score of every row of a synthetic dataset against its
/// own counterfactual.
pub fn ifs_for_dataset(model: &MlpModel, dataset: &Dataset, spec: &SyntheticSpec) -> Result<Vec<f64>> {
    let prov = dataset
        .provenance
        .as_ref()
        .ok_or(Error::MissingProvenance { row: 0 })?;
    prov.iter()
        .enumerate()
        .map(|(i, row)| l1_gap(model, dataset.row(i), &spec.counterfactual_of(row)?))
        .collect()
}

/// `1` where `ifs > kappa · sigma0`.
pub fn fairness_labels(ifs: &[f64], sigma0: f64, kappa: f64) -> Vec<f64> {
    let threshold = kappa * sigma0;
    ifs.iter().map(|&v| if v > threshold { 1.0 } else { 0.0 }).collect()
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Attaches IFS scores of `model` and the thresholded labels to `dataset`.
pub fn label_dataset(
    dataset: &mut Dataset,
    model: &MlpModel,
    spec: &SyntheticSpec,
    sigma0: f64,
    kappa: f64,
) -> Result<()> {
    let ifs = ifs_for_dataset(model, dataset, spec)?;
    dataset.fairness_label = Some(fairness_labels(&ifs, sigma0, kappa));
    dataset.ifs = Some(ifs);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::neural::{Activation, Layer};
    use crate::synthgen::{sample_dataset, SyntheticRecipe};

    fn linear_sigmoid(w: Vec<f64>) -> MlpModel {
        let layer = Layer::new(Matrix::new(1, w.len(), w).unwrap(), vec![0.0], Activation::Sigmoid).unwrap();
        MlpModel::from_layers(vec![layer]).unwrap()
    }

    #[test]
    fn label_block_model_is_fair() {
        let spec = SyntheticRecipe::default().build().unwrap();
        let mut w = vec![0.0; 10];
        w[..5].copy_from_slice(&[0.3, -1.0, 0.5, 2.0, 0.1]);
        let ifs = ifs_scores(&linear_sigmoid(w), &spec, 200).unwrap();
        assert!(ifs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_model_is_fair() {
        let spec = SyntheticRecipe::default().build().unwrap();
        let ifs = ifs_scores(&linear_sigmoid(vec![0.0; 10]), &spec, 50).unwrap();
        assert!(ifs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn steep_protected_coordinate_matches_closed_form() {
        let spec = SyntheticRecipe {
            n_samples: 100,
            ..SyntheticRecipe::default()
        }
        .build()
        .unwrap();
        let large = 25.0;
        let mut w = vec![0.0; 10];
        w[5] = large;
        let model = linear_sigmoid(w);
        let ds = sample_dataset(&spec).unwrap();
        let ifs = ifs_for_dataset(&model, &ds, &spec).unwrap();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for (i, row) in ds.provenance.as_ref().unwrap().iter().enumerate() {
            let hi = spec.render(row, 1.0).unwrap()[5];
            let lo = spec.render(row, 0.0).unwrap()[5];
            let expected = (sig(large * hi) - sig(large * lo)).abs();
            assert!((ifs[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(fairness_labels(&[0.0, 0.0], 0.1, 3.0), vec![0.0, 0.0]);
        assert_eq!(fairness_labels(&[1e-9, 0.2], 0.5, 0.0), vec![1.0, 1.0]);
        assert_eq!(fairness_labels(&[0.001, 0.4], 0.01, 3.0), vec![0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = SyntheticRecipe::default().build().unwrap();
        assert!(ifs_scores(&linear_sigmoid(vec![0.0; 3]), &spec, 5).is_err());
    }
}

//! Score distributions of an ordinary target and an adversarially debiased
//! one under the normalized-gradient test.
//!
//! ```text
//! cargo run --release --example fair_vs_unfair -- [alpha]
//! ```

use fauxaudit::eval::compare_models;
use fauxaudit::fairtest::score_faux_ng;
use fauxaudit::linalg::Rng;
use fauxaudit::neural::{
    evaluate, targets_for, train, train_adversarial, AdversaryConfig, Examples, GradientSpace, Head, MlpModel,
    TargetRole, TrainConfig,
};
use fauxaudit::synthgen::{sample_dataset, Dataset, SyntheticRecipe};

fn accuracy(model: &MlpModel, ds: &Dataset) -> fauxaudit::Result<f64> {
    let data = Examples {
        inputs: ds.features.clone(),
        targets: targets_for(ds, TargetRole::Label, model)?,
    };
    Ok(evaluate(model, &data)?.1)
}

fn main() -> fauxaudit::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100.0);
    let all = sample_dataset(&SyntheticRecipe { n_samples: 2500, ..SyntheticRecipe::default() }.build()?)?;
    let ds = all.subset(&(0..2000).collect::<Vec<_>>());
    let held_out = all.subset(&(2000..2500).collect::<Vec<_>>());
    let mut rng = Rng::new(0);
    let d = ds.n_features();
    let init = MlpModel::init(d, &[32, 32], 1, Head::Sigmoid, &mut rng)?;
    let aux_init = MlpModel::init(d, &[32], 1, Head::Sigmoid, &mut rng)?;
    let cfg = TrainConfig::default();

    let unfair = train(&init, &ds, TargetRole::Label, &cfg)?;
    let fair_cfg = TrainConfig {
        adversary: Some(AdversaryConfig { alpha, ..AdversaryConfig::default() }),
        ..cfg.clone()
    };
    let fair = train_adversarial(&init, &ds, &fair_cfg)?;
    let aux = train(&aux_init, &ds, TargetRole::Protected, &cfg)?;

    let scores = |m: &MlpModel| -> fauxaudit::Result<Vec<f64>> {
        (0..held_out.len())
            .map(|i| Ok(score_faux_ng(m, &aux, held_out.row(i), GradientSpace::Probability)?.score))
            .collect()
    };
    let c = compare_models(&scores(&fair)?, &scores(&unfair)?)?;
    println!("alpha {alpha}");
    println!("accuracy: unfair {:.3}, fair {:.3}", accuracy(&unfair, &held_out)?, accuracy(&fair, &held_out)?);
    println!("median faux_ng: unfair {:.3} (IQR {:.3}), fair {:.3} (IQR {:.3})", c.unfair_median, c.unfair_iqr, c.fair_median, c.fair_iqr);
    println!("P(unfair score > fair score) = {:.3}", c.p_unfair_greater);
    Ok(())
}

//! Which features let the auxiliary model recover the protected attribute,
//! checked against a nonparametric mutual-information ranking.
//!
//! ```text
//! cargo run --release --example transparency_report
//! ```

use fauxaudit::eval::{feature_mi, ndcg, DEFAULT_MI_NEIGHBORS};
use fauxaudit::fairtest::transparency;
use fauxaudit::linalg::Rng;
use fauxaudit::neural::{train, GradientSpace, Head, MlpModel, TargetRole, TrainConfig};
use fauxaudit::synthgen::{sample_dataset, SyntheticRecipe};

fn main() -> fauxaudit::Result<()> {
    let ds = sample_dataset(&SyntheticRecipe::default().build()?)?;
    let init = MlpModel::init(ds.n_features(), &[32], 1, Head::Sigmoid, &mut Rng::new(1))?;
    let aux = train(&init, &ds, TargetRole::Protected, &TrainConfig::default())?;

    let report = transparency(&aux, &ds, 0, GradientSpace::Probability)?;
    let mi = feature_mi(&ds, 0, DEFAULT_MI_NEIGHBORS, 0)?;
    println!("{:>8} {:>12} {:>10}", "feature", "aux score", "MI (nats)");
    for (g, m) in report.groups.iter().zip(&mi) {
        println!("{:>8} {:>12.5} {m:>10.4}", g.name, g.score);
    }
    println!("\nranking: {}", report.ranking.join(" > "));
    let scores: Vec<f64> = report.groups.iter().map(|g| g.score).collect();
    println!("NDCG against MI relevance: {:.3}", ndcg(&scores, &mi)?);
    Ok(())
}

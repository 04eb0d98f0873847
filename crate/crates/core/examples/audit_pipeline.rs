//! The library-level audit: generate biased data, train a target and an
//! auxiliary model, score every row with all applicable tests, and rank the
//! rows a test finds most suspicious.
//!
//! ```text
//! cargo run --release --example audit_pipeline
//! ```

use fauxaudit::fairtest::{audit, AuditConfig, AuditModels, Test};
use fauxaudit::linalg::Rng;
use fauxaudit::neural::{fit_logistic, train, Head, LogisticConfig, MlpModel, TargetRole, TrainConfig};
use fauxaudit::synthgen::{ifs_for_dataset, sample_dataset, SyntheticRecipe};

fn main() -> fauxaudit::Result<()> {
    let spec = SyntheticRecipe::default().build()?;
    let ds = sample_dataset(&spec)?;
    let d = ds.n_features();
    let mut rng = Rng::new(0);
    let cfg = TrainConfig::default();

    let target = train(&MlpModel::init(d, &[32, 32], 1, Head::Sigmoid, &mut rng)?, &ds, TargetRole::Label, &cfg)?;
    let aux = train(&MlpModel::init(d, &[32], 1, Head::Sigmoid, &mut rng)?, &ds, TargetRole::Protected, &cfg)?;
    let linear = fit_logistic(&ds, 0, &LogisticConfig::default())?;

    let models = AuditModels {
        target: &target,
        aux: Some(&aux),
        linear: Some(&linear),
        spec: Some(&spec),
    };
    let config = AuditConfig {
        tests: Some(vec![Test::Faux, Test::FauxNg, Test::Fta, Test::LicUb]),
        ..AuditConfig::default()
    };
    let records = audit(&ds, &models, &config)?;
    let ifs = ifs_for_dataset(&target, &ds, &spec)?;

    for t in [Test::Faux, Test::FauxNg, Test::Fta, Test::LicUb] {
        let flagged = records.iter().filter(|r| r.flags.get(&t) == Some(&true)).count();
        println!("{:>8}: {flagged:>5} of {} rows flagged", t.name(), records.len());
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].score(Test::FauxNg).unwrap_or(0.0).total_cmp(&records[a].score(Test::FauxNg).unwrap_or(0.0)));
    println!("\nmost suspicious rows by {}:", Test::FauxNg.name());
    println!("{:>6} {:>4} {:>4} {:>9} {:>9}", "row", "c", "y", "faux_ng", "IFS");
    for &i in order.iter().take(8) {
        println!(
            "{i:>6} {:>4} {:>4} {:>9.4} {:>9.4}",
            ds.protected[(i, 0)],
            ds.labels[i],
            records[i].score(Test::FauxNg).unwrap_or(f64::NAN),
            ifs[i]
        );
    }
    Ok(())
}

//! Average precision of every test on generated data, over several seeds.
//!
//! ```text
//! cargo run --release --example synthetic_benchmark -- [config.json] [seeds]
//! ```

use std::path::PathBuf;

use fauxaudit::cli::{cmd_audit, cmd_evaluate, cmd_generate, cmd_train, read_scores, resolve, GroundTruth, Overrides, RunConfig};
use fauxaudit::fairtest::Test;

fn main() -> fauxaudit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config: RunConfig = match args.first() {
        Some(p) => fauxaudit::io::read_json(&PathBuf::from(p))?,
        None => RunConfig::default(),
    };
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);

    println!("{:>4} {:>7} {:>7} {:>7}  {}", "seed", "sigma0", "ifs_q50", "prev", Test::ALL.map(|t| format!("{:>12}", t.name())).join(""));
    let mut sums = vec![0.0; Test::ALL.len() + 1];
    for seed in 0..seeds {
        let dir = tempfile::tempdir().expect("temp dir");
        let r = resolve(
            config.clone(),
            PathBuf::from("."),
            &Overrides {
                out: Some(dir.path().to_owned()),
                seed: Some(seed),
                ..Overrides::default()
            },
        )?;
        cmd_generate(&r)?;
        cmd_train(&r)?;
        cmd_audit(&r, false)?;
        let eval = cmd_evaluate(&r, false)?;
        let cells: String = Test::ALL
            .iter()
            .map(|t| match eval.average_precision.get(t).copied().flatten() {
                Some(ap) => format!("{ap:>12.3}"),
                None => format!("{:>12}", "-"),
            })
            .collect();
        let gt: GroundTruth = fauxaudit::io::read_json(&r.models_dir().join("ground_truth.json"))?;
        let mut ifs = read_scores(&r.out_dir.join("scores.csv"))?.ifs.unwrap_or_default();
        ifs.sort_by(f64::total_cmp);
        let median = ifs.get(ifs.len() / 2).copied().unwrap_or(f64::NAN);
        sums[0] += eval.prevalence.unwrap_or(f64::NAN);
        for (s, t) in sums[1..].iter_mut().zip(Test::ALL) {
            *s += eval.average_precision.get(&t).copied().flatten().unwrap_or(f64::NAN);
        }
        println!(
            "{seed:>4} {:>7.4} {median:>7.4} {:>7.3}  {cells}",
            gt.sigma0,
            eval.prevalence.unwrap_or(f64::NAN)
        );
    }
    let means: String = sums[1..].iter().map(|s| format!("{:>12.3}", s / seeds as f64)).collect();
    println!("mean {:>23.3}  {means}", sums[0] / seeds as f64);
    Ok(())
}

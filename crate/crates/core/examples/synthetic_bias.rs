//! How the bias level shapes the joint of label and protected attribute, and
//! what a sampled dataset and an exact counterfactual look like.
//!
//! ```text
//! cargo run --release --example synthetic_bias
//! ```

use fauxaudit::linalg::Rng;
use fauxaudit::synthgen::{build_joint, counterfactual_pair, sample_dataset, SyntheticRecipe};

fn main() -> fauxaudit::Result<()> {
    let recipe = SyntheticRecipe::default();
    println!("p(c=1) = {}, p(y=1) = {}", recipe.p_c1, recipe.p_y1);
    println!(
        "{:>5} {:>28} {:>10} {:>12} {:>12}",
        "bias", "P(c,y) [00 01 10 11]", "KL", "P(y=1|c=0)", "P(y=1|c=1)"
    );
    for bias in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let joint = build_joint(recipe.p_c1, recipe.p_y1, bias)?;
        let t = joint.table;
        let ds = sample_dataset(&SyntheticRecipe { bias, ..recipe.clone() }.build()?)?;
        let rate = |c: f64| {
            let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.protected[(i, 0)] == c).collect();
            rows.iter().map(|&i| ds.labels[i]).sum::<f64>() / rows.len().max(1) as f64
        };
        println!(
            "{bias:>5.2} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>10.4} {:>12.3} {:>12.3}",
            t[0][0],
            t[0][1],
            t[1][0],
            t[1][1],
            joint.dependence(),
            rate(0.0),
            rate(1.0)
        );
    }

    let spec = recipe.build()?;
    let pair = counterfactual_pair(&spec, &mut Rng::new(3))?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:6.2}")).collect::<Vec<_>>().join(" ");
    println!("\ncounterfactual (y = {}, c = {} -> {}):", pair.y, pair.c, pair.c_cf);
    println!("  x    {}", fmt(&pair.x));
    println!("  x_cf {}", fmt(&pair.x_cf));
    println!("  label-block columns {:?}, protected-block columns {:?}", spec.label_block_columns(), spec.protected_block_columns());
    Ok(())
}

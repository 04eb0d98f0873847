//! Input gradients against central differences, and integrated-gradient
//! completeness, on a randomly initialized network.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use fauxaudit::linalg::Rng;
use fauxaudit::neural::{integrated_gradient, Head, MlpModel};

fn main() -> fauxaudit::Result<()> {
    let mut rng = Rng::new(7);
    let model = MlpModel::init(6, &[64, 32], 1, Head::Sigmoid, &mut rng)?;
    let x = rng.normals(6);
    let g = model.input_gradient(&x, 0)?;

    let h = 1e-5;
    println!("{:>3} {:>14} {:>14} {:>10}", "j", "analytic", "central diff", "abs err");
    for j in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[j] += h;
        xm[j] -= h;
        let fd = (model.forward(&xp)?[0] - model.forward(&xm)?[0]) / (2.0 * h);
        println!("{j:>3} {:>14.8} {fd:>14.8} {:>10.2e}", g[j], (g[j] - fd).abs());
    }

    let baseline = vec![0.0; x.len()];
    let gap = model.forward(&x)?[0] - model.forward(&baseline)?[0];
    println!("\nf(x) - f(baseline) = {gap:.6}");
    for steps in [4, 16, 64, 256] {
        let ig = integrated_gradient(&model, &x, &baseline, 0, steps)?;
        let total: f64 = ig.iter().sum();
        println!("steps {steps:>4}: sum IG = {total:.6}  gap {:.2e}", (total - gap).abs());
    }
    Ok(())
}

//! The k-nearest-neighbour estimate of mutual information between a
//! continuous feature and a discrete attribute, as the dependence grows.
//!
//! ```text
//! cargo run --release --example mutual_information
//! ```

use fauxaudit::eval::mi_discrete_continuous;
use fauxaudit::linalg::Rng;

fn main() -> fauxaudit::Result<()> {
    let n = 2000;
    let mut rng = Rng::new(5);
    let classes: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.uniform() < 0.5))).collect();
    println!("feature = shift * c + N(0, 1), n = {n}, k = 3; upper bound ln 2 = {:.4}", 2f64.ln());
    println!("{:>6} {:>10}", "shift", "MI (nats)");
    for shift in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let feature: Vec<f64> = classes.iter().map(|c| shift * c + rng.normal()).collect();
        println!("{shift:>6.1} {:>10.4}", mi_discrete_continuous(&feature, &classes, 3, 0)?);
    }
    Ok(())
}

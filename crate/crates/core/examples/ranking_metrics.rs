//! Average precision, the precision-recall curve, and NDCG on a small ranking.
//!
//! ```text
//! cargo run --release --example ranking_metrics -- [curve.svg]
//! ```

use fauxaudit::eval::{average_precision, ndcg, pr_curve, pr_curve_svg};

fn main() -> fauxaudit::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1];
    let labels = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    println!("scores {scores:?}");
    println!("labels {labels:?}");
    println!("average precision {:.4}", average_precision(&scores, &labels)?);

    let curve = pr_curve(&scores, &labels)?;
    println!("\n{:>9} {:>9}", "recall", "precision");
    for (r, p) in curve.recall.iter().zip(&curve.precision) {
        println!("{r:>9.3} {p:>9.3}");
    }

    let relevance = [3.0, 0.0, 2.0, 2.0, 0.0, 1.0, 0.0, 0.0];
    println!("\nNDCG with graded relevance {relevance:?}: {:.4}", ndcg(&scores, &relevance)?);

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, pr_curve_svg("example", &curve)).expect("write svg");
        println!("wrote {path}");
    }
    Ok(())
}

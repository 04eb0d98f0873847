//! Detection and ranking metrics for comparing fairness tests.

mod metrics;
mod mi;
mod plot;

pub use metrics::{average_precision, compare_models, ndcg, pr_curve, ModelComparison, PrCurve};
pub use mi::{feature_mi, mi_discrete_continuous, transparency_ndcg, DEFAULT_MI_NEIGHBORS};
pub use plot::pr_curve_svg;

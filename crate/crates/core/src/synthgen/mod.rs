//! Biased synthetic datasets with known ground truth.
//!
//! A label block and a protected block are generated from closed-form
//! class-conditional generators, `(y, c)` is drawn from a joint whose
//! dependence is set by a scalar bias level, and the blocks are fused by
//! concatenation or outer product. Because every row keeps its latent draws,
//! exact counterfactuals and exact `∂x/∂c` Jacobians are available.

mod dataset;
mod fusion;
mod generator;
mod ifs;
pub mod io;
mod joint;
mod spec;

pub use dataset::{Dataset, FeatureGroup, OneHotGroup};
pub use fusion::{fuse_concat, fuse_outer, Fusion};
pub use generator::{BlockGenerator, BlockKind, BlockLatent, Embed, MixtureComponent};
pub use ifs::{fairness_labels, ifs_for_dataset, ifs_scores, label_dataset, std_dev, DEFAULT_KAPPA};
pub use joint::{build_joint, JointBias};
pub use spec::{
    counterfactual_pair, sample_dataset, true_dxdc, BlockRecipe, CounterfactualPair, RowProvenance,
    SyntheticRecipe, SyntheticSpec,
};

//! Feed-forward classifiers with exact input gradients, their training
//! routines, logistic regression, and integrated-gradient attribution.

mod attribution;
mod logistic;
mod mlp;
mod serialize;
mod train;

pub use attribution::{integrated_gradient, integrated_gradient_in, DEFAULT_IG_STEPS};
pub use logistic::{fit_logistic, fit_logistic_xy, LinearModel, LogisticConfig};
pub use mlp::{Activation, ForwardTrace, GradientSpace, Head, Layer, MlpModel};
pub use train::{
    evaluate, targets_for, train, train_adversarial, train_adversarial_on_split,
    train_adversarial_with_report, train_on_split, train_with_report, validation_split,
    AdversaryConfig, Examples, TargetRole, TrainConfig, TrainReport,
};

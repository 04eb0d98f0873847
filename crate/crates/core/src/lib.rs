//! Individual fairness testing for differentiable classifiers.
//!
//! The core test, fAux, trains an auxiliary model to predict the protected
//! attribute and flags inputs where the target model's input gradient aligns
//! with the auxiliary model's. Around it sit a small MLP stack with Adam and
//! adversarial debiasing, a synthetic-bias generator with exact
//! counterfactual ground truth, the gradient-based baselines, and ranking
//! metrics for scoring audits.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod fairtest;
pub mod io;
pub mod linalg;
pub mod neural;
pub mod synthgen;

pub use error::{Error, Result};

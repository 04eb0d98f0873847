//! Individual-fairness tests: fAux and its normalized and integrated-gradient
//! variants, the FTA baselines, the Unfair Map attack, the LIC upper bound
//! for synthetic data, and transparency reports.

mod audit;
mod config;
mod score;
mod transparency;

pub use audit::{audit, resolve_tests, score_column, AuditModels, ScoreRecord};
pub use config::{parse_tests, AuditConfig, IgForm, NormOrder, Test, UnfairMapConfig};
pub use score::{
    aux_jacobian, aux_outputs, faux_from_gradients, faux_ng_from_gradients, fta_from_gradient,
    fta_weighted_from_gradient, lic_ub_from_gradient, score_faux, score_faux_ig, score_faux_ng, score_fta,
    score_fta_weighted, score_lic_ub, score_unfair_map, sensitive_direction, target_gradient, IgSettings,
    Scored,
};
pub use transparency::{build_report, descending_order, transparency, FeatureScore, GroupScore, TransparencyReport};

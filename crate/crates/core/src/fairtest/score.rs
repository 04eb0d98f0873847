//! Per-input fairness scores. Each test has a pure form on precomputed
//! gradients (`*_from_gradients`) and a model-level form.

use crate::error::{Error, Result};
use crate::fairtest::config::{IgForm, NormOrder, UnfairMapConfig};
use crate::linalg::{dot, norm1, norm2, norm_inf, solve_spd, Matrix, EPS_NORM, EPS_RIDGE};
use crate::neural::{integrated_gradient_in, GradientSpace, Head, LinearModel, MlpModel};
use crate::synthgen::{true_dxdc, RowProvenance, SyntheticSpec};

/// A score and, when the inputs were degenerate, why it is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub score: f64,
    pub note: Option<String>,
}

impl Scored {
    fn value(score: f64) -> Self {
        Self { score, note: None }
    }

    fn degenerate(what: &str) -> Self {
        Self {
            score: 0.0,
            note: Some(format!("{what} gradient is zero; scored 0")),
        }
    }
}

/// Gradient of the target model's positive output.
pub fn target_gradient(target: &MlpModel, x: &[f64], space: GradientSpace) -> Result<Vec<f64>> {
    target.input_gradient_in(x, target.positive_index(), space)
}

/// Outputs of the auxiliary model that stand for protected attributes: every
/// sigmoid output, the positive class of a binary softmax, or every class of
/// a wider softmax.
pub fn aux_outputs(aux: &MlpModel) -> Vec<usize> {
    match (aux.head(), aux.output_dim()) {
        (Some(Head::Softmax), 2) => vec![1],
        (_, k) => (0..k).collect(),
    }
}

/// `k × d` Jacobian of the auxiliary model's attribute outputs.
pub fn aux_jacobian(aux: &MlpModel, x: &[f64], space: GradientSpace) -> Result<Matrix> {
    let full = aux.input_jacobian(x, space)?;
    let outputs = aux_outputs(aux);
    if outputs.len() == full.rows() {
        Ok(full)
    } else {
        Ok(full.select_rows(&outputs))
    }
}

fn check_width(g_tar: &[f64], j_aux: &Matrix) -> Result<()> {
    if g_tar.len() != j_aux.cols() {
        return Err(Error::DimensionMismatch {
            context: "target gradient vs auxiliary Jacobian",
            expected: j_aux.cols(),
            actual: g_tar.len(),
        });
    }
    if j_aux.rows() == 0 {
        return Err(Error::invalid("auxiliary Jacobian has no rows"));
    }
    Ok(())
}

/// `max |s|` where `(J Jᵀ + ε I) s = J g_tar`.
pub fn faux_from_gradients(g_tar: &[f64], j_aux: &Matrix) -> Result<Scored> {
    check_width(g_tar, j_aux)?;
    if j_aux.iter_rows().all(|r| norm2(r) <= EPS_NORM) {
        return Ok(Scored::degenerate("auxiliary"));
    }
    let k = j_aux.rows();
    let mut gram = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..=a {
            let v = dot(j_aux.row(a), j_aux.row(b))?;
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        gram[(a, a)] += EPS_RIDGE;
    }
    let rhs = Matrix::column(&j_aux.matvec(g_tar)?);
    let s = solve_spd(&gram, &rhs)?;
    Ok(Scored::value(norm_inf(s.data())))
}

/// `max_j |ĝ_tar · ĝ_aux,j|`, zero when either side is degenerate.
pub fn faux_ng_from_gradients(g_tar: &[f64], j_aux: &Matrix) -> Result<Scored> {
    check_width(g_tar, j_aux)?;
    let nt = norm2(g_tar);
    if nt <= EPS_NORM {
        return Ok(Scored::degenerate("target"));
    }
    let mut best = 0.0_f64;
    let mut any = false;
    for row in j_aux.iter_rows() {
        let na = norm2(row);
        if na <= EPS_NORM {
            continue;
        }
        any = true;
        let cos = (dot(g_tar, row)? / (nt * na)).abs();
        best = best.max(cos.min(1.0));
    }
    if !any {
        return Ok(Scored::degenerate("auxiliary"));
    }
    Ok(Scored::value(best))
}

pub fn score_faux(target: &MlpModel, aux: &MlpModel, x: &[f64], space: GradientSpace) -> Result<Scored> {
    faux_from_gradients(&target_gradient(target, x, space)?, &aux_jacobian(aux, x, space)?)
}

pub fn score_faux_ng(target: &MlpModel, aux: &MlpModel, x: &[f64], space: GradientSpace) -> Result<Scored> {
    faux_ng_from_gradients(&target_gradient(target, x, space)?, &aux_jacobian(aux, x, space)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IgSettings<'a> {
    pub baseline: &'a [f64],
    pub steps: usize,
    pub form: IgForm,
    pub space: GradientSpace,
}

/// fAux with integrated-gradient attributions in place of raw gradients.
pub fn score_faux_ig(target: &MlpModel, aux: &MlpModel, x: &[f64], ig: &IgSettings<'_>) -> Result<Scored> {
    let t = integrated_gradient_in(target, x, ig.baseline, target.positive_index(), ig.steps, ig.space)?;
    let outputs = aux_outputs(aux);
    let mut data = Vec::with_capacity(outputs.len() * x.len());
    for j in outputs.iter().copied() {
        data.extend(integrated_gradient_in(aux, x, ig.baseline, j, ig.steps, ig.space)?);
    }
    let a = Matrix::new(outputs.len(), x.len(), data)?;
    match ig.form {
        IgForm::Normalized => faux_ng_from_gradients(&t, &a),
        IgForm::Pseudoinverse => faux_from_gradients(&t, &a),
    }
}

pub fn fta_from_gradient(g_tar: &[f64], p: NormOrder) -> f64 {
    match p {
        NormOrder::L1 => norm1(g_tar),
        NormOrder::L2 => norm2(g_tar),
        NormOrder::Linf => norm_inf(g_tar),
    }
}

pub fn score_fta(target: &MlpModel, x: &[f64], p: NormOrder, space: GradientSpace) -> Result<f64> {
    Ok(fta_from_gradient(&target_gradient(target, x, space)?, p))
}

/// Unit sensitive direction of a linear protected-attribute model.
pub fn sensitive_direction(linear: &LinearModel) -> Result<Vec<f64>> {
    let n = norm2(&linear.weights);
    if !(n > EPS_NORM) {
        return Err(Error::invalid(format!(
            "linear protected-attribute model is degenerate (‖w‖ = {n:e})"
        )));
    }
    Ok(linear.weights.iter().map(|w| w / n).collect())
}

pub fn fta_weighted_from_gradient(g_tar: &[f64], direction: &[f64]) -> Result<f64> {
    Ok(dot(g_tar, direction)?.abs())
}

pub fn score_fta_weighted(target: &MlpModel, linear: &LinearModel, x: &[f64], space: GradientSpace) -> Result<f64> {
    fta_weighted_from_gradient(&target_gradient(target, x, space)?, &sensitive_direction(linear)?)
}

/// Gradient ascent of the target output restricted to the sensitive
/// direction, damped when the gradient points away from it:
/// `x ← clip(x + η (g·ŵ) ŵ / (1 + λ (1 − cos²)))`. Returns `|f(x_T) − f(x)|`.
pub fn score_unfair_map(
    target: &MlpModel,
    linear: &LinearModel,
    x: &[f64],
    config: &UnfairMapConfig,
    domain: Option<&[(f64, f64)]>,
    space: GradientSpace,
) -> Result<f64> {
    let w = sensitive_direction(linear)?;
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "unfair map direction vs input",
            expected: x.len(),
            actual: w.len(),
        });
    }
    if let Some(d) = domain {
        if d.len() != x.len() {
            return Err(Error::DimensionMismatch {
                context: "unfair map domain vs input",
                expected: x.len(),
                actual: d.len(),
            });
        }
    }
    let pos = target.positive_index();
    let start = target.forward(x)?[pos];
    let mut cur = x.to_vec();
    for step in 0..config.steps {
        let g = target_gradient(target, &cur, space)?;
        let along = dot(&g, &w)?;
        let gn = norm2(&g);
        let cos2 = if gn > EPS_NORM { (along / gn).powi(2).min(1.0) } else { 0.0 };
        let scale = config.step_size * along / (1.0 + config.subspace_reg * (1.0 - cos2));
        for (i, v) in cur.iter_mut().enumerate() {
            *v += scale * w[i];
            if let Some(d) = domain {
                *v = v.clamp(d[i].0, d[i].1);
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::AttackDivergence { step });
        }
    }
    let end = target.forward(&cur)?[pos];
    if !end.is_finite() {
        return Err(Error::AttackDivergence { step: config.steps });
    }
    Ok((end - start).abs())
}

pub fn lic_ub_from_gradient(g_tar: &[f64], dxdc: &Matrix) -> Result<f64> {
    if dxdc.rows() != g_tar.len() {
        return Err(Error::DimensionMismatch {
            context: "target gradient vs generative Jacobian",
            expected: dxdc.rows(),
            actual: g_tar.len(),
        });
    }
    let per_attr = dxdc.t_matvec(g_tar)?;
    Ok(norm_inf(&per_attr))
}

/// `|∇f_tar(x) · ∂x/∂c|_∞` with the exact generative Jacobian at `row`.
pub fn score_lic_ub(
    target: &MlpModel,
    spec: &SyntheticSpec,
    row: &RowProvenance,
    x: &[f64],
    space: GradientSpace,
) -> Result<f64> {
    lic_ub_from_gradient(&target_gradient(target, x, space)?, &true_dxdc(spec, row)?)
}

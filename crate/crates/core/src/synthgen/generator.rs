//! Closed-form class-conditional feature generators.
//!
//! Each generator maps a latent draw and the embedded class value `ψ(class)`
//! to a feature block, and exposes the exact derivative of the block with
//! respect to `ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

/// Affine embedding `ψ(v) = scale · v + offset` of a binary class value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Embed {
    pub scale: f64,
    pub offset: f64,
}

impl Default for Embed {
    fn default() -> Self {
        Self {
            scale: 2.0,
            offset: -1.0,
        }
    }
}

impl Embed {
    pub fn apply(&self, class: f64) -> f64 {
        self.scale * class + self.offset
    }

    /// `dψ/dclass`
    pub fn derivative(&self) -> f64 {
        self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockKind {
    /// `x = means[m] + ψ · slopes[m] + scales[m] ⊙ ε`, component `m ~ weights`.
    GaussianMixture {
        weights: Vec<f64>,
        means: Matrix,
        slopes: Matrix,
        scales: Matrix,
    },
    /// `x = softmax(mixing · z + ψ · slope + offset)`, `z ~ N(0, I)`.
    SimplexSoftmax {
        mixing: Matrix,
        slope: Vec<f64>,
        offset: Vec<f64>,
    },
}

/// One mode of a randomly placed Gaussian mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    #[serde(default = "unit")]
    pub weight: f64,
    /// Distance between the two class means.
    pub separation: f64,
    pub noise: f64,
}

fn unit() -> f64 {
    1.0
}

impl MixtureComponent {
    pub fn new(weight: f64, separation: f64, noise: f64) -> Self {
        Self {
            weight,
            separation,
            noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGenerator {
    pub kind: BlockKind,
    pub latent_dim: usize,
    pub out_dim: usize,
    pub embed: Embed,
}

/// The random part of one block sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLatent {
    pub component: usize,
    pub noise: Vec<f64>,
}

impl BlockGenerator {
    pub fn gaussian_mixture(weights: Vec<f64>, means: Matrix, slopes: Matrix, scales: Matrix) -> Result<Self> {
        let (m, d) = means.shape();
        if m == 0 || d == 0 {
            return Err(Error::invalid("mixture needs at least one component and one output"));
        }
        if weights.len() != m || slopes.shape() != (m, d) || scales.shape() != (m, d) {
            return Err(Error::invalid("mixture parameter shapes disagree"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("mixture weights must be nonnegative with positive sum"));
        }
        Ok(Self {
            kind: BlockKind::GaussianMixture {
                weights,
                means,
                slopes,
                scales,
            },
            latent_dim: d,
            out_dim: d,
            embed: Embed::default(),
        })
    }

    pub fn simplex_softmax(mixing: Matrix, slope: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let (d, l) = mixing.shape();
        if d < 2 {
            return Err(Error::invalid("simplex generator needs at least two outputs"));
        }
        if slope.len() != d || offset.len() != d {
            return Err(Error::invalid("simplex parameter shapes disagree"));
        }
        Ok(Self {
            kind: BlockKind::SimplexSoftmax {
                mixing,
                slope,
                offset,
            },
            latent_dim: l,
            out_dim: d,
            embed: Embed::default(),
        })
    }

    pub fn with_embed(mut self, embed: Embed) -> Self {
        self.embed = embed;
        self
    }

    /// Random mixture: component centres `~ N(0, spread²)`; each component
    /// gets its own weight, a class shift of length `separation` in a random
    /// direction, and isotropic noise.
    pub fn random_gaussian(out_dim: usize, spread: f64, components: &[MixtureComponent], rng: &mut Rng) -> Result<Self> {
        let k = components.len();
        let mut means = Matrix::zeros(k, out_dim);
        let mut slopes = Matrix::zeros(k, out_dim);
        let mut scales = Matrix::zeros(k, out_dim);
        for (m, comp) in components.iter().enumerate() {
            if !(comp.separation >= 0.0 && comp.noise >= 0.0) {
                return Err(Error::invalid("mixture separation and noise must be >= 0"));
            }
            for v in means.row_mut(m) {
                *v = spread * rng.normal();
            }
            let dir = rng.normals(out_dim);
            let norm = crate::linalg::norm2(&dir).max(1e-12);
            // ψ spans [-1, 1] under the default embed, so the class shift is 2·|slope|
            for (s, d) in slopes.row_mut(m).iter_mut().zip(&dir) {
                *s = 0.5 * comp.separation * d / norm;
            }
            scales.row_mut(m).fill(comp.noise);
        }
        Self::gaussian_mixture(components.iter().map(|c| c.weight).collect(), means, slopes, scales)
    }

    pub fn random_simplex(out_dim: usize, latent_dim: usize, strength: f64, noise: f64, rng: &mut Rng) -> Result<Self> {
        let mixing = Matrix::new(
            out_dim,
            latent_dim,
            (0..out_dim * latent_dim).map(|_| noise * rng.normal()).collect(),
        )?;
        let slope = (0..out_dim).map(|_| strength * rng.normal()).collect();
        let offset = (0..out_dim).map(|_| 0.5 * rng.normal()).collect();
        Self::simplex_softmax(mixing, slope, offset)
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self.kind, BlockKind::SimplexSoftmax { .. })
    }

    pub fn sample_latent(&self, rng: &mut Rng) -> BlockLatent {
        match &self.kind {
            BlockKind::GaussianMixture { weights, .. } => {
                let component = rng.categorical(weights);
                BlockLatent {
                    component,
                    noise: rng.normals(self.latent_dim),
                }
            }
            BlockKind::SimplexSoftmax { .. } => BlockLatent {
                component: 0,
                noise: rng.normals(self.latent_dim),
            },
        }
    }

    /// Block sample for latent `latent` at embedded class value `psi`.
    pub fn generate(&self, latent: &BlockLatent, psi: f64) -> Vec<f64> {
        match &self.kind {
            BlockKind::GaussianMixture {
                means,
                slopes,
                scales,
                ..
            } => {
                let m = latent.component;
                (0..self.out_dim)
                    .map(|j| means[(m, j)] + psi * slopes[(m, j)] + scales[(m, j)] * latent.noise[j])
                    .collect()
            }
            BlockKind::SimplexSoftmax { .. } => {
                softmax(&self.simplex_logits(latent, psi))
            }
        }
    }

    /// `∂x/∂ψ` at `(latent, psi)`.
    pub fn d_dpsi(&self, latent: &BlockLatent, psi: f64) -> Vec<f64> {
        match &self.kind {
            BlockKind::GaussianMixture { slopes, .. } => slopes.row(latent.component).to_vec(),
            BlockKind::SimplexSoftmax { slope, .. } => {
                let x = self.generate(latent, psi);
                let inner: f64 = x.iter().zip(slope).map(|(a, b)| a * b).sum();
                x.iter().zip(slope).map(|(xi, si)| xi * (si - inner)).collect()
            }
        }
    }

    fn simplex_logits(&self, latent: &BlockLatent, psi: f64) -> Vec<f64> {
        match &self.kind {
            BlockKind::SimplexSoftmax {
                mixing,
                slope,
                offset,
            } => {
                let mut z = mixing.matvec(&latent.noise).expect("latent matches mixing width");
                for ((zi, s), o) in z.iter_mut().zip(slope).zip(offset) {
                    *zi += psi * s + o;
                }
                z
            }
            BlockKind::GaussianMixture { .. } => unreachable!("only simplex generators have logits"),
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::synthgen::dataset::Dataset;
use crate::synthgen::fusion::Fusion;
use crate::synthgen::generator::{BlockGenerator, BlockLatent, MixtureComponent};
use crate::synthgen::joint::{build_joint, JointBias};

const STREAM_ROWS: u64 = 11;
const STREAM_GENERATORS: u64 = 12;

/// Full recipe for a biased synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub y_generator: BlockGenerator,
    pub c_generator: BlockGenerator,
    pub fusion: Fusion,
    pub joint: JointBias,
    pub n_samples: usize,
    pub seed: u64,
}

/// Everything drawn for one synthetic row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowProvenance {
    pub y: f64,
    pub c: f64,
    pub y_latent: BlockLatent,
    pub c_latent: BlockLatent,
}

/// A point and its counterfactual: same latents and label, protected class flipped.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualPair {
    pub x: Vec<f64>,
    pub x_cf: Vec<f64>,
    pub y: f64,
    pub c: f64,
    pub c_cf: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fusion == Fusion::Outer && !(self.y_generator.is_simplex() && self.c_generator.is_simplex()) {
            return Err(Error::Config(
                "outer fusion requires simplex-softmax generators for both blocks".into(),
            ));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.fusion
            .output_dim(self.y_generator.out_dim, self.c_generator.out_dim)
    }

    /// Coordinates of the fused vector that come only from the label block
    /// (concat fusion); empty for outer fusion.
    pub fn label_block_columns(&self) -> Vec<usize> {
        match self.fusion {
            Fusion::Concat => (0..self.y_generator.out_dim).collect(),
            Fusion::Outer => Vec::new(),
        }
    }

    pub fn protected_block_columns(&self) -> Vec<usize> {
        match self.fusion {
            Fusion::Concat => {
                let a = self.y_generator.out_dim;
                (a..a + self.c_generator.out_dim).collect()
            }
            Fusion::Outer => (0..self.feature_dim()).collect(),
        }
    }

    /// Same generators and marginals at a different bias level.
    pub fn with_bias(&self, bias: f64) -> Result<Self> {
        let mut twin = self.clone();
        twin.joint = build_joint(self.joint.p_c1, self.joint.p_y1, bias)?;
        Ok(twin)
    }

    /// Draws latents (label block then protected block) and then `(y, c)`.
    pub fn draw_row(&self, rng: &mut Rng) -> RowProvenance {
        let y_latent = self.y_generator.sample_latent(rng);
        let c_latent = self.c_generator.sample_latent(rng);
        let cell = rng.categorical(&self.joint.cells());
        RowProvenance {
            y: (cell & 1) as f64,
            c: (cell >> 1) as f64,
            y_latent,
            c_latent,
        }
    }

    /// Fused features for a provenance record with the protected class set to `c`.
    pub fn render(&self, row: &RowProvenance, c: f64) -> Result<Vec<f64>> {
        let x_hat = self
            .y_generator
            .generate(&row.y_latent, self.y_generator.embed.apply(row.y));
        let x_tilde = self
            .c_generator
            .generate(&row.c_latent, self.c_generator.embed.apply(c));
        self.fusion.apply(&x_hat, &x_tilde)
    }

    /// Counterfactual of a recorded row: identical latents and label, `c` flipped.
    pub fn counterfactual_of(&self, row: &RowProvenance) -> Result<Vec<f64>> {
        self.render(row, 1.0 - row.c)
    }
}

/// Samples `spec.n_samples` rows; deterministic in `spec.seed`.
pub fn sample_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::derive(spec.seed, STREAM_ROWS);
    let d = spec.feature_dim();
    let mut features = Vec::with_capacity(spec.n_samples * d);
    let mut labels = Vec::with_capacity(spec.n_samples);
    let mut protected = Vec::with_capacity(spec.n_samples);
    let mut provenance = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let row = spec.draw_row(&mut rng);
        features.extend(spec.render(&row, row.c)?);
        labels.push(row.y);
        protected.push(row.c);
        provenance.push(row);
    }
    let mut ds = Dataset::new(
        Matrix::new(spec.n_samples, d, features)?,
        labels,
        Matrix::column(&protected),
        spec.fusion
            .column_names(spec.y_generator.out_dim, spec.c_generator.out_dim),
        vec!["c".into()],
    )?;
    ds.provenance = Some(provenance);
    Ok(ds)
}

/// Draws a fresh row and renders it under both protected classes.
pub fn counterfactual_pair(spec: &SyntheticSpec, rng: &mut Rng) -> Result<CounterfactualPair> {
    let row = spec.draw_row(rng);
    Ok(CounterfactualPair {
        x: spec.render(&row, row.c)?,
        x_cf: spec.counterfactual_of(&row)?,
        y: row.y,
        c: row.c,
        c_cf: 1.0 - row.c,
    })
}

/// Exact `∂x/∂c` (`d × 1`) of the generative process at a recorded row.
pub fn true_dxdc(spec: &SyntheticSpec, row: &RowProvenance) -> Result<Matrix> {
    let cg = &spec.c_generator;
    let psi = cg.embed.apply(row.c);
    let dxt: Vec<f64> = cg
        .d_dpsi(&row.c_latent, psi)
        .into_iter()
        .map(|v| v * cg.embed.derivative())
        .collect();
    let x_hat = spec
        .y_generator
        .generate(&row.y_latent, spec.y_generator.embed.apply(row.y));
    Ok(Matrix::column(&spec.fusion.propagate_second(&x_hat, &dxt)))
}

/// User-facing description of a block generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockRecipe {
    GaussianMixture {
        dim: usize,
        spread: f64,
        components: Vec<MixtureComponent>,
    },
    SimplexSoftmax {
        dim: usize,
        latent_dim: usize,
        strength: f64,
        noise: f64,
    },
}

impl BlockRecipe {
    fn build(&self, rng: &mut Rng) -> Result<BlockGenerator> {
        match *self {
            BlockRecipe::GaussianMixture {
                dim,
                spread,
                ref components,
            } => BlockGenerator::random_gaussian(dim, spread, components, rng),
            BlockRecipe::SimplexSoftmax {
                dim,
                latent_dim,
                strength,
                noise,
            } => BlockGenerator::random_simplex(dim, latent_dim, strength, noise, rng),
        }
    }
}

/// Compact, seed-driven description that resolves to a [`SyntheticSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticRecipe {
    pub fusion: Fusion,
    pub y_block: BlockRecipe,
    pub c_block: BlockRecipe,
    pub p_c1: f64,
    pub p_y1: f64,
    pub bias: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SyntheticRecipe {
    fn default() -> Self {
        Self {
            fusion: Fusion::Concat,
            // three sharp label modes plus a larger mode that says nothing
            // about y: there the target can only lean on the protected block
            y_block: BlockRecipe::GaussianMixture {
                dim: 9,
                spread: 4.0,
                components: vec![
                    MixtureComponent::new(2.0, 0.0, 1.0),
                    MixtureComponent::new(1.0, 0.3, 0.05),
                    MixtureComponent::new(1.0, 0.3, 0.05),
                    MixtureComponent::new(1.0, 0.3, 0.05),
                ],
            },
            // a single noisy linear shift
            c_block: BlockRecipe::GaussianMixture {
                dim: 1,
                spread: 0.0,
                components: vec![MixtureComponent::new(1.0, 2.0, 1.0)],
            },
            p_c1: 0.3,
            p_y1: 0.5,
            bias: 1.0,
            n_samples: 2000,
            seed: 0,
        }
    }
}

impl SyntheticRecipe {
    /// Generator parameters depend only on the seed and block recipes, so
    /// recipes differing only in bias share generators.
    pub fn build(&self) -> Result<SyntheticSpec> {
        let mut rng = Rng::derive(self.seed, STREAM_GENERATORS);
        let y_generator = self.y_block.build(&mut rng)?;
        let c_generator = self.c_block.build(&mut rng)?;
        let spec = SyntheticSpec {
            y_generator,
            c_generator,
            fusion: self.fusion,
            joint: build_joint(self.p_c1, self.p_y1, self.bias)?,
            n_samples: self.n_samples,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

//! JSON model documents:
//! `{input_dim, layers: [{rows, cols, weights, bias, activation}], head}`.
//!
//! Floats are written with shortest round-trip formatting, so finite
//! parameters survive a save/load cycle bit-exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::neural::mlp::{Activation, Head, Layer, MlpModel};

#[derive(Debug, Serialize, Deserialize)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    input_dim: usize,
    layers: Vec<LayerDoc>,
    head: Option<Head>,
}

impl Serialize for MlpModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = ModelDoc {
            input_dim: self.input_dim(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    rows: l.weight.rows(),
                    cols: l.weight.cols(),
                    weights: l.weight.data().to_vec(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
            head: self.head(),
        };
        doc.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MlpModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDoc::deserialize(deserializer)?;
        from_doc(doc).map_err(serde::de::Error::custom)
    }
}

fn from_doc(doc: ModelDoc) -> Result<MlpModel> {
    let layers = doc
        .layers
        .into_iter()
        .map(|l| Layer::new(Matrix::new(l.rows, l.cols, l.weights)?, l.bias, l.activation))
        .collect::<Result<Vec<_>>>()?;
    let model = MlpModel::from_layers(layers)?;
    if model.input_dim() != doc.input_dim {
        return Err(Error::DimensionMismatch {
            context: "model document input_dim",
            expected: doc.input_dim,
            actual: model.input_dim(),
        });
    }
    if model.head() != doc.head {
        return Err(Error::invalid("model document head disagrees with final activation"));
    }
    Ok(model)
}

impl MlpModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

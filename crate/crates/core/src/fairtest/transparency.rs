use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairtest::score::aux_outputs;
use crate::neural::{GradientSpace, MlpModel};
use crate::synthgen::Dataset;

/// Score of one raw feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub score: f64,
    /// Logical feature the column belongs to (its own name unless one-hot).
    pub group: String,
}

/// Score of a logical feature: a plain column or the mean over a one-hot group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub name: String,
    pub score: f64,
    pub columns: Vec<String>,
}

/// Which features drive the auxiliary model's view of the protected attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransparencyReport {
    pub features: Vec<FeatureScore>,
    pub groups: Vec<GroupScore>,
    /// Logical feature names by descending score, ties by position.
    pub ranking: Vec<String>,
}

impl TransparencyReport {
    /// Group scores in group order.
    pub fn group_scores(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.score).collect()
    }
}

/// Indices sorted by descending value; equal values keep ascending index.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// `|mean ∇f_aux|` over rows where protected attribute `attribute` is 0,
/// aggregated over one-hot groups by the mean of member columns.
pub fn transparency(
    aux: &MlpModel,
    dataset: &Dataset,
    attribute: usize,
    space: GradientSpace,
) -> Result<TransparencyReport> {
    if attribute >= dataset.n_protected() {
        return Err(Error::Config(format!(
            "protected attribute {attribute} does not exist ({} protected columns)",
            dataset.n_protected()
        )));
    }
    if aux.input_dim() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            context: "auxiliary model input vs dataset features",
            expected: dataset.n_features(),
            actual: aux.input_dim(),
        });
    }
    let outputs = aux_outputs(aux);
    let output = if outputs.len() == 1 {
        outputs[0]
    } else {
        *outputs.get(attribute).ok_or_else(|| {
            Error::Config(format!("auxiliary model has no output for attribute {attribute}"))
        })?
    };
    let subgroup: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset.protected[(i, attribute)] == 0.0)
        .collect();
    if subgroup.is_empty() {
        return Err(Error::invalid("transparency subgroup (protected attribute = 0) is empty"));
    }
    let d = dataset.n_features();
    let mut mean = vec![0.0; d];
    for &i in &subgroup {
        let g = aux.input_gradient_in(dataset.row(i), output, space)?;
        for (m, v) in mean.iter_mut().zip(g) {
            *m += v;
        }
    }
    let scale = 1.0 / subgroup.len() as f64;
    let column_scores: Vec<f64> = mean.iter().map(|m| (m * scale).abs()).collect();
    Ok(build_report(dataset, &column_scores))
}

/// Assembles a report from per-column scores.
pub fn build_report(dataset: &Dataset, column_scores: &[f64]) -> TransparencyReport {
    let logical = dataset.feature_groups();
    let mut owner = vec![String::new(); column_scores.len()];
    let groups: Vec<GroupScore> = logical
        .iter()
        .map(|g| {
            for &c in &g.columns {
                owner[c] = g.name.clone();
            }
            let score = g.columns.iter().map(|&c| column_scores[c]).sum::<f64>() / g.columns.len() as f64;
            GroupScore {
                name: g.name.clone(),
                score,
                columns: g.columns.iter().map(|&c| dataset.column_names[c].clone()).collect(),
            }
        })
        .collect();
    let features = column_scores
        .iter()
        .enumerate()
        .map(|(c, &score)| FeatureScore {
            name: dataset.column_names[c].clone(),
            score,
            group: owner[c].clone(),
        })
        .collect();
    let order = descending_order(&groups.iter().map(|g| g.score).collect::<Vec<_>>());
    let ranking = order.into_iter().map(|i| groups[i].name.clone()).collect();
    TransparencyReport {
        features,
        groups,
        ranking,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::neural::{Activation, Layer};
    use crate::synthgen::OneHotGroup;

    fn dataset(cols: usize, one_hot: Vec<OneHotGroup>) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| (0..cols).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.5).collect()).collect();
        let mut ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            vec![0.0; 6],
            Matrix::column(&[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]),
            (0..cols).map(|j| format!("f{j}")).collect(),
            vec!["c".into()],
        )
        .unwrap();
        ds.one_hot_groups = one_hot;
        ds
    }

    fn linear_sigmoid(w: &[f64], b: f64) -> MlpModel {
        let layer = Layer::new(Matrix::from_rows(&[w]).unwrap(), vec![b], Activation::Sigmoid).unwrap();
        MlpModel::from_layers(vec![layer]).unwrap()
    }

    #[test]
    fn constant_aux_gives_identity_ranking() {
        let ds = dataset(4, vec![]);
        let r = transparency(&linear_sigmoid(&[0.0; 4], 0.3), &ds, 0, GradientSpace::Probability).unwrap();
        assert!(r.features.iter().all(|f| f.score == 0.0));
        assert_eq!(r.ranking, vec!["f0", "f1", "f2", "f3"]);
    }

    #[test]
    fn linear_aux_ranks_by_weight_magnitude() {
        let ds = dataset(4, vec![]);
        let w = [0.2, -1.5, 0.7, -0.1];
        let r = transparency(&linear_sigmoid(&w, 0.0), &ds, 0, GradientSpace::Probability).unwrap();
        assert_eq!(r.ranking, vec!["f1", "f2", "f0", "f3"]);
        let ratio = r.features[1].score / r.features[0].score;
        assert!((ratio - 7.5).abs() < 1e-12);
    }

    #[test]
    fn one_hot_group_scores_are_means() {
        let ds = dataset(3, vec![]);
        let mut report = build_report(&ds, &[0.2, 0.4, 0.1]);
        assert_eq!(report.ranking, vec!["f1", "f0", "f2"]);
        let grouped = dataset(
            3,
            vec![OneHotGroup {
                name: "colour".into(),
                columns: vec![0, 1],
            }],
        );
        report = build_report(&grouped, &[0.2, 0.4, 0.1]);
        assert_eq!(report.groups.len(), 2);
        assert!((report.groups[0].score - 0.3).abs() < 1e-15);
        assert_eq!(report.ranking, vec!["colour", "f2"]);
        assert_eq!(report.features[1].group, "colour");
        assert_eq!(report.features[2].group, "f2");
    }

    #[test]
    fn empty_subgroup_is_an_error() {
        let mut ds = dataset(2, vec![]);
        ds.protected = Matrix::column(&[1.0; 6]);
        assert!(transparency(&linear_sigmoid(&[1.0, 1.0], 0.0), &ds, 0, GradientSpace::Probability).is_err());
    }

    #[test]
    fn ranking_is_a_permutation() {
        let ds = dataset(5, vec![]);
        let r = build_report(&ds, &[0.5, 0.5, 0.1, 0.9, 0.5]);
        assert_eq!(r.ranking, vec!["f3", "f0", "f1", "f4", "f2"]);
        let mut sorted = r.ranking.clone();
        sorted.sort();
        assert_eq!(sorted, ds.column_names);
    }

    #[test]
    fn json_shape() {
        let ds = dataset(2, vec![]);
        let r = build_report(&ds, &[0.5, 0.25]);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["features"][0]["name"], "f0");
        assert_eq!(v["features"][1]["score"], 0.25);
        assert_eq!(v["ranking"][0], "f0");
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// Distinct score thresholds, descending.
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub average_precision: f64,
}

impl PrCurve {
    /// Two-column `recall,precision` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for (r, p) in self.recall.iter().zip(&self.precision) {
            out.push_str(&format!("{r:?},{p:?}\n"));
        }
        out
    }
}

fn check_inputs(scores: &[f64], labels: &[f64]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "scores vs labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if let Some(v) = labels.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid(format!("labels must be 0 or 1, found {v}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let positives = labels.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric("average precision needs at least one positive label"));
    }
    Ok(positives)
}

/// Indices by descending score, ties broken by ascending index.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Non-interpolated average precision over the ranked list: the mean of
/// precision@k over the positions k holding a positive.
pub fn average_precision(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let positives = check_inputs(scores, labels)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, &i) in ranked(scores).iter().enumerate() {
        if labels[i] == 1.0 {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Precision and recall at every distinct threshold, from the highest score
/// down. `average_precision` is the ranked-list value of [`average_precision`].
pub fn pr_curve(scores: &[f64], labels: &[f64]) -> Result<PrCurve> {
    let positives = check_inputs(scores, labels)? as f64;
    let order = ranked(scores);
    let mut curve = PrCurve {
        thresholds: Vec::new(),
        precision: Vec::new(),
        recall: Vec::new(),
        average_precision: average_precision(scores, labels)?,
    };
    let mut tp = 0.0;
    let mut seen = 0.0;
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            tp += labels[order[k]];
            seen += 1.0;
            k += 1;
        }
        curve.thresholds.push(threshold);
        curve.precision.push(tp / seen);
        curve.recall.push(tp / positives);
    }
    Ok(curve)
}

/// Normalized discounted cumulative gain with linear gain over the full list.
/// The predicted order sorts by descending score with index tie-break.
pub fn ndcg(predicted: &[f64], relevance: &[f64]) -> Result<f64> {
    if predicted.len() != relevance.len() {
        return Err(Error::DimensionMismatch {
            context: "ndcg predicted vs relevance",
            expected: relevance.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::invalid("ndcg needs at least one item"));
    }
    if relevance.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::invalid("relevances must be finite and >= 0"));
    }
    if predicted.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("predicted scores contain NaN"));
    }
    let dcg = |order: &[usize]| -> f64 {
        order
            .iter()
            .enumerate()
            .map(|(pos, &i)| relevance[i] / ((pos + 2) as f64).log2())
            .sum()
    };
    let ideal = dcg(&ranked(relevance));
    if ideal <= 0.0 {
        return Err(Error::UndefinedMetric("ndcg with all-zero relevance"));
    }
    Ok((dcg(&ranked(predicted)) / ideal).min(1.0))
}

/// Score distributions of a fair and an unfair model on the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub fair_median: f64,
    pub unfair_median: f64,
    pub fair_iqr: f64,
    pub unfair_iqr: f64,
    /// `P(unfair > fair)` over all cross pairs, ties counting one half.
    pub p_unfair_greater: f64,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted_copy(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

pub fn compare_models(fair: &[f64], unfair: &[f64]) -> Result<ModelComparison> {
    if fair.is_empty() || unfair.is_empty() {
        return Err(Error::invalid("compare_models needs nonempty score lists"));
    }
    let f = sorted_copy(fair)?;
    let u = sorted_copy(unfair)?;
    let mut wins = 0.0;
    for &x in &u {
        let below = f.partition_point(|&v| v < x);
        let not_above = f.partition_point(|&v| v <= x);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(ModelComparison {
        fair_median: quantile(&f, 0.5),
        unfair_median: quantile(&u, 0.5),
        fair_iqr: quantile(&f, 0.75) - quantile(&f, 0.25),
        unfair_iqr: quantile(&u, 0.75) - quantile(&u, 0.25),
        p_unfair_greater: wins / (f.len() * u.len()) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[1.0, 1.0, 0.0]).unwrap(), 1.0);
        let ap = average_precision(&[0.9, 0.8, 0.1], &[1.0, 0.0, 1.0]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            average_precision(&[0.3, 0.2], &[0.0, 0.0]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(average_precision(&[0.3], &[0.5]).is_err());
    }

    #[test]
    fn ap_null_is_prevalence() {
        let mut rng = Rng::new(5);
        let n = 20_000;
        let labels: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.3 { 1.0 } else { 0.0 }).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let prevalence = labels.iter().sum::<f64>() / n as f64;
        assert!((average_precision(&scores, &labels).unwrap() - prevalence).abs() < 0.02);
    }

    #[test]
    fn ap_ties_use_index_order() {
        // ranked list is (0:pos, 1:neg, 2:pos) → (1 + 2/3)/2
        let ap = average_precision(&[0.5, 0.5, 0.5], &[1.0, 0.0, 1.0]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn pr_curve_examples() {
        let c = pr_curve(&[0.9, 0.8, 0.1], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.thresholds, vec![0.9, 0.8, 0.1]);
        assert_eq!(c.precision, vec![1.0, 0.5, 2.0 / 3.0]);
        assert_eq!(c.recall, vec![0.5, 0.5, 1.0]);
        assert!((c.average_precision - 5.0 / 6.0).abs() < 1e-15);

        let single = pr_curve(&[0.9, 0.1, 0.2], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((single.recall[0], single.precision[0]), (1.0, 1.0));

        let flat = pr_curve(&[0.4; 5], &[1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(flat.thresholds.len(), 1);
        assert_eq!((flat.precision[0], flat.recall[0]), (0.4, 1.0));
        assert_eq!(flat.to_csv(), "recall,precision\n1.0,0.4\n");
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg(&[3.0, 2.0, 1.0], &[0.5, 0.3, 0.1]).unwrap(), 1.0);
        let v = ndcg(&[1.0, 2.0, 3.0], &[0.5, 0.3, 0.1]).unwrap();
        let l3 = 3f64.log2();
        let want = (0.1 + 0.3 / l3 + 0.5 / 2.0) / (0.5 + 0.3 / l3 + 0.1 / 2.0);
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.7295).abs() < 1e-3);
        assert_eq!(ndcg(&[7.0], &[0.2]).unwrap(), 1.0);
        assert!(matches!(ndcg(&[1.0, 2.0], &[0.0, 0.0]), Err(Error::UndefinedMetric(_))));
        assert!(ndcg(&[1.0], &[-0.1]).is_err());
    }

    #[test]
    fn compare_examples() {
        let same = compare_models(&[0.1, 0.4, 0.2], &[0.2, 0.1, 0.4]).unwrap();
        assert_eq!(same.p_unfair_greater, 0.5);
        let fair = [0.1, 0.5, 0.3, 0.9];
        let shifted: Vec<f64> = fair.iter().map(|v| v + 1.0).collect();
        assert_eq!(compare_models(&fair, &shifted).unwrap().p_unfair_greater, 1.0);
        let c = compare_models(&[0.1, 0.2], &[0.15, 0.3]).unwrap();
        assert_eq!(c.p_unfair_greater, 0.75);
        assert!((c.fair_median - 0.15).abs() < 1e-15);
        assert!((c.unfair_median - 0.225).abs() < 1e-15);
        assert!((c.fair_iqr - 0.05).abs() < 1e-15);
        assert!(compare_models(&[], &[1.0]).is_err());
    }
}

//! Mutual information between a continuous feature and a discrete class,
//! via the k-nearest-neighbour estimator of Ross (2014).

use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::fairtest::TransparencyReport;
use crate::linalg::Rng;
use crate::synthgen::Dataset;

pub const DEFAULT_MI_NEIGHBORS: usize = 3;
const JITTER: f64 = 1e-10;
const STREAM_JITTER: u64 = 31;

/// `ψ(N) − ⟨ψ(N_c)⟩ + ψ(k) − ⟨ψ(m)⟩` in nats, clamped at zero. `m` counts the
/// points of any class strictly closer than the k-th same-class neighbour,
/// the point itself included. Features are jittered by `U(0, 1e-10)` under
/// `seed` to break exact ties.
pub fn mi_discrete_continuous(feature: &[f64], classes: &[f64], k: usize, seed: u64) -> Result<f64> {
    if feature.len() != classes.len() {
        return Err(Error::DimensionMismatch {
            context: "mutual information feature vs classes",
            expected: feature.len(),
            actual: classes.len(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("mutual information needs k >= 1"));
    }
    if feature.iter().chain(classes).any(|v| !v.is_finite()) {
        return Err(Error::invalid("mutual information inputs must be finite"));
    }
    let mut labels: Vec<f64> = classes.to_vec();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    let class_of: Vec<usize> = classes
        .iter()
        .map(|c| labels.partition_point(|l| l < c))
        .collect();
    let mut counts = vec![0usize; labels.len()];
    for &c in &class_of {
        counts[c] += 1;
    }
    if let Some((ci, &n)) = counts.iter().enumerate().find(|(_, &n)| n < k + 1) {
        return Err(Error::invalid(format!(
            "class {} has {n} member(s); the estimator needs at least k + 1 = {}",
            labels[ci],
            k + 1
        )));
    }
    let (lo, hi) = feature
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if labels.len() < 2 || lo == hi {
        return Ok(0.0);
    }

    let mut rng = Rng::derive(seed, STREAM_JITTER);
    let x: Vec<f64> = feature.iter().map(|v| v + rng.uniform() * JITTER).collect();
    let n = x.len();

    let mut all: Vec<f64> = x.clone();
    all.sort_by(f64::total_cmp);
    let per_class: Vec<Vec<f64>> = (0..labels.len())
        .map(|c| {
            let mut v: Vec<f64> = (0..n).filter(|&i| class_of[i] == c).map(|i| x[i]).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();

    let mut sum_m = 0.0;
    let mut sum_nc = 0.0;
    for i in 0..n {
        let same = &per_class[class_of[i]];
        let radius = kth_neighbor_distance(same, x[i], k);
        sum_m += digamma(count_within(&all, x[i], radius) as f64);
        sum_nc += digamma(same.len() as f64);
    }
    let nf = n as f64;
    let mi = digamma(nf) - sum_nc / nf + digamma(k as f64) - sum_m / nf;
    Ok(mi.max(0.0))
}

/// Distance from `v` (a member of sorted `vals`) to its k-th nearest other member.
fn kth_neighbor_distance(vals: &[f64], v: f64, k: usize) -> f64 {
    let pos = vals.partition_point(|&a| a < v);
    // skip exactly one copy of the point itself
    let (mut left, mut right) = (pos as isize - 1, pos + 1);
    let mut d = 0.0;
    for _ in 0..k {
        let dl = if left >= 0 { v - vals[left as usize] } else { f64::INFINITY };
        let dr = if right < vals.len() { vals[right] - v } else { f64::INFINITY };
        if dl <= dr {
            d = dl;
            left -= 1;
        } else {
            d = dr;
            right += 1;
        }
    }
    d
}

/// Points of sorted `all` with `|a − v| < radius`.
fn count_within(all: &[f64], v: f64, radius: f64) -> usize {
    let pos = all.partition_point(|&a| a < v);
    let mut count = 0;
    let mut j = pos;
    while j < all.len() && (all[j] - v).abs() < radius {
        count += 1;
        j += 1;
    }
    let mut j = pos;
    while j > 0 && (v - all[j - 1]).abs() < radius {
        count += 1;
        j -= 1;
    }
    count.max(1)
}

/// MI of every feature column against protected attribute `attribute`.
pub fn feature_mi(dataset: &Dataset, attribute: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    if attribute >= dataset.n_protected() {
        return Err(Error::Config(format!("protected attribute {attribute} does not exist")));
    }
    let c = dataset.protected.col(attribute);
    (0..dataset.n_features())
        .map(|j| mi_discrete_continuous(&dataset.features.col(j), &c, k, seed.wrapping_add(j as u64)))
        .collect()
}

/// NDCG of a transparency report's group ranking against per-group
/// (mean over one-hot members) MI estimates.
pub fn transparency_ndcg(report: &TransparencyReport, dataset: &Dataset, k: usize, seed: u64) -> Result<f64> {
    let mi = feature_mi(dataset, 0, k, seed)?;
    let groups = dataset.feature_groups();
    if groups.len() != report.groups.len() {
        return Err(Error::DimensionMismatch {
            context: "transparency groups vs dataset features",
            expected: groups.len(),
            actual: report.groups.len(),
        });
    }
    let relevance: Vec<f64> = groups
        .iter()
        .map(|g| g.columns.iter().map(|&c| mi[c]).sum::<f64>() / g.columns.len() as f64)
        .collect();
    super::ndcg(&report.group_scores(), &relevance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_is_zero() {
        let c: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        assert_eq!(mi_discrete_continuous(&[1.5; 20], &c, 3, 0).unwrap(), 0.0);
    }

    #[test]
    fn small_class_is_rejected() {
        let f: Vec<f64> = (0..10).map(f64::from).collect();
        let mut c = vec![0.0; 10];
        c[0] = 1.0;
        c[1] = 1.0;
        c[2] = 1.0;
        assert!(mi_discrete_continuous(&f, &c, 3, 0).is_err());
        c[3] = 1.0;
        assert!(mi_discrete_continuous(&f, &c, 3, 0).is_ok());
    }

    #[test]
    fn neighbor_helpers() {
        let v = [0.0, 1.0, 3.0, 6.0];
        assert_eq!(kth_neighbor_distance(&v, 1.0, 1), 1.0);
        assert_eq!(kth_neighbor_distance(&v, 1.0, 2), 2.0);
        assert_eq!(kth_neighbor_distance(&v, 1.0, 3), 5.0);
        assert_eq!(count_within(&v, 1.0, 2.0), 2);
        assert_eq!(count_within(&v, 1.0, 2.0001), 3);
    }

    #[test]
    fn independent_and_deterministic_cases() {
        let mut rng = Rng::new(9);
        let n = 2000;
        let f: Vec<f64> = rng.normals(n);
        let c: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { 1.0 } else { 0.0 }).collect();
        assert!(mi_discrete_continuous(&f, &c, 3, 1).unwrap() <= 0.05);
        let mut sorted = f.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        let c: Vec<f64> = f.iter().map(|&v| if v > median { 1.0 } else { 0.0 }).collect();
        let mi = mi_discrete_continuous(&f, &c, 3, 1).unwrap();
        assert!(mi >= 0.6 && mi <= 2f64.ln() + 0.05, "{mi}");
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = Rng::new(2);
        let n = 300;
        let f: Vec<f64> = rng.normals(n);
        let c: Vec<f64> = f.iter().map(|&v| if v + 0.5 * rng.normal() > 0.0 { 1.0 } else { 0.0 }).collect();
        let base = mi_discrete_continuous(&f, &c, 3, 0).unwrap();
        let perm = rng.permutation(n);
        let fp: Vec<f64> = perm.iter().map(|&i| f[i]).collect();
        let cp: Vec<f64> = perm.iter().map(|&i| c[i]).collect();
        let shuffled = mi_discrete_continuous(&fp, &cp, 3, 0).unwrap();
        assert!((base - shuffled).abs() < 1e-6);
    }
}

//! Dataset files: a CSV with header, a `.meta.json` sidecar, and for
//! synthetic data a `.provenance.json` with the per-row latent draws.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64, read_json, sibling, write_atomic, write_json};
use crate::linalg::Matrix;
use crate::synthgen::dataset::{Dataset, OneHotGroup};
use crate::synthgen::spec::{RowProvenance, SyntheticSpec};

pub const IFS_COLUMN: &str = "__ifs";
pub const UNFAIR_COLUMN: &str = "__unfair";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub column_names: Vec<String>,
    pub one_hot_groups: Vec<OneHotGroup>,
    pub protected_columns: Vec<String>,
    pub label_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    sibling(csv, ".meta.json")
}

pub fn provenance_path(csv: &Path) -> PathBuf {
    sibling(csv, ".provenance.json")
}

/// CSV text for a dataset, ground-truth columns appended when present.
pub fn dataset_csv(ds: &Dataset, label_column: &str) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<&str> = ds.column_names.iter().map(String::as_str).collect();
    header.push(label_column);
    header.extend(ds.protected_names.iter().map(String::as_str));
    if ds.ifs.is_some() {
        header.push(IFS_COLUMN);
    }
    if ds.fairness_label.is_some() {
        header.push(UNFAIR_COLUMN);
    }
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|&v| fmt_f64(v)).collect();
        rec.push(fmt_f64(ds.labels[i]));
        rec.extend(ds.protected.row(i).iter().map(|&v| fmt_f64(v)));
        if let Some(ifs) = &ds.ifs {
            rec.push(fmt_f64(ifs[i]));
        }
        if let Some(fl) = &ds.fairness_label {
            rec.push(fmt_f64(fl[i]));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// Writes `<csv>`, its sidecar, and provenance when the dataset carries it.
pub fn write_dataset(csv_path: &Path, ds: &Dataset, spec: Option<&SyntheticSpec>) -> Result<()> {
    let label_column = "y".to_string();
    write_atomic(csv_path, dataset_csv(ds, &label_column)?.as_bytes())?;
    let meta = DatasetMeta {
        column_names: ds.column_names.clone(),
        one_hot_groups: ds.one_hot_groups.clone(),
        protected_columns: ds.protected_names.clone(),
        label_column,
        spec: spec.cloned(),
        seed: spec.map(|s| s.seed),
    };
    write_json(&meta_path(csv_path), &meta)?;
    if let Some(prov) = &ds.provenance {
        write_json(&provenance_path(csv_path), prov)?;
    }
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. Provenance is attached when
/// the provenance file exists.
pub fn read_dataset(csv_path: &Path) -> Result<(Dataset, DatasetMeta)> {
    let meta: DatasetMeta = read_json(&meta_path(csv_path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(csv_path)
        .map_err(|e| Error::Parse {
            path: csv_path.to_owned(),
            line: 0,
            message: e.to_string(),
        })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: csv_path.to_owned(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let missing = |name: &str| Error::Config(format!("{}: missing column {name:?}", csv_path.display()));

    let feature_idx = meta
        .column_names
        .iter()
        .map(|c| find(c).ok_or_else(|| missing(c)))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = find(&meta.label_column).ok_or_else(|| missing(&meta.label_column))?;
    let protected_idx = meta
        .protected_columns
        .iter()
        .map(|c| find(c).ok_or_else(|| missing(c)))
        .collect::<Result<Vec<_>>>()?;
    let ifs_idx = find(IFS_COLUMN);
    let unfair_idx = find(UNFAIR_COLUMN);

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut protected = Vec::new();
    let mut ifs = Vec::new();
    let mut unfair = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: csv_path.to_owned(),
            line,
            message: e.to_string(),
        })?;
        let get = |j: usize| parse_f64(rec.get(j).unwrap_or(""), csv_path, line);
        for &j in &feature_idx {
            features.push(get(j)?);
        }
        labels.push(get(label_idx)?);
        for &j in &protected_idx {
            protected.push(get(j)?);
        }
        if let Some(j) = ifs_idx {
            ifs.push(get(j)?);
        }
        if let Some(j) = unfair_idx {
            unfair.push(get(j)?);
        }
    }
    let n = labels.len();
    let mut ds = Dataset::new(
        Matrix::new(n, feature_idx.len(), features)?,
        labels,
        Matrix::new(n, protected_idx.len(), protected)?,
        meta.column_names.clone(),
        meta.protected_columns.clone(),
    )?;
    ds.one_hot_groups = meta.one_hot_groups.clone();
    ds.ifs = ifs_idx.map(|_| ifs);
    ds.fairness_label = unfair_idx.map(|_| unfair);
    let prov_path = provenance_path(csv_path);
    if prov_path.exists() {
        let prov: Vec<RowProvenance> = read_json(&prov_path)?;
        ds.provenance = Some(prov);
    }
    ds.validate()?;
    Ok((ds, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{sample_dataset, SyntheticRecipe};
    use proptest::prelude::*;

    #[test]
    fn empty_dataset_is_header_only() {
        let spec = SyntheticRecipe {
            n_samples: 0,
            ..SyntheticRecipe::default()
        }
        .build()
        .unwrap();
        let ds = sample_dataset(&spec).unwrap();
        let text = dataset_csv(&ds, "y").unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end().split(',').count(), 12);
    }

    #[test]
    fn synthetic_round_trip_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let spec = SyntheticRecipe {
            n_samples: 40,
            ..SyntheticRecipe::default()
        }
        .build()
        .unwrap();
        let mut ds = sample_dataset(&spec).unwrap();
        ds.ifs = Some((0..40).map(|i| i as f64 / 7.0).collect());
        ds.fairness_label = Some((0..40).map(|i| (i % 2) as f64).collect());
        write_dataset(&path, &ds, Some(&spec)).unwrap();
        let (back, meta) = read_dataset(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(meta.spec.as_ref(), Some(&spec));
    }

    proptest! {
        #[test]
        fn csv_values_round_trip_bit_exactly(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
            let n = values.len();
            let ds = Dataset::new(
                Matrix::new(n, 1, values.clone()).unwrap(),
                vec![1.0; n],
                Matrix::new(n, 1, vec![0.0; n]).unwrap(),
                vec!["v".into()],
                vec!["c".into()],
            ).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.csv");
            write_dataset(&path, &ds, None).unwrap();
            let (back, _) = read_dataset(&path).unwrap();
            let a: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.features.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}

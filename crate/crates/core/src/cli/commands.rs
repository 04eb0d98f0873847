use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::config::{Resolved, RowSubset};
use crate::cli::ingest::ingest;
use crate::error::{Error, Result};
use crate::eval::{average_precision, compare_models, pr_curve, pr_curve_svg, transparency_ndcg, ModelComparison};
use crate::fairtest::{audit, transparency, AuditModels, ScoreRecord, Test};
use crate::io::{fmt_f64, parse_f64, read_json, sibling, write_atomic, write_json};
use crate::linalg::Rng;
use crate::neural::{
    evaluate, fit_logistic, targets_for, train_adversarial_on_split, train_on_split, Examples, Head,
    LinearModel, MlpModel, TargetRole, TrainReport,
};
use crate::synthgen::io::{read_dataset, write_dataset, IFS_COLUMN, UNFAIR_COLUMN};
use crate::synthgen::{fairness_labels, ifs_for_dataset, sample_dataset, std_dev, Dataset};

const STREAM_SPLIT: u64 = 41;
const STREAM_TARGET_INIT: u64 = 42;
const STREAM_AUX_INIT: u64 = 43;

/// Where the bias-0 twin of a synthetic dataset lives.
pub fn twin_path(data: &Path) -> PathBuf {
    sibling(data, "_twin.csv")
}

fn snapshot(r: &Resolved, command: &str) -> Result<()> {
    write_json(&r.out_dir.join(format!("{command}.config.json")), &r.config)
}

fn seed(r: &Resolved) -> u64 {
    r.config.train.optimizer.seed
}

// ---------------------------------------------------------------- generate

pub fn cmd_generate(r: &Resolved) -> Result<Vec<PathBuf>> {
    let mut written = vec![r.data.clone()];
    if let Some(ing) = &r.config.generate.ingest {
        let ds = ingest(ing, &r.resolve_path(&ing.csv))?;
        write_dataset(&r.data, &ds, None)?;
    } else {
        let spec = r.config.generate.synthetic.build()?;
        let ds = sample_dataset(&spec)?;
        write_dataset(&r.data, &ds, Some(&spec))?;
        let twin_spec = spec.with_bias(0.0)?;
        let twin = sample_dataset(&twin_spec)?;
        let tp = twin_path(&r.data);
        write_dataset(&tp, &twin, Some(&twin_spec))?;
        written.push(tp);
    }
    snapshot(r, "generate")?;
    Ok(written)
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_split(n: usize, train: f64, val: f64, seed: u64) -> Split {
    let perm = Rng::derive(seed, STREAM_SPLIT).permutation(n);
    let n_train = ((train * n as f64).round() as usize).min(n);
    let n_val = ((val * n as f64).round() as usize).min(n - n_train);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Split {
        train: sorted(&perm[..n_train]),
        val: sorted(&perm[n_train..n_train + n_val]),
        test: sorted(&perm[n_train + n_val..]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary_val_accuracy: Option<f64>,
}

/// Threshold inputs for synthetic ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sigma0: f64,
    pub kappa: f64,
}

fn metrics_of(report: &TrainReport, model: &MlpModel, test: &Dataset, role: TargetRole) -> Result<ModelMetrics> {
    let test_accuracy = if test.is_empty() {
        None
    } else {
        let ex = Examples {
            inputs: test.features.clone(),
            targets: targets_for(test, role, model)?,
        };
        Some(evaluate(model, &ex)?.1)
    };
    Ok(ModelMetrics {
        epochs_run: report.epochs_run,
        best_epoch: report.best_epoch,
        stopped_early: report.stopped_early,
        train_accuracy: report.train_accuracy,
        val_accuracy: report.val_accuracy,
        test_accuracy,
        adversary_val_accuracy: report.adversary_val_accuracy,
    })
}

fn linear_accuracy(model: &LinearModel, ds: &Dataset) -> Option<f64> {
    if ds.is_empty() {
        return None;
    }
    let hits = (0..ds.len())
        .filter(|&i| (model.predict(ds.row(i)) >= 0.5) == (ds.protected[(i, 0)] >= 0.5))
        .count();
    Some(hits as f64 / ds.len() as f64)
}

/// Trains target, auxiliary, linear and (optionally) fair models, plus the
/// reference model on the unbiased twin for synthetic data.
pub fn cmd_train(r: &Resolved) -> Result<BTreeMap<String, ModelMetrics>> {
    let t = &r.config.train;
    let (ds, meta) = read_dataset(&r.data)?;
    if ds.is_empty() {
        return Err(Error::invalid(format!("{}: dataset has no rows", r.data.display())));
    }
    let dir = r.models_dir();
    let split = make_split(ds.len(), t.split.train, t.split.val, seed(r));
    write_json(&dir.join("split.json"), &split)?;
    let (train, val, test) = (ds.subset(&split.train), ds.subset(&split.val), ds.subset(&split.test));
    let d = ds.n_features();
    let opt = &t.optimizer;

    let target_init = MlpModel::init(d, &t.hidden, 1, Head::Sigmoid, &mut Rng::derive(seed(r), STREAM_TARGET_INIT))?;
    let mut metrics = BTreeMap::new();

    let (target, rep) = train_on_split(&target_init, &train, &val, TargetRole::Label, opt)?;
    write_json(&dir.join("target.json"), &target)?;
    metrics.insert("target".to_string(), metrics_of(&rep, &target, &test, TargetRole::Label)?);

    let k = ds.n_protected();
    let aux_init = MlpModel::init(d, &t.aux_hidden, k.max(1), Head::Sigmoid, &mut Rng::derive(seed(r), STREAM_AUX_INIT))?;
    let (aux, rep) = train_on_split(&aux_init, &train, &val, TargetRole::Protected, opt)?;
    write_json(&dir.join("aux.json"), &aux)?;
    metrics.insert("aux".to_string(), metrics_of(&rep, &aux, &test, TargetRole::Protected)?);

    let linear = fit_logistic(&train, 0, &t.logistic)?;
    write_json(&dir.join("linear.json"), &linear)?;
    let mut extra = BTreeMap::new();
    extra.insert("linear_train_accuracy", linear_accuracy(&linear, &train));
    extra.insert("linear_test_accuracy", linear_accuracy(&linear, &test));

    if t.fair {
        let mut cfg = opt.clone();
        cfg.adversary = Some(t.adversary.clone());
        let (fair, rep) = train_adversarial_on_split(&target_init, &train, &val, &cfg)?;
        write_json(&dir.join("fair.json"), &fair)?;
        metrics.insert("fair".to_string(), metrics_of(&rep, &fair, &test, TargetRole::Label)?);
    }

    let tp = twin_path(&r.data);
    if meta.spec.is_some() && tp.exists() {
        let (twin, twin_meta) = read_dataset(&tp)?;
        let twin_spec = twin_meta
            .spec
            .ok_or_else(|| Error::Config(format!("{}: twin dataset has no spec", tp.display())))?;
        let (reference, rep) = train_on_split(
            &target_init,
            &twin.subset(&split.train),
            &twin.subset(&split.val),
            TargetRole::Label,
            opt,
        )?;
        write_json(&dir.join("reference.json"), &reference)?;
        metrics.insert(
            "reference".to_string(),
            metrics_of(&rep, &reference, &twin.subset(&split.test), TargetRole::Label)?,
        );
        let sigma0 = std_dev(&ifs_for_dataset(&reference, &twin, &twin_spec)?);
        write_json(
            &dir.join("ground_truth.json"),
            &GroundTruth {
                sigma0,
                kappa: t.kappa,
            },
        )?;
    }

    #[derive(Serialize)]
    struct Doc<'a> {
        models: &'a BTreeMap<String, ModelMetrics>,
        #[serde(flatten)]
        extra: &'a BTreeMap<&'static str, Option<f64>>,
    }
    write_json(
        &dir.join("metrics.json"),
        &Doc {
            models: &metrics,
            extra: &extra,
        },
    )?;
    snapshot(r, "train")?;
    Ok(metrics)
}

// ---------------------------------------------------------------- audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub model: String,
    pub rows: usize,
    pub delta: f64,
    pub tests: Vec<Test>,
    pub flagged: BTreeMap<Test, usize>,
    pub mean_score: BTreeMap<Test, f64>,
    pub degenerate_notes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unfair_rows: Option<usize>,
}

fn load_model(path: &Path) -> Result<MlpModel> {
    read_json(path)
}

fn load_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

fn scores_name(fair: bool) -> &'static str {
    if fair {
        "scores_fair.csv"
    } else {
        "scores.csv"
    }
}

/// Audits the target model (or the fair model with `fair`) on the configured
/// rows and writes scores, a summary, and the transparency report.
pub fn cmd_audit(r: &Resolved, fair: bool) -> Result<AuditSummary> {
    let sec = &r.config.audit;
    let (full, meta) = read_dataset(&r.data)?;
    let dir = r.models_dir();
    let model_name = if fair { "fair" } else { "target" };
    let target = load_model(&dir.join(format!("{model_name}.json")))?;
    let aux: Option<MlpModel> = load_optional(&dir.join("aux.json"))?;
    let linear: Option<LinearModel> = load_optional(&dir.join("linear.json"))?;
    let ground_truth: Option<GroundTruth> = load_optional(&dir.join("ground_truth.json"))?;

    let rows: Vec<usize> = match (sec.rows, load_optional::<Split>(&dir.join("split.json"))?) {
        (RowSubset::Test, Some(split)) => split.test,
        (RowSubset::Test, None) => {
            return Err(Error::Config(format!(
                "audit rows = test needs {}; run train first or set audit.rows = \"all\"",
                dir.join("split.json").display()
            )))
        }
        (RowSubset::All, _) => (0..full.len()).collect(),
    };
    let ds = full.subset(&rows);

    let mut models = AuditModels::new(&target);
    if let Some(a) = &aux {
        models = models.with_aux(a);
    }
    if let Some(l) = &linear {
        models = models.with_linear(l);
    }
    if let (Some(spec), Some(_)) = (&meta.spec, &ds.provenance) {
        models = models.with_spec(spec);
    }
    let cfg = &sec.config;
    let records = audit(&ds, &models, cfg)?;
    let tests = crate::fairtest::resolve_tests(&ds, &models, cfg)?;

    let truth = match (&meta.spec, &ground_truth) {
        (Some(spec), Some(gt)) if ds.provenance.is_some() => {
            let ifs = ifs_for_dataset(&target, &ds, spec)?;
            let labels = fairness_labels(&ifs, gt.sigma0, gt.kappa);
            Some((ifs, labels))
        }
        _ => None,
    };

    write_atomic(
        &r.out_dir.join(scores_name(fair)),
        scores_csv(&records, &rows, &tests, truth.as_ref())?.as_bytes(),
    )?;

    let n = records.len();
    let summary = AuditSummary {
        model: model_name.to_string(),
        rows: n,
        delta: cfg.delta,
        flagged: tests
            .iter()
            .map(|&t| (t, records.iter().filter(|rec| rec.flagged(t)).count()))
            .collect(),
        mean_score: tests
            .iter()
            .map(|&t| {
                let s: f64 = records.iter().filter_map(|rec| rec.score(t)).sum();
                (t, if n == 0 { 0.0 } else { s / n as f64 })
            })
            .collect(),
        tests: tests.clone(),
        degenerate_notes: records.iter().map(|rec| rec.notes.len()).sum(),
        unfair_rows: truth.as_ref().map(|(_, l)| l.iter().filter(|&&v| v == 1.0).count()),
    };
    let summary_name = if fair { "audit_summary_fair.json" } else { "audit_summary.json" };
    write_json(&r.out_dir.join(summary_name), &summary)?;

    if let Some(a) = &aux {
        if !ds.is_empty() {
            let report = transparency(a, &ds, sec.attribute, cfg.gradient_space)?;
            write_json(&r.out_dir.join("transparency.json"), &report)?;
        }
    }
    snapshot(r, "audit")?;
    Ok(summary)
}

fn scores_csv(
    records: &[ScoreRecord],
    rows: &[usize],
    tests: &[Test],
    truth: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row_index".to_string()];
    header.extend(tests.iter().map(|t| t.name().to_string()));
    header.extend(tests.iter().map(|t| format!("{t}_flag")));
    if truth.is_some() {
        header.push(IFS_COLUMN.into());
        header.push(UNFAIR_COLUMN.into());
    }
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (i, rec) in records.iter().enumerate() {
        let mut line = vec![rows[i].to_string()];
        line.extend(tests.iter().map(|&t| fmt_f64(rec.score(t).unwrap_or(0.0))));
        line.extend(tests.iter().map(|&t| u8::from(rec.flagged(t)).to_string()));
        if let Some((ifs, labels)) = truth {
            line.push(fmt_f64(ifs[i]));
            line.push(fmt_f64(labels[i]));
        }
        w.write_record(&line).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Score columns of an audit CSV, keyed by test, plus the ground-truth
/// columns when present.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub scores: BTreeMap<Test, Vec<f64>>,
    pub ifs: Option<Vec<f64>>,
    pub unfair: Option<Vec<f64>>,
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_owned(),
            line,
            message: e.to_string(),
        })?;
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_f64(rec.get(j).unwrap_or(""), path, line)?);
        }
    }
    let mut table = ScoreTable::default();
    for (name, col) in header.iter().zip(columns) {
        if name == IFS_COLUMN {
            table.ifs = Some(col);
        } else if name == UNFAIR_COLUMN {
            table.unfair = Some(col);
        } else if let Ok(t) = name.parse::<Test>() {
            table.scores.insert(t, col);
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    /// Average precision per test; `None` when no row is labelled unfair.
    pub average_precision: BTreeMap<Test, Option<f64>>,
    pub prevalence: Option<f64>,
    pub transparency_ndcg: Option<f64>,
    pub comparison: BTreeMap<Test, ModelComparison>,
}

pub fn cmd_evaluate(r: &Resolved, svg: bool) -> Result<EvaluateReport> {
    let unfair_path = r.out_dir.join(scores_name(false));
    let fair_path = r.out_dir.join(scores_name(true));
    let table = read_scores(&unfair_path)?;
    let fair_table = if fair_path.exists() {
        Some(read_scores(&fair_path)?)
    } else {
        None
    };
    if table.unfair.is_none() && fair_table.is_none() {
        return Err(Error::Config(format!(
            "{}: no {UNFAIR_COLUMN} ground-truth column and no {} to compare against",
            unfair_path.display(),
            scores_name(true)
        )));
    }

    let mut report = EvaluateReport {
        average_precision: BTreeMap::new(),
        prevalence: None,
        transparency_ndcg: None,
        comparison: BTreeMap::new(),
    };
    if let Some(labels) = &table.unfair {
        let positives = labels.iter().filter(|&&v| v == 1.0).count();
        if !labels.is_empty() {
            report.prevalence = Some(positives as f64 / labels.len() as f64);
        }
        let pr_dir = r.out_dir.join("pr");
        for (&test, scores) in &table.scores {
            if positives == 0 {
                report.average_precision.insert(test, None);
                continue;
            }
            let ap = average_precision(scores, labels)?;
            let curve = pr_curve(scores, labels)?;
            write_atomic(&pr_dir.join(format!("{test}.csv")), curve.to_csv().as_bytes())?;
            if svg {
                write_atomic(&pr_dir.join(format!("{test}.svg")), pr_curve_svg(test.name(), &curve).as_bytes())?;
            }
            report.average_precision.insert(test, Some(ap));
        }
    }
    if let Some(fair) = &fair_table {
        for (test, unfair_scores) in &table.scores {
            if let Some(fair_scores) = fair.scores.get(test) {
                if !fair_scores.is_empty() && !unfair_scores.is_empty() {
                    report.comparison.insert(*test, compare_models(fair_scores, unfair_scores)?);
                }
            }
        }
    }
    let tpath = r.out_dir.join("transparency.json");
    if tpath.exists() {
        let tr = read_json(&tpath)?;
        let (ds, _) = read_dataset(&r.data)?;
        let rows = match load_optional::<Split>(&r.models_dir().join("split.json"))? {
            Some(split) if r.config.audit.rows == RowSubset::Test => split.test,
            _ => (0..ds.len()).collect(),
        };
        match transparency_ndcg(&tr, &ds.subset(&rows), r.config.evaluate.mi_neighbors, seed(r)) {
            Ok(v) => report.transparency_ndcg = Some(v),
            Err(Error::UndefinedMetric(_)) => {}
            Err(e) => return Err(e),
        }
    }
    write_json(&r.out_dir.join("evaluation.json"), &report)?;
    snapshot(r, "evaluate")?;
    Ok(report)
}

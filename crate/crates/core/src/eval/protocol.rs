//! Repeated patient-wise evaluation: split, tune, fit, calibrate, score.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dsp::stats::percentile;
use crate::error::{Error, Result};
use crate::eval::metrics::{metrics, ConfusionCounts};
use crate::eval::roc::roc_auc;
use crate::eval::split::{patient_split, DEFAULT_TEST_FRACTION};
use crate::par;
use crate::svm::grid::check_disjoint;
use crate::svm::{grid_search_cv, HyperGrid, SvmParams, TrainedModel};

/// FPR grid of the averaged ROC curve.
pub const ROC_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub splits: usize,
    pub grid: HyperGrid,
    pub folds: usize,
    pub test_fraction: f64,
    pub master_seed: u64,
    pub svm: SvmParams,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            splits: 50,
            grid: HyperGrid::default(),
            folds: 20,
            test_fraction: DEFAULT_TEST_FRACTION,
            master_seed: 0,
            svm: SvmParams::new(1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub seed: u64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub mcc: f64,
    pub f1: f64,
    pub auc: f64,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub cv_balanced_accuracy: f64,
    pub counts: ConfusionCounts,
    pub train_patients: Vec<String>,
    pub test_patients: Vec<String>,
    #[serde(skip)]
    pub roc_on_grid: Vec<f64>,
    #[serde(skip)]
    pub rhythm_hits: BTreeMap<String, (usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSplit {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Summary {
    /// Mean with the 2.5/97.5 percentiles, widened to contain the mean.
    pub fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Summary {
            mean,
            ci_low: percentile(values, 0.025).min(mean),
            ci_high: percentile(values, 0.975).max(mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRoc {
    pub fpr: Vec<f64>,
    pub tpr_mean: Vec<f64>,
    pub tpr_lo: Vec<f64>,
    pub tpr_hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhythmSummary {
    pub snippets: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub feature_order: Vec<String>,
    pub master_seed: u64,
    pub splits_requested: usize,
    pub grid_points: usize,
    pub folds: usize,
    pub per_split: Vec<SplitResult>,
    pub failed_splits: Vec<FailedSplit>,
    pub aggregate: BTreeMap<String, Summary>,
    pub roc_mean: MeanRoc,
    pub per_rhythm: BTreeMap<String, RhythmSummary>,
    /// Patient-disjointness checks that passed (one per split plus one per fold).
    pub leakage_checks: usize,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn roc_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["fpr", "tpr_mean", "tpr_lo", "tpr_hi"])?;
        let r = &self.roc_mean;
        for i in 0..r.fpr.len() {
            w.write_record([
                r.fpr[i].to_string(),
                r.tpr_mean[i].to_string(),
                r.tpr_lo[i].to_string(),
                r.tpr_hi[i].to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn roc_grid() -> Vec<f64> {
    (0..ROC_POINTS)
        .map(|i| i as f64 / (ROC_POINTS - 1) as f64)
        .collect()
}

fn run_split(data: &Dataset, cfg: &ProtocolConfig, seed: u64) -> Result<SplitResult> {
    let split = patient_split(&data.groups, &data.y, cfg.test_fraction, seed)?;
    let (train_idx, test_idx) = split.indices(&data.groups);
    check_disjoint(
        train_idx.iter().map(|&i| &data.groups[i]),
        test_idx.iter().map(|&i| &data.groups[i]),
    )?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);

    let search = grid_search_cv(
        &train.x,
        &train.y,
        &train.groups,
        &cfg.grid,
        cfg.folds,
        seed,
        &cfg.svm,
    )?;
    let params = SvmParams {
        gamma: search.gamma,
        c: search.c,
        ..cfg.svm.clone()
    };
    let model = TrainedModel::fit(&train.x, &train.y, data.feature_names.clone(), &params, seed)?;
    let preds = model.predict_batch(&test.x)?;
    let decisions: Vec<f64> = preds.iter().map(|p| p.decision).collect();
    let predicted: Vec<f64> = preds.iter().map(|p| p.label.sign()).collect();
    let counts = ConfusionCounts::from_labels(&test.y, &predicted);
    let m = metrics(&counts)?;
    let (auc, curve) = roc_auc(&decisions, &test.y)?;

    let mut rhythm_hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (i, r) in test.rhythms.iter().enumerate() {
        if let Some(r) = r {
            let e = rhythm_hits.entry(r.as_str().to_string()).or_default();
            e.0 += (predicted[i] == test.y[i]) as usize;
            e.1 += 1;
        }
    }
    Ok(SplitResult {
        seed,
        balanced_accuracy: m.balanced_accuracy,
        sensitivity: m.sensitivity,
        specificity: m.specificity,
        mcc: m.mcc,
        f1: m.f1,
        auc,
        gamma: search.gamma,
        c: search.c,
        cv_balanced_accuracy: search.score,
        counts,
        train_patients: split.train,
        test_patients: split.test,
        roc_on_grid: roc_grid().iter().map(|&x| curve.tpr_at(x)).collect(),
        rhythm_hits,
    })
}

/// Runs `cfg.splits` independent split/tune/test rounds. Splits that fail
/// for data reasons are listed in `failed_splits`; leakage is fatal.
pub fn run_protocol(data: &Dataset, cfg: &ProtocolConfig) -> Result<EvaluationReport> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if cfg.splits == 0 {
        return Err(Error::InvalidParameter("at least one split is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let seeds: Vec<u64> = (0..cfg.splits).map(|_| rng.random()).collect();
    let outcomes = par::map(&seeds, |&s| run_split(data, cfg, s));

    let mut per_split = Vec::new();
    let mut failed_splits = Vec::new();
    for (seed, r) in seeds.iter().zip(outcomes) {
        match r {
            Ok(s) => per_split.push(s),
            Err(e @ Error::Leakage(_)) => return Err(e),
            Err(e) => failed_splits.push(FailedSplit {
                seed: *seed,
                error: e.to_string(),
            }),
        }
    }
    if per_split.is_empty() {
        return Err(Error::Split(format!(
            "all {} splits failed; first error: {}",
            cfg.splits, failed_splits[0].error
        )));
    }

    let mut aggregate = BTreeMap::new();
    type Column = (&'static str, fn(&SplitResult) -> f64);
    let columns: [Column; 6] = [
        ("balanced_accuracy", |s| s.balanced_accuracy),
        ("sensitivity", |s| s.sensitivity),
        ("specificity", |s| s.specificity),
        ("mcc", |s| s.mcc),
        ("f1", |s| s.f1),
        ("auc", |s| s.auc),
    ];
    for (name, get) in columns {
        let v: Vec<f64> = per_split.iter().map(get).collect();
        aggregate.insert(name.to_string(), Summary::of(&v));
    }

    let fpr = roc_grid();
    let (mut tpr_mean, mut tpr_lo, mut tpr_hi) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..fpr.len() {
        let col: Vec<f64> = per_split.iter().map(|s| s.roc_on_grid[k]).collect();
        let s = Summary::of(&col);
        tpr_mean.push(s.mean);
        tpr_lo.push(s.ci_low);
        tpr_hi.push(s.ci_high);
    }

    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &per_split {
        for (k, (ok, n)) in &s.rhythm_hits {
            let e = hits.entry(k.clone()).or_default();
            e.0 += ok;
            e.1 += n;
        }
    }
    let per_rhythm = hits
        .into_iter()
        .map(|(k, (ok, n))| {
            (
                k,
                RhythmSummary {
                    snippets: n,
                    accuracy: ok as f64 / n as f64,
                },
            )
        })
        .collect();

    Ok(EvaluationReport {
        feature_order: data.feature_names.clone(),
        master_seed: cfg.master_seed,
        splits_requested: cfg.splits,
        grid_points: cfg.grid.len(),
        folds: cfg.folds,
        leakage_checks: per_split.len() * (1 + cfg.folds),
        per_split,
        failed_splits,
        aggregate,
        roc_mean: MeanRoc {
            fpr,
            tpr_mean,
            tpr_lo,
            tpr_hi,
        },
        per_rhythm,
    })
}

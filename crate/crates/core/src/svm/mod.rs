//! RBF support vector machine: robust scaling, SMO training, sigmoid
//! calibration and hyperparameter search.

pub mod grid;
pub mod kernel;
pub mod platt;
pub mod scaler;
pub mod smo;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Label;
pub use grid::{grid_search_cv, patient_folds, CvRow, GridSearch, HyperGrid};
use kernel::{rbf, CachedKernel, DenseKernel, KernelRows};
pub use platt::{fit_sigmoid, Sigmoid};
pub use scaler::{fit_scaler, Scaler};
use smo::{solve, SolverOptions};

/// Kernel matrices up to this size are built densely; larger problems use
/// the row cache with the same cap.
pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub gamma: f64,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_bytes: usize,
}

impl SvmParams {
    pub fn new(gamma: f64, c: f64) -> Self {
        SvmParams {
            gamma,
            c,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_bytes: DEFAULT_CACHE_BYTES,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// An uncalibrated kernel expansion over scaled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub gamma: f64,
    pub c: f64,
    pub bias: f64,
    /// Signed `alpha_i * y_i` for every support vector.
    pub dual_coefficients: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
    pub converged: bool,
    pub kkt_gap: f64,
}

impl Svm {
    /// `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    fn from_solution(x: &[Vec<f64>], y: &[f64], params: &SvmParams, sol: &smo::DualSolution) -> Self {
        let mut support_vectors = Vec::new();
        let mut dual_coefficients = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(x[i].clone());
                dual_coefficients.push(a * y[i]);
            }
        }
        Svm {
            gamma: params.gamma,
            c: params.c,
            bias: sol.bias,
            dual_coefficients,
            support_vectors,
            converged: sol.converged,
            kkt_gap: sol.kkt_gap,
        }
    }
}

pub(crate) fn validate_training(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    let first = x.first().ok_or(Error::EmptyTrainingSet)?;
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    if let Some(bad) = x.iter().find(|r| r.len() != first.len()) {
        return Err(Error::Shape {
            expected: first.len(),
            got: bad.len(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidParameter("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn validate_params(params: &SvmParams) -> Result<()> {
    if !(params.gamma > 0.0 && params.gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {}",
            params.gamma
        )));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    Ok(())
}

/// Trains on already scaled rows `x` with labels in {-1, +1}.
pub fn train_svm(x: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<Svm> {
    validate_training(x, y)?;
    validate_params(params)?;
    let n = x.len();
    let sol = if n * n * std::mem::size_of::<f64>() <= params.cache_bytes {
        let mut k = DenseKernel::from_rows(x, params.gamma);
        solve(&mut k, y, &params.solver(), None)
    } else {
        let mut k = CachedKernel::new(x, params.gamma, params.cache_bytes);
        solve(&mut k, y, &params.solver(), None)
    };
    Ok(Svm::from_solution(x, y, params, &sol))
}

/// Trains against a precomputed kernel, optionally warm-started from a
/// smaller-C solution. Returns the model and the full dual vector.
pub fn train_on_kernel<K: KernelRows>(
    kernel: &mut K,
    x: &[Vec<f64>],
    y: &[f64],
    params: &SvmParams,
    warm_start: Option<&[f64]>,
) -> (Svm, Vec<f64>) {
    let sol = solve(kernel, y, &params.solver(), warm_start);
    let svm = Svm::from_solution(x, y, params, &sol);
    (svm, sol.alpha)
}

/// Stratified fold labels that do not depend on which class is called
/// positive: a label-blind shuffle followed by per-class round robin.
fn stratified_folds(y: &[f64], folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut out = vec![0; y.len()];
    for i in order {
        let counter = if y[i] > 0.0 { &mut pos } else { &mut neg };
        out[i] = *counter % folds;
        *counter += 1;
    }
    out
}

pub const CALIBRATION_FOLDS: usize = 5;

/// Decision values for calibration, each produced by a model that did not
/// see the row. Falls back to in-sample values when some fold would leave
/// a single class for training.
pub fn held_out_decisions(
    x: &[Vec<f64>],
    y: &[f64],
    params: &SvmParams,
    seed: u64,
) -> Result<(Vec<f64>, bool)> {
    validate_training(x, y)?;
    let fold = stratified_folds(y, CALIBRATION_FOLDS, seed);
    let mut out = vec![0.0; x.len()];
    for k in 0..CALIBRATION_FOLDS {
        let train: Vec<usize> = (0..x.len()).filter(|&i| fold[i] != k).collect();
        let test: Vec<usize> = (0..x.len()).filter(|&i| fold[i] == k).collect();
        if test.is_empty() {
            continue;
        }
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let svm = match train_svm(&xt, &yt, params) {
            Ok(m) => m,
            Err(Error::SingleClass) => {
                let full = train_svm(x, y, params)?;
                return Ok((x.iter().map(|r| full.decision(r)).collect(), true));
            }
            Err(e) => return Err(e),
        };
        for &i in &test {
            out[i] = svm.decision(&x[i]);
        }
    }
    Ok((out, false))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub probability: f64,
    pub decision: f64,
}

/// Scaler, kernel expansion and calibration in one serializable artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_order: Vec<String>,
    pub scaler: Scaler,
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub dual_coefficients: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl TrainedModel {
    /// Fits scaler, SVM and calibration on raw feature rows.
    pub fn fit(
        raw: &[Vec<f64>],
        y: &[f64],
        feature_order: Vec<String>,
        params: &SvmParams,
        seed: u64,
    ) -> Result<Self> {
        validate_training(raw, y)?;
        if feature_order.len() != raw[0].len() {
            return Err(Error::Shape {
                expected: feature_order.len(),
                got: raw[0].len(),
            });
        }
        let scaler = Scaler::fit(raw)?;
        let x = scaler.transform(raw)?;
        let svm = train_svm(&x, y, params)?;
        let mut flags = Vec::new();
        for &j in &scaler.floored {
            flags.push(format!("{}:iqr_floor", feature_order[j]));
        }
        if !svm.converged {
            flags.push(format!("not_converged:kkt_gap={}", svm.kkt_gap));
        }
        let (f, in_sample) = held_out_decisions(&x, y, params, seed)?;
        if in_sample {
            flags.push("calibration:in_sample".into());
        }
        let fit = fit_sigmoid(&f, y)?;
        if fit.flat {
            flags.push("calibration:flat".into());
        }
        Ok(TrainedModel {
            feature_order,
            scaler,
            gamma: svm.gamma,
            c: svm.c,
            bias: svm.bias,
            platt_a: fit.sigmoid.a,
            platt_b: fit.sigmoid.b,
            dual_coefficients: svm.dual_coefficients,
            support_vectors: svm.support_vectors,
            flags,
        })
    }

    pub fn sigmoid(&self) -> Sigmoid {
        Sigmoid {
            a: self.platt_a,
            b: self.platt_b,
        }
    }

    /// Decision value for an already scaled row.
    pub fn decision_scaled(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Label from the sign of the decision value (0 counts as SC);
    /// probability from the sigmoid.
    pub fn predict(&self, raw: &[f64]) -> Result<Prediction> {
        let x = self.scaler.transform_row(raw)?;
        let decision = self.decision_scaled(&x);
        Ok(Prediction {
            label: if decision >= 0.0 { Label::Sc } else { Label::Ar },
            probability: self.sigmoid().probability(decision),
            decision,
        })
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        let d = self.feature_order.len();
        let shape = |got: usize| Error::Shape { expected: d, got };
        if self.scaler.medians.len() != d || self.scaler.iqrs.len() != d {
            return Err(shape(self.scaler.medians.len()));
        }
        if let Some(sv) = self.support_vectors.iter().find(|sv| sv.len() != d) {
            return Err(shape(sv.len()));
        }
        if self.support_vectors.len() != self.dual_coefficients.len() {
            return Err(Error::Shape {
                expected: self.support_vectors.len(),
                got: self.dual_coefficients.len(),
            });
        }
        Ok(())
    }
}

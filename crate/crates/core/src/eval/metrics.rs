//! Confusion-matrix metrics with SC as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts from true and predicted signs (+1 = SC).
    pub fn from_labels(truth: &[f64], predicted: &[f64]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t > 0.0, p > 0.0) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts with the classes swapped.
    pub fn relabeled(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub mcc: f64,
    pub f1: f64,
    /// False when one class is absent, so a rate is undefined (and set to 0).
    pub defined: bool,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let sens = ratio(c.tp, c.tp + c.fn_);
    let spec = ratio(c.tn, c.tn + c.fp);
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / den.sqrt()
    };
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_).unwrap_or(0.0);
    // one rounding: (tp (tn + fp) + tn (tp + fn)) / (2 (tp + fn) (tn + fp))
    let balanced_accuracy = match (sens, spec) {
        (Some(_), Some(_)) => {
            let num = c.tp * (c.tn + c.fp) + c.tn * (c.tp + c.fn_);
            num as f64 / (2 * (c.tp + c.fn_) * (c.tn + c.fp)) as f64
        }
        _ => (sens.unwrap_or(0.0) + spec.unwrap_or(0.0)) / 2.0,
    };
    Ok(Metrics {
        balanced_accuracy,
        sensitivity: sens.unwrap_or(0.0),
        specificity: spec.unwrap_or(0.0),
        mcc,
        f1,
        defined: sens.is_some() && spec.is_some(),
    })
}

//! Per-snippet circulation probability over a recording.

use serde::{Deserialize, Serialize};

use crate::dataset::process_recording;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::signal::{Label, Recording};
use crate::svm::TrainedModel;

/// Snippets in the centered sliding mean (10 s at a 2 s stride).
pub const SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub start_time_s: f64,
    pub probability: f64,
    pub label: Label,
    pub smoothed: f64,
    pub pause: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub points: Vec<TimelinePoint>,
    pub rejected: usize,
    pub warnings: Vec<String>,
}

impl Timeline {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["start_time_s", "prob", "label", "prob_smoothed"])?;
        for p in &self.points {
            w.write_record([
                p.start_time_s.to_string(),
                p.probability.to_string(),
                p.label.as_str().to_string(),
                p.smoothed.to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Centered mean over `window` values of each run of equal `pause` ids; the
/// window shrinks at run edges. Points must be in time order.
pub fn smooth_within_pauses(probabilities: &[f64], pauses: &[usize], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut out = vec![0.0; probabilities.len()];
    let mut start = 0;
    while start < probabilities.len() {
        let mut end = start;
        while end < probabilities.len() && pauses[end] == pauses[start] {
            end += 1;
        }
        for (i, slot) in out.iter_mut().enumerate().take(end).skip(start) {
            let lo = i.saturating_sub(half).max(start);
            let hi = (i + half + 1).min(end);
            *slot = probabilities[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        }
        start = end;
    }
    out
}

/// Scores every accepted snippet of `rec` with `model`.
pub fn timeline(model: &TrainedModel, rec: &Recording) -> Result<Timeline> {
    let set = FeatureSet::parse(&model.feature_order.join(","))?;
    let ex = process_recording(rec)?;
    let mut probs = Vec::with_capacity(ex.rows.len());
    let mut labels = Vec::with_capacity(ex.rows.len());
    for row in &ex.rows {
        let p = model.predict(&set.select(&row.features.values))?;
        probs.push(p.probability);
        labels.push(p.label);
    }
    let pauses: Vec<usize> = ex.rows.iter().map(|r| r.pause).collect();
    let smoothed = smooth_within_pauses(&probs, &pauses, SMOOTHING_WINDOW);
    let points = ex
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| TimelinePoint {
            start_time_s: r.start_time_s,
            probability: probs[i],
            label: labels[i],
            smoothed: smoothed[i],
            pause: r.pause,
        })
        .collect::<Vec<_>>();
    let mut warnings = Vec::new();
    if points.is_empty() {
        warnings.push(format!("{}: no accepted snippets", rec.patient_id));
    }
    Ok(Timeline {
        points,
        rejected: ex.rejections.len(),
        warnings,
    })
}

//! ROC curves by threshold sweep and their vertical averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    /// TPR at `x`, linear between curve points; on a vertical run the
    /// highest TPR reached at that FPR wins.
    pub fn tpr_at(&self, x: f64) -> f64 {
        let last = self.fpr.iter().rposition(|&f| f <= x).unwrap_or(0);
        if last + 1 >= self.fpr.len() || self.fpr[last] == x {
            return self.tpr[last];
        }
        let (x0, x1) = (self.fpr[last], self.fpr[last + 1]);
        let (y0, y1) = (self.tpr[last], self.tpr[last + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// AUC by the trapezoid rule over a sweep of the distinct scores, higher
/// score meaning SC. Tied scores move the curve diagonally, which counts
/// every tied positive/negative pair as one half.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<(f64, RocCurve)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let p = labels.iter().filter(|&&y| y > 0.0).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut fpr, mut tpr) = (vec![0.0], vec![0.0]);
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tp, mut prev_fp) = (0usize, 0usize);
    // trapezoids in count units, so the area is an exact integer
    let mut twice_area: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] > 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - prev_fp) as u64 * (tp + prev_tp) as u64;
        (prev_tp, prev_fp) = (tp, fp);
        fpr.push(fp as f64 / n as f64);
        tpr.push(tp as f64 / p as f64);
    }
    let auc = twice_area as f64 / (2 * p as u64 * n as u64) as f64;
    Ok((auc, RocCurve { fpr, tpr }))
}

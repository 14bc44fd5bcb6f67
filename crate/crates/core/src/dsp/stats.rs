//! Descriptive statistics with population (biased) moment estimators.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Relative variance below which a sample is treated as constant.
const CONSTANT_EPS: f64 = 1e-24;

fn is_flat(x: &[f64], m2: f64) -> bool {
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    m2 <= CONSTANT_EPS * scale * scale || m2 == 0.0
}

/// Third standardized moment; `None` for constant or empty input.
pub fn skewness(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let (m2, m3, _) = central_moments(x);
    if is_flat(x, m2) {
        return None;
    }
    Some(m3 / m2.powf(1.5))
}

/// Fourth standardized moment (not excess); `None` for constant or empty input.
pub fn kurtosis(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let (m2, _, m4) = central_moments(x);
    if is_flat(x, m2) {
        return None;
    }
    Some(m4 / (m2 * m2))
}

/// Percentile of already sorted data with linear interpolation between
/// order statistics (`q` in `[0, 1]`).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = h - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn percentile(x: &[f64], q: f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub fn median(x: &[f64]) -> f64 {
    percentile(x, 0.5)
}

/// Pearson correlation; 0 when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Centered moving average of odd or even `width`, shrinking at the edges
/// to the samples that exist.
pub fn rolling_mean_centered(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || width <= 1 {
        return x.to_vec();
    }
    let left = width / 2;
    let right = width - left;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Centered moving average that treats samples outside the signal as zero,
/// so every output is divided by the full `width`.
pub fn rolling_mean_zero_padded(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || width <= 1 {
        return x.to_vec();
    }
    let left = width / 2;
    let right = width - left;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

pub fn first_difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn mean_abs(x: &[f64]) -> f64 {
    mean(&x.iter().map(|v| v.abs()).collect::<Vec<_>>())
}

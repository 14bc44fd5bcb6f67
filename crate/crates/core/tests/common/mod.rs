//! Independent reference implementations used by the integration tests.
//! Everything here is written the slow, obvious way on purpose.
#![allow(dead_code)]

use std::f64::consts::PI;

use accpulse::signal::Snippet;
use accpulse::synth::{synth_snippet, Regime, SynthParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: f64 = 250.0;

/// `z(k) = sum_n d_n d_{n+k} / sum_n d_n^2` for `k = 0..N`.
pub fn direct_autocorrelation(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let energy: f64 = d.iter().map(|x| x * x).sum();
    (0..n)
        .map(|k| (0..n - k).map(|i| d[i] * d[i + k]).sum::<f64>() / energy)
        .collect()
}

/// Largest strict local maximum of `z` over `1 <= k < N/2 - 1`.
pub fn direct_nontrivial_max(z: &[f64]) -> Option<(usize, f64)> {
    let half = z.len() / 2;
    let mut best: Option<(usize, f64)> = None;
    for k in 1..half - 1 {
        if z[k] > z[k - 1] && z[k] > z[k + 1] && best.is_none_or(|(_, b)| z[k] > b) {
            best = Some((k, z[k]));
        }
    }
    best
}

/// DFT coefficients `X_k = sum_n x_n exp(-2 pi i k n / N)` for `k = 0..=N/2`.
pub fn direct_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                // reduce k*i mod N first so the angle stays accurate
                let phase = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn magnitude((re, im): (f64, f64)) -> f64 {
    (re * re + im * im).sqrt()
}

/// Sum of `|X_k|^2 / N` over bins with `lo <= f_k < hi`.
pub fn direct_band_power(x: &[f64], lo: f64, hi: f64) -> f64 {
    let n = x.len();
    direct_dft(x)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * FS / n as f64;
            f >= lo && f < hi
        })
        .map(|(_, c)| magnitude(c).powi(2) / n as f64)
        .sum()
}

/// `sum f_k * 2|X_k| / N` over `2 <= f_k <= 30` Hz.
pub fn direct_amsa(x: &[f64]) -> f64 {
    let n = x.len();
    direct_dft(x)
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * FS / n as f64, c))
        .filter(|(f, _)| (2.0..=30.0).contains(f))
        .map(|(f, c)| f * 2.0 * magnitude(c) / n as f64)
        .sum()
}

/// Cosine similarity of the magnitude spectra over `1 <= f_k <= 20` Hz.
pub fn direct_spectral_overlap(a: &[f64], e: &[f64]) -> f64 {
    let n = a.len();
    let (da, de) = (direct_dft(a), direct_dft(e));
    let (mut dot, mut na, mut ne) = (0.0, 0.0, 0.0);
    for k in 0..da.len() {
        let f = k as f64 * FS / n as f64;
        if (1.0..=20.0).contains(&f) {
            let (x, y) = (magnitude(da[k]), magnitude(de[k]));
            dot += x * y;
            na += x * x;
            ne += y * y;
        }
    }
    dot / (na * ne).sqrt()
}

pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Linear-interpolation percentile, rank `q (n - 1)` in the sorted sample.
pub fn direct_percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = q * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

/// 75th percentile of Pearson correlations over all pairs of full
/// `len`-sample windows centered on `positions`.
pub fn direct_windowed_correlation(signal: &[f64], positions: &[usize], len: usize) -> Option<f64> {
    let windows: Vec<&[f64]> = positions
        .iter()
        .filter(|&&p| p >= len / 2 && p - len / 2 + len <= signal.len())
        .map(|&p| &signal[p - len / 2..p - len / 2 + len])
        .collect();
    if windows.len() < 2 {
        return None;
    }
    let mut corr = Vec::new();
    for i in 0..windows.len() {
        for j in 0..windows.len() {
            if i < j {
                corr.push(direct_pearson(windows[i], windows[j]));
            }
        }
    }
    Some(direct_percentile(&corr, 0.75))
}

/// Error relative to the larger of `|expected|` and `scale`.
pub fn rel_err(got: f64, expected: f64, scale: f64) -> f64 {
    (got - expected).abs() / expected.abs().max(scale).max(f64::MIN_POSITIVE)
}

/// A spread of realistic and adversarial snippets: every synthetic regime
/// at several noise levels, plus white noise.
pub fn random_snippets(count: usize, seed: u64) -> Vec<Snippet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i % 6 == 5 {
                let a: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
                let e: Vec<f64> = (0..1000).map(|_| rng.random_range(-0.5..0.5)).collect();
                return Snippet::new(&a, &e, accpulse::Label::Ar, "noise", 0.0);
            }
            let regime = Regime::ALL[i % 5];
            let mut p = SynthParams::single(regime, 4.0, rng.random());
            p.acc_noise_sigma = rng.random_range(0.01..0.2);
            p.ecg_noise_sigma = rng.random_range(0.005..0.05);
            synth_snippet(regime, &p).expect("valid params").0
        })
        .collect()
}

/// Maximal KKT violation `max_{I_up} -y g - min_{I_low} -y g` of a dual
/// point, with the gradient recomputed from the kernel matrix.
pub fn kkt_residual(k: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let g = (0..n).map(|j| y[i] * y[j] * k[i][j] * alpha[j]).sum::<f64>() - 1.0;
        let v = -y[i] * g;
        let in_up = (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0);
        let in_low = (y[i] > 0.0 && alpha[i] > 0.0) || (y[i] < 0.0 && alpha[i] < c);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

pub fn rbf_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| (-gamma * a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>()).exp())
                .collect()
        })
        .collect()
}

/// AUC as (concordant + ties / 2) / (P N) over all positive/negative pairs.
pub fn pair_count_auc(scores: &[f64], labels: &[f64]) -> f64 {
    let mut twice = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for &l in labels {
        if l > 0.0 {
            p += 1;
        } else {
            n += 1;
        }
    }
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] > 0.0 && labels[j] < 0.0 {
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice as f64 / (2 * p * n) as f64
}

/// Metrics from explicit label/prediction vectors, evaluated in integer
/// arithmetic with one final rounding (a square root for MCC).
pub struct OracleMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub balanced_accuracy: f64,
    pub mcc: f64,
    pub f1: f64,
}

pub fn oracle_metrics(truth: &[bool], predicted: &[bool]) -> OracleMetrics {
    let count = |t: bool, p: bool| {
        truth
            .iter()
            .zip(predicted)
            .filter(|&(&a, &b)| a == t && b == p)
            .count() as u128
    };
    let (tp, tn, fp, fn_) = (
        count(true, true),
        count(false, false),
        count(false, true),
        count(true, false),
    );
    let ratio = |a: u128, b: u128| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let pos = tp + fn_;
    let neg = tn + fp;
    let balanced_accuracy = if pos > 0 && neg > 0 {
        ratio(tp * neg + tn * pos, 2 * pos * neg)
    } else {
        (ratio(tp, pos) + ratio(tn, neg)) / 2.0
    };
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den == 0 {
        0.0
    } else {
        (tp as i128 * tn as i128 - fp as i128 * fn_ as i128) as f64 / (den as f64).sqrt()
    };
    OracleMetrics {
        sensitivity: ratio(tp, pos),
        specificity: ratio(tn, neg),
        balanced_accuracy,
        mcc,
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}

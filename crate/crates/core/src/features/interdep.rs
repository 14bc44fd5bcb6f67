//! Features v1..v10: amplitudes, rhythmicity, and the ECG/ACC interdependence
//! measures (spectral overlap, autocorrelation coupling, QRS-anchored
//! windowed correlations).

use crate::dsp::spectrum::{lag_products, Spectrum};
use crate::dsp::{stats, FilterSpec, Sos};
use crate::error::{Error, Result};
use crate::features::Flags;
use crate::signal::{Snippet, FS};

/// Normalized autocorrelation of a zero-padded signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrResult {
    /// `z(k)` for `k = 0..N`; negative lags follow by symmetry.
    lags: Vec<f64>,
    pub nontrivial_lag: Option<usize>,
    pub nontrivial_value: f64,
}

impl AutocorrResult {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// `z(k)` for any integer lag; zero where the padded signals no longer overlap.
    pub fn at(&self, k: i64) -> f64 {
        self.lags.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `z(k)` over the snippet's lag range `-N/2 <= k < N/2`.
    pub fn window(&self) -> Vec<f64> {
        let half = (self.lags.len() / 2) as i64;
        (-half..half).map(|k| self.at(k)).collect()
    }
}

/// `z(k) = sum_n d_n d_{n+k} / sum_n d_n^2` with zero padding, and its largest
/// strict local maximum at positive lag within `k < N/2`.
pub fn autocorrelation(d: &[f64]) -> Result<AutocorrResult> {
    let raw = lag_products(d);
    let energy = raw.first().copied().unwrap_or(0.0);
    if !(energy > 0.0) {
        return Err(Error::DegenerateSignal("autocorrelation of a zero signal".into()));
    }
    let mut lags: Vec<f64> = raw.iter().map(|r| r / energy).collect();
    lags[0] = 1.0;
    let half = d.len() / 2;
    let mut best: Option<(usize, f64)> = None;
    for k in 1..half.saturating_sub(1) {
        let z = lags[k];
        if z > lags[k - 1] && z > lags[k + 1] && best.is_none_or(|(_, b)| z > b) {
            best = Some((k, z));
        }
    }
    Ok(AutocorrResult {
        lags,
        nontrivial_lag: best.map(|(k, _)| k),
        nontrivial_value: best.map_or(0.0, |(_, v)| v),
    })
}

pub fn rms(d: &[f64]) -> f64 {
    stats::rms(d)
}

/// Lowest and highest frequency of the spectral-overlap band, inclusive.
pub const OVERLAP_BAND_HZ: (f64, f64) = (1.0, 20.0);

/// Uncentered cosine similarity of the 1..20 Hz magnitude spectra (v5).
pub fn spectral_overlap(a: &[f64], e: &[f64]) -> Result<f64> {
    let sa = Spectrum::new(a, FS);
    let se = Spectrum::new(e, FS);
    let bins = sa.bins_closed(OVERLAP_BAND_HZ.0, OVERLAP_BAND_HZ.1);
    let (mut dot, mut na, mut ne) = (0.0, 0.0, 0.0);
    for k in bins {
        let (x, y) = (sa.magnitude(k), se.magnitude(k));
        dot += x * y;
        na += x * x;
        ne += y * y;
    }
    if na == 0.0 || ne == 0.0 {
        return Err(Error::DegenerateSignal("band-limited spectrum is zero".into()));
    }
    Ok((dot / (na * ne).sqrt()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub v6: f64,
    pub v7: f64,
    /// False when the ECG autocorrelation has no nontrivial maximum.
    pub found: bool,
}

/// ACC autocorrelation value (v6) and mean curvature (v7) at the lag of the
/// ECG's nontrivial autocorrelation maximum.
pub fn coupling_at_ecg_lag(z_acc: &AutocorrResult, z_ecg: &AutocorrResult) -> Coupling {
    let Some(lag) = z_ecg.nontrivial_lag else {
        return Coupling {
            v6: 0.0,
            v7: 0.0,
            found: false,
        };
    };
    let lag = lag as i64;
    let curvature = |n: i64| (z_acc.at(n + 1) - 2.0 * z_acc.at(n) + z_acc.at(n - 1)) * FS * FS;
    let v7 = (-2..=2).map(|i| curvature(lag + i)).sum::<f64>() / 5.0;
    Coupling {
        v6: z_acc.at(lag),
        v7,
        found: true,
    }
}

/// Sorted QRS sample indices, at least `QRS_MIN_SEPARATION` apart.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrsPositions {
    pub positions: Vec<usize>,
}

pub const QRS_SMOOTHING_S: f64 = 0.1;
pub const QRS_THRESHOLD: f64 = 0.33;
pub const QRS_MIN_SEPARATION_S: f64 = 0.2;

/// Rolling 0.1 s mean of the squared first difference (zero outside the
/// snippet), normalized to a maximum of 1. `None` when the signal has no slope at all.
pub fn slope_envelope(filtered: &[f64], fs: f64) -> Option<Vec<f64>> {
    let sq: Vec<f64> = stats::first_difference(filtered)
        .into_iter()
        .map(|d| d * d)
        .collect();
    let width = (QRS_SMOOTHING_S * fs).round() as usize;
    let env = stats::rolling_mean_zero_padded(&sq, width);
    let max = env.iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return None;
    }
    Some(env.into_iter().map(|v| v / max).collect())
}

/// Threshold, local-maximum and merge stages of the QRS detector applied to
/// an already bandpassed ECG.
pub fn slope_peaks(filtered: &[f64], fs: f64) -> QrsPositions {
    let Some(env) = slope_envelope(filtered, fs) else {
        return QrsPositions::default();
    };
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    let mut i = 1;
    while i + 1 < env.len() {
        if env[i] > env[i - 1] && env[i] > QRS_THRESHOLD {
            // walk across a plateau
            let mut j = i;
            while j + 1 < env.len() && env[j + 1] == env[i] {
                j += 1;
            }
            if j + 1 < env.len() && env[j + 1] < env[i] {
                candidates.push((i, env[i]));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    // largest first; ties toward the earlier sample
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let min_sep = (QRS_MIN_SEPARATION_S * fs).round() as usize;
    let mut kept: Vec<usize> = Vec::new();
    for (pos, _) in candidates {
        if kept.iter().all(|&k| k.abs_diff(pos) >= min_sep) {
            kept.push(pos);
        }
    }
    kept.sort_unstable();
    QrsPositions { positions: kept }
}

/// Slope-based QRS localization on a centered ECG.
pub fn detect_qrs(e: &[f64], fs: f64) -> QrsPositions {
    match Sos::butterworth_bandpass(&FilterSpec::qrs(fs)) {
        Ok(sos) => slope_peaks(&sos.filtfilt(e), fs),
        Err(_) => QrsPositions::default(),
    }
}

pub const QRS_WINDOW_S: f64 = 0.48;

/// Window length in samples (120 at 250 Hz).
pub fn qrs_window_len(fs: f64) -> usize {
    (QRS_WINDOW_S * fs).round() as usize
}

/// Start indices of the full windows centered on `positions`.
pub fn full_window_starts(positions: &[usize], len: usize, n: usize) -> Vec<usize> {
    let half = len / 2;
    positions
        .iter()
        .filter(|&&p| p >= half && p - half + len <= n)
        .map(|&p| p - half)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedCorrelation {
    pub value: f64,
    pub windows: usize,
    pub pairs: usize,
}

/// 75th percentile of the Pearson correlations between all pairs of
/// QRS-centered windows. `None` when fewer than two full windows exist.
pub fn windowed_correlation(
    signal: &[f64],
    positions: &[usize],
    window_len: usize,
) -> Option<WindowedCorrelation> {
    let starts = full_window_starts(positions, window_len, signal.len());
    if starts.len() < 2 {
        return None;
    }
    let windows: Vec<&[f64]> = starts.iter().map(|&s| &signal[s..s + window_len]).collect();
    let mut corr = Vec::with_capacity(windows.len() * (windows.len() - 1) / 2);
    for i in 0..windows.len() {
        for j in i + 1..windows.len() {
            corr.push(stats::pearson(windows[i], windows[j]));
        }
    }
    Some(WindowedCorrelation {
        value: stats::percentile(&corr, 0.75),
        windows: windows.len(),
        pairs: corr.len(),
    })
}

pub const RATIO_GUARD: f64 = 1e-6;

/// v1..v10 together with the QRS positions they were anchored on.
#[derive(Debug, Clone, PartialEq)]
pub struct InterdepFeatures {
    pub values: [f64; 10],
    pub qrs: QrsPositions,
}

pub fn interdep_vector(snippet: &Snippet, flags: &mut Flags) -> InterdepFeatures {
    let (a, e) = (&snippet.acc, &snippet.ecg);
    let mut v = [0.0; 10];
    v[0] = rms(a);
    v[1] = rms(e);

    let z_a = autocorrelation(a);
    let z_e = autocorrelation(e);
    match &z_a {
        Ok(z) if z.nontrivial_lag.is_some() => v[2] = z.nontrivial_value,
        Ok(_) => flags.push(3, "no_local_max"),
        Err(_) => flags.push(3, "degenerate"),
    }
    match &z_e {
        Ok(z) if z.nontrivial_lag.is_some() => v[3] = z.nontrivial_value,
        Ok(_) => flags.push(4, "no_local_max"),
        Err(_) => flags.push(4, "degenerate"),
    }

    match spectral_overlap(a, e) {
        Ok(x) => v[4] = x,
        Err(_) => flags.push(5, "degenerate"),
    }

    match (&z_a, &z_e) {
        (Ok(za), Ok(ze)) => {
            let c = coupling_at_ecg_lag(za, ze);
            if c.found {
                v[5] = c.v6;
                v[6] = c.v7;
            } else {
                flags.push(6, "no_ecg_max");
                flags.push(7, "no_ecg_max");
            }
        }
        _ => {
            flags.push(6, "degenerate");
            flags.push(7, "degenerate");
        }
    }

    let qrs = detect_qrs(e, FS);
    let len = qrs_window_len(FS);
    let acc_corr = windowed_correlation(a, &qrs.positions, len);
    let ecg_corr = windowed_correlation(e, &qrs.positions, len);
    match (acc_corr, ecg_corr) {
        (Some(ca), Some(ce)) => {
            v[7] = ca.value;
            v[8] = ce.value;
            if ce.value < RATIO_GUARD {
                flags.push(10, "ratio_guard");
            } else {
                v[9] = ca.value / ce.value;
            }
        }
        _ => {
            for i in [8, 9, 10] {
                flags.push(i, "few_windows");
            }
        }
    }
    InterdepFeatures { values: v, qrs }
}

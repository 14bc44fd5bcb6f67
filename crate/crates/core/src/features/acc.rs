//! Features v11..v29 of the accelerometry channel: statistics of the
//! QRS-aligned ensemble average and of the 4 s periodogram.

use crate::dsp::{stats, Spectrum};
use crate::features::interdep::full_window_starts;
use crate::features::Flags;
use crate::signal::FS;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub samples: Vec<f64>,
    pub window_count: usize,
    /// Set when no full window existed and the central samples were used.
    pub fallback: bool,
}

/// Pointwise mean over every full `window_len` window centered on a QRS position.
pub fn ensemble_average(a: &[f64], positions: &[usize], window_len: usize) -> EnsembleAverage {
    let starts = full_window_starts(positions, window_len, a.len());
    if starts.is_empty() {
        let s = a.len().saturating_sub(window_len) / 2;
        let end = (s + window_len).min(a.len());
        return EnsembleAverage {
            samples: a[s..end].to_vec(),
            window_count: 1,
            fallback: true,
        };
    }
    let mut sum = vec![0.0; window_len];
    for &s in &starts {
        for (acc, v) in sum.iter_mut().zip(&a[s..s + window_len]) {
            *acc += v;
        }
    }
    let count = starts.len() as f64;
    EnsembleAverage {
        samples: sum.into_iter().map(|v| v / count).collect(),
        window_count: starts.len(),
        fallback: false,
    }
}

/// v11..v16: rms, kurtosis, skewness, median, peak-to-peak, peak-to-peak / rms.
pub fn ensemble_time_stats(ens: &EnsembleAverage, flags: &mut Flags) -> [f64; 6] {
    let x = &ens.samples;
    let rms = stats::rms(x);
    let kurt = stats::kurtosis(x).unwrap_or_else(|| {
        flags.push(12, "constant");
        0.0
    });
    let skew = stats::skewness(x).unwrap_or_else(|| {
        flags.push(13, "constant");
        0.0
    });
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let p2p = if x.is_empty() { 0.0 } else { max - min };
    let ratio = if rms > 0.0 {
        p2p / rms
    } else {
        flags.push(16, "zero_rms");
        0.0
    };
    [rms, kurt, skew, stats::median(x), p2p, ratio]
}

pub const ACC_BANDS_HZ: [(f64, f64); 6] = [
    (0.0, 3.0),
    (3.0, 6.0),
    (6.0, 9.0),
    (9.0, 12.0),
    (12.0, 15.0),
    (15.0, 18.0),
];

/// v17..v22: periodogram power in half-open 3 Hz bands up to 18 Hz.
pub fn acc_band_powers(a: &[f64]) -> [f64; 6] {
    let s = Spectrum::new(a, FS);
    ACC_BANDS_HZ.map(|(lo, hi)| s.band_power(s.bins_half_open(lo, hi)))
}

/// Periodogram on `(0, fs/2]`.
pub fn one_sided_psd(a: &[f64]) -> (Vec<f64>, f64) {
    let s = Spectrum::new(a, FS);
    let psd = (1..s.one_sided_len()).map(|k| s.power(k)).collect();
    (psd, s.resolution())
}

/// Relative margin within which two periodogram maxima count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// v23..v28: mean, std, kurtosis, skewness and maximum of the periodogram,
/// and the frequency of that maximum (lowest frequency on ties).
pub fn acc_psd_stats(a: &[f64], flags: &mut Flags) -> [f64; 6] {
    let (psd, df) = one_sided_psd(a);
    if psd.iter().all(|&p| p == 0.0) {
        for i in 23..=28 {
            flags.push(i, "zero_signal");
        }
        return [0.0; 6];
    }
    let kurt = stats::kurtosis(&psd).unwrap_or_else(|| {
        flags.push(25, "constant");
        0.0
    });
    let skew = stats::skewness(&psd).unwrap_or_else(|| {
        flags.push(26, "constant");
        0.0
    });
    let (argmax, max) = psd.iter().enumerate().fold((0, psd[0]), |best, (i, &p)| {
        if p > best.1 + TIE_TOLERANCE * best.1.abs() {
            (i, p)
        } else {
            best
        }
    });
    [
        stats::mean(&psd),
        stats::std_dev(&psd),
        kurt,
        skew,
        max,
        (argmax + 1) as f64 * df,
    ]
}

/// v29: Shannon entropy of the normalized periodogram on `(0, fs/2]`,
/// divided by `ln(bins)` so that it lies in `[0, 1]`.
pub fn spectral_entropy(a: &[f64], flags: &mut Flags) -> f64 {
    let (psd, _) = one_sided_psd(a);
    let total: f64 = psd.iter().sum();
    if !(total > 0.0) || psd.len() < 2 {
        flags.push(29, "zero_signal");
        return 0.0;
    }
    let h: f64 = psd
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    (h / (psd.len() as f64).ln()).clamp(0.0, 1.0)
}

//! Features v30..v49 of the bandpassed ECG.
//!
//! The literature definitions behind v30..v35 and v43/v44 are not fully
//! specified in their sources; the surrogates below keep the intent
//! (organized vs. fibrillatory activity) and every such value carries a
//! `surrogate` flag.

use crate::dsp::{stats, FilterSpec, Spectrum};
use crate::features::interdep::{qrs_window_len, slope_envelope, slope_peaks, QRS_THRESHOLD};
use crate::features::Flags;

/// Zero-phase Butterworth bandpass with the given corners.
pub fn butterworth_bandpass(signal: &[f64], spec: &FilterSpec) -> crate::Result<Vec<f64>> {
    crate::dsp::butter::butterworth_bandpass(signal, spec)
}

fn power_fraction(s: &Spectrum, keep: impl Fn(f64) -> bool) -> Option<f64> {
    let mut total = 0.0;
    let mut part = 0.0;
    for k in 1..s.one_sided_len() {
        let p = s.power(k);
        total += p;
        if keep(s.freq(k)) {
            part += p;
        }
    }
    (total > 0.0).then(|| part / total)
}

/// v30..v35 = (P_LEA, L_min, b_S, n_P, P_fib, P_h).
pub fn fibrillation_features(e_filt: &[f64], fs: f64, flags: &mut Flags) -> [f64; 6] {
    for i in [30, 31, 32, 34, 35] {
        flags.push(i, "surrogate");
    }
    let s = Spectrum::new(e_filt, fs);
    let p_lea = power_fraction(&s, |f| f < 2.0);
    let p_fib = power_fraction(&s, |f| (4.0..=7.0).contains(&f));
    let p_h = power_fraction(&s, |f| f > 12.0);
    if p_lea.is_none() {
        for i in [30, 34, 35] {
            flags.push(i, "zero_signal");
        }
    }

    let seg = fs.round() as usize;
    let l_min = e_filt
        .chunks(seg)
        .filter(|c| c.len() == seg)
        .map(|c| c.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let l_min = if l_min.is_finite() { l_min } else { 0.0 };

    let slope = stats::mean_abs(&stats::first_difference(e_filt)) * fs;
    let n_p = slope_peaks(e_filt, fs).positions.len() as f64;
    [
        p_lea.unwrap_or(0.0),
        l_min,
        slope,
        n_p,
        p_fib.unwrap_or(0.0),
        p_h.unwrap_or(0.0),
    ]
}

fn clipped_window(x: &[f64], center: usize, len: usize) -> &[f64] {
    let lo = center.saturating_sub(len / 2);
    let hi = (lo + len).min(x.len());
    &x[lo.min(hi)..hi]
}

/// v36..v44 = (meanRR, VarRR, MeanPP, StdPP, mean QRS width, std QRS width,
/// SlopeQRS, MSnorm, StdSnorm).
pub fn beat_features(e_filt: &[f64], qrs: &[usize], fs: f64, flags: &mut Flags) -> [f64; 9] {
    let mut v = [0.0; 9];
    flags.push(43, "surrogate");
    flags.push(44, "surrogate");
    if qrs.is_empty() {
        for i in 36..=44 {
            flags.push(i, "no_qrs");
        }
        return v;
    }
    if qrs.len() >= 2 {
        let rr: Vec<f64> = qrs.windows(2).map(|w| (w[1] - w[0]) as f64 / fs).collect();
        v[0] = stats::mean(&rr);
        v[1] = stats::variance(&rr);
    } else {
        flags.push(36, "few_qrs");
        flags.push(37, "few_qrs");
    }

    let len = qrs_window_len(fs);
    let windows: Vec<&[f64]> = qrs.iter().map(|&p| clipped_window(e_filt, p, len)).collect();
    let pp: Vec<f64> = windows
        .iter()
        .map(|w| {
            let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = w.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .collect();
    v[2] = stats::mean(&pp);
    v[3] = stats::std_dev(&pp);

    let diff = stats::first_difference(e_filt);
    match slope_envelope(e_filt, fs) {
        Some(env) => {
            let widths: Vec<f64> = qrs
                .iter()
                .map(|&p| {
                    let p = p.min(env.len() - 1);
                    if env[p] <= QRS_THRESHOLD {
                        return 0.0;
                    }
                    let mut lo = p;
                    while lo > 0 && env[lo - 1] > QRS_THRESHOLD {
                        lo -= 1;
                    }
                    let mut hi = p;
                    while hi + 1 < env.len() && env[hi + 1] > QRS_THRESHOLD {
                        hi += 1;
                    }
                    (hi - lo + 1) as f64 / fs
                })
                .collect();
            v[4] = stats::mean(&widths);
            v[5] = stats::std_dev(&widths);
        }
        None => {
            flags.push(40, "flat");
            flags.push(41, "flat");
        }
    }

    let slopes: Vec<f64> = qrs
        .iter()
        .map(|&p| stats::max_abs(clipped_window(&diff, p, len)) * fs)
        .collect();
    v[6] = stats::mean(&slopes);

    let abs_slope: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    let max = stats::max_abs(&abs_slope);
    if max > 0.0 {
        let norm: Vec<f64> = abs_slope.iter().map(|s| s / max).collect();
        v[7] = stats::mean(&norm);
        v[8] = stats::std_dev(&norm);
    } else {
        flags.push(43, "flat");
        flags.push(44, "flat");
    }
    v
}

pub const AMSA_BAND_HZ: (f64, f64) = (2.0, 30.0);
pub const HFP_CUTOFF_HZ: f64 = 12.0;
pub const HFP_BAND_HZ: (f64, f64) = (0.8, 30.0);

/// Frequency-weighted single-sided amplitude sum over 2..30 Hz.
pub fn amsa(e_filt: &[f64], fs: f64) -> f64 {
    let s = Spectrum::new(e_filt, fs);
    s.bins_closed(AMSA_BAND_HZ.0, AMSA_BAND_HZ.1)
        .map(|k| s.freq(k) * s.amplitude(k))
        .sum()
}

/// v45..v49 = (mean |de|, std |de|, kurtosis of de^2, AMSA, HfP).
pub fn slope_features(e_filt: &[f64], fs: f64, flags: &mut Flags) -> [f64; 5] {
    let diff = stats::first_difference(e_filt);
    let abs: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let kurt = stats::kurtosis(&sq).unwrap_or_else(|| {
        flags.push(47, "constant");
        0.0
    });
    let s = Spectrum::new(e_filt, fs);
    let band = s.bins_closed(HFP_BAND_HZ.0, HFP_BAND_HZ.1);
    let total = s.band_power(band.clone());
    let high: f64 = band
        .filter(|&k| s.freq(k) > HFP_CUTOFF_HZ)
        .map(|k| s.power(k))
        .sum();
    let hfp = if total > 0.0 {
        high / total
    } else {
        flags.push(49, "zero_signal");
        0.0
    };
    [
        stats::mean(&abs),
        stats::std_dev(&abs),
        kurt,
        amsa(e_filt, fs),
        hfp,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FS: f64 = 250.0;

    fn tone(f: f64) -> Vec<f64> {
        (0..1000).map(|n| (2.0 * PI * f * n as f64 / FS).sin()).collect()
    }

    #[test]
    fn zero_signal_features() {
        let z = vec![0.0; 1000];
        let mut flags = Flags::default();
        assert_eq!(fibrillation_features(&z, FS, &mut flags), [0.0; 6]);
        assert!(flags.contains(30));
        let v = slope_features(&z, FS, &mut flags);
        assert_eq!((v[0], v[1], v[3]), (0.0, 0.0, 0.0));
        assert!(flags.contains(47));
        assert_eq!(beat_features(&z, &[], FS, &mut flags), [0.0; 9]);
    }

    #[test]
    fn amsa_of_unit_five_hz_sine() {
        // single-sided amplitude 1 on the 5 Hz bin
        assert!((amsa(&tone(5.0), FS) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn hfp_of_pure_tones() {
        let v = slope_features(&tone(20.0), FS, &mut Flags::default());
        assert!((v[4] - 1.0).abs() < 1e-12);
        let v = slope_features(&tone(5.0), FS, &mut Flags::default());
        assert!(v[4] < 1e-12);
    }

    #[test]
    fn rr_features_of_regular_train() {
        let v = beat_features(&tone(1.0), &[125, 375, 625, 875], FS, &mut Flags::default());
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
    }
}

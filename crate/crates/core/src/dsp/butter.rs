//! Butterworth bandpass design (analog prototype, lowpass-to-bandpass
//! transform, prewarped bilinear map) realised as second-order sections,
//! plus zero-phase forward-backward filtering.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs: f64,
}

impl FilterSpec {
    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Self> {
        let spec = FilterSpec {
            order,
            low_hz,
            high_hz,
            fs,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Corners used ahead of QRS localization.
    pub fn qrs(fs: f64) -> Self {
        FilterSpec {
            order: 4,
            low_hz: 0.5,
            high_hz: 30.0,
            fs,
        }
    }

    /// Corners used ahead of ECG feature extraction.
    pub fn ecg_features(fs: f64) -> Self {
        FilterSpec {
            order: 4,
            low_hz: 0.8,
            high_hz: 30.0,
            fs,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameter("filter order must be positive".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < self.fs / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "bandpass corners must satisfy 0 < {} < {} < {}",
                self.low_hz,
                self.high_hz,
                self.fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Cascade of biquads, each `[b0, b1, b2, a0, a1, a2]` with `a0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<[f64; 6]>,
}

impl Sos {
    pub fn butterworth_bandpass(spec: &FilterSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.order;
        let fs = spec.fs;
        let w1 = 2.0 * fs * (PI * spec.low_hz / fs).tan();
        let w2 = 2.0 * fs * (PI * spec.high_hz / fs).tan();
        let bw = w2 - w1;
        let w0 = (w1 * w2).sqrt();

        let mut analog_poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let half = p * (bw / 2.0);
            let disc = (half * half - w0 * w0).sqrt();
            analog_poles.push(half + disc);
            analog_poles.push(half - disc);
        }
        let two_fs = 2.0 * fs;
        let digital: Vec<Complex64> = analog_poles.iter().map(|s| (two_fs + s) / (two_fs - s)).collect();

        let mut upper: Vec<Complex64> = digital.iter().copied().filter(|z| z.im > 1e-12).collect();
        let mut real: Vec<f64> = digital
            .iter()
            .filter(|z| z.im.abs() <= 1e-12)
            .map(|z| z.re)
            .collect();
        upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        real.sort_by(f64::total_cmp);

        let mut sections: Vec<[f64; 6]> = upper
            .iter()
            .map(|p| [1.0, 0.0, -1.0, 1.0, -2.0 * p.re, p.norm_sqr()])
            .collect();
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
            sections.push([1.0, 0.0, -1.0, 1.0, -(r1 + r2), r1 * r2]);
        }

        let mut sos = Sos { sections };
        let center = 2.0 * (w0 / two_fs).atan() * fs / (2.0 * PI);
        let gain = sos.response(center, fs).norm();
        let per_section = gain.powf(-1.0 / sos.sections.len() as f64);
        for s in sos.sections.iter_mut() {
            for b in s.iter_mut().take(3) {
                *b *= per_section;
            }
        }
        Ok(sos)
    }

    /// Complex frequency response of a single forward pass at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let w = 2.0 * PI * f / fs;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| {
            let num = s[0] + z1 * s[1] + z2 * s[2];
            let den = s[3] + z1 * s[4] + z2 * s[5];
            acc * num / den
        })
    }

    /// Magnitude response of the forward-backward (zero-phase) application.
    pub fn zero_phase_gain(&self, f: f64, fs: f64) -> f64 {
        self.response(f, fs).norm_sqr()
    }

    /// Steady-state section states for a unit step input.
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let out = level * (s[0] + s[1] + s[2]) / (1.0 + s[4] + s[5]);
                let z1 = (s[1] + s[2]) * level - (s[4] + s[5]) * out;
                let z2 = s[2] * level - s[5] * out;
                level = out;
                [z1, z2]
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], init: &[[f64; 2]], x0: f64) {
        for (s, zi) in self.sections.iter().zip(init) {
            let (mut z1, mut z2) = (zi[0] * x0, zi[1] * x0);
            for v in x.iter_mut() {
                let input = *v;
                let y = s[0] * input + z1;
                z1 = s[1] * input - s[4] * y + z2;
                z2 = s[2] * input - s[5] * y;
                *v = y;
            }
        }
    }

    /// Causal single pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let zeros = vec![[0.0, 0.0]; self.sections.len()];
        self.run(&mut y, &zeros, 0.0);
        y
    }

    /// Forward-backward filtering with odd-extension padding and steady-state
    /// initial conditions; output has the input's length and no phase lag.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let padlen = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * padlen);
        for i in (1..=padlen).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=padlen {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        let zi = self.step_states();
        let first = ext[0];
        self.run(&mut ext, &zi, first);
        ext.reverse();
        let first = ext[0];
        self.run(&mut ext, &zi, first);
        ext.reverse();
        ext[padlen..padlen + n].to_vec()
    }
}

/// Zero-phase Butterworth bandpass of `signal`.
pub fn butterworth_bandpass(signal: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    Ok(Sos::butterworth_bandpass(spec)?.filtfilt(signal))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, n: usize, fs: f64) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn rejects_invalid_corners() {
        assert!(FilterSpec::bandpass(4, 30.0, 0.5, 250.0).is_err());
        assert!(FilterSpec::bandpass(4, 0.5, 130.0, 250.0).is_err());
        assert!(FilterSpec::bandpass(0, 0.5, 30.0, 250.0).is_err());
    }

    #[test]
    fn design_has_order_sections_and_stable_poles() {
        let sos = Sos::butterworth_bandpass(&FilterSpec::qrs(250.0)).unwrap();
        assert_eq!(sos.sections.len(), 4);
        for s in &sos.sections {
            // |p|^2 = a2 < 1 for a stable complex pair
            assert!(s[5] < 1.0 && s[5] > 0.0);
        }
    }

    #[test]
    fn half_power_at_corners() {
        let sos = Sos::butterworth_bandpass(&FilterSpec::ecg_features(250.0)).unwrap();
        let lo = sos.response(0.8, 250.0).norm();
        let hi = sos.response(30.0, 250.0).norm();
        assert!((lo - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((hi - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn dc_input_is_removed() {
        let spec = FilterSpec::qrs(250.0);
        let out = butterworth_bandpass(&vec![3.0; 1000], &spec).unwrap();
        let tail = &out[250..];
        assert!(tail.iter().all(|v| v.abs() < 1e-3 * 3.0));
    }

    #[test]
    fn passband_sine_keeps_amplitude() {
        let spec = FilterSpec::qrs(250.0);
        let out = butterworth_bandpass(&sine(10.0, 1000, 250.0), &spec).unwrap();
        let peak = out[250..750].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.05, "peak {peak}");
    }

    #[test]
    fn sixty_hz_is_attenuated() {
        let spec = FilterSpec::qrs(250.0);
        let sos = Sos::butterworth_bandpass(&spec).unwrap();
        let gain_db = 20.0 * sos.zero_phase_gain(60.0, 250.0).log10();
        assert!(gain_db <= -20.0, "{gain_db} dB");
        let out = sos.filtfilt(&sine(60.0, 5000, 250.0));
        let peak = out[2000..3000].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(peak <= 0.1, "{peak}");
    }

    #[test]
    fn symmetric_pulse_stays_centered() {
        let spec = FilterSpec::qrs(250.0);
        let x: Vec<f64> = (0..1001)
            .map(|i| {
                let t = (i as f64 - 500.0) / 250.0;
                (-t * t / (2.0 * 0.01f64.powi(2))).exp()
            })
            .collect();
        let out = butterworth_bandpass(&x, &spec).unwrap();
        let argmax = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((argmax as i64 - 500).abs() <= 1);
        let peak = out[500];
        for k in 1..200 {
            assert!((out[500 - k] - out[500 + k]).abs() < 1e-3 * peak, "{k}");
        }
    }
}

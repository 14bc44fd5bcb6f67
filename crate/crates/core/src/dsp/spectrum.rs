//! FFT-backed magnitude spectra, periodograms and the zero-padded
//! autocorrelation.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Discrete Fourier transform of a real signal, `X_k = sum_n x_n exp(-2 pi i k n / N)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    coeffs: Vec<Complex64>,
    fs: f64,
}

impl Spectrum {
    pub fn new(x: &[f64], fs: f64) -> Self {
        let mut coeffs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if !coeffs.is_empty() {
            forward_plan(coeffs.len()).process(&mut coeffs);
        }
        Spectrum { coeffs, fs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of one-sided bins, `0..=N/2`.
    pub fn one_sided_len(&self) -> usize {
        self.coeffs.len() / 2 + 1
    }

    pub fn resolution(&self) -> f64 {
        self.fs / self.coeffs.len() as f64
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.resolution()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k]
    }

    /// `|X_k|`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.coeffs[k].norm()
    }

    /// Single-sided amplitude `2 |X_k| / N`; a unit sine on bin `k` gives 1.
    pub fn amplitude(&self, k: usize) -> f64 {
        2.0 * self.coeffs[k].norm() / self.coeffs.len() as f64
    }

    /// Periodogram value `|X_k|^2 / N`.
    pub fn power(&self, k: usize) -> f64 {
        self.coeffs[k].norm_sqr() / self.coeffs.len() as f64
    }

    /// One-sided bins whose frequency lies in `[lo, hi]`.
    pub fn bins_closed(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = (0..self.one_sided_len()).find(|&k| self.freq(k) >= lo - 1e-9);
        let last = (0..self.one_sided_len())
            .rev()
            .find(|&k| self.freq(k) <= hi + 1e-9);
        match (first, last) {
            (Some(a), Some(b)) if a <= b => a..b + 1,
            _ => 0..0,
        }
    }

    /// One-sided bins whose frequency lies in `[lo, hi)`.
    pub fn bins_half_open(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = (0..self.one_sided_len()).find(|&k| self.freq(k) >= lo - 1e-9);
        let end = (0..self.one_sided_len())
            .find(|&k| self.freq(k) >= hi - 1e-9)
            .unwrap_or(self.one_sided_len());
        match first {
            Some(a) if a < end => a..end,
            _ => 0..0,
        }
    }

    pub fn band_power(&self, bins: std::ops::Range<usize>) -> f64 {
        bins.map(|k| self.power(k)).sum()
    }
}

/// Raw zero-padded lag products `r(k) = sum_n d_n d_{n+k}` for `k = 0..N-1`.
pub fn lag_products(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    if n == 0 {
        return Vec::new();
    }
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = d
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();
    forward_plan(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    inverse_plan(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf[..n].iter().map(|c| c.re * scale).collect()
}

//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each operation has a plain Rust form, used by the native tests, and a
//! thin `#[wasm_bindgen]` wrapper that maps errors to JS exceptions.

use accpulse::dsp::{FilterSpec, Sos};
use accpulse::features::interdep::{autocorrelation, detect_qrs, qrs_window_len, windowed_correlation};
use accpulse::features::{feature_names, feature_vector};
use accpulse::signal::{prefilter, PrefilterDecision};
use accpulse::svm::{train_svm, SvmParams};
use accpulse::synth::{synth_snippet, Regime, SynthParams};
use accpulse::{Error, Result, FS};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Everything the page draws for one synthetic snippet.
#[derive(Debug, Serialize)]
pub struct SnippetReport {
    pub regime: &'static str,
    pub label: &'static str,
    pub acc: Vec<f64>,
    pub ecg: Vec<f64>,
    pub qrs: Vec<usize>,
    /// ACC autocorrelation for lags `0..N/2`.
    pub acc_autocorrelation: Vec<f64>,
    pub acc_windowed_correlation: Option<f64>,
    pub features: Vec<(String, f64)>,
    pub flags: String,
    pub prefilter: String,
}

fn parse_regime(name: &str) -> Result<Regime> {
    Regime::ALL
        .into_iter()
        .find(|r| r.name() == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown regime `{name}`")))
}

/// Synthesizes a 4 s snippet and runs the feature pipeline on it.
pub fn snippet_report(regime: &str, seed: u64, coupling_gain: f64, acc_noise: f64) -> Result<SnippetReport> {
    let regime = parse_regime(regime)?;
    let mut params = SynthParams::single(regime, 4.0, seed);
    params.coupling_gain = coupling_gain;
    params.acc_noise_sigma = acc_noise;
    let (s, _) = synth_snippet(regime, &params)?;
    let qrs = detect_qrs(&s.ecg, FS).positions;
    let z = autocorrelation(&s.acc)?;
    let fv = feature_vector(&s);
    Ok(SnippetReport {
        regime: regime.name(),
        label: regime.label().as_str(),
        acc_autocorrelation: (0..s.acc.len() as i64 / 2).map(|k| z.at(k)).collect(),
        acc_windowed_correlation: windowed_correlation(&s.acc, &qrs, qrs_window_len(FS)).map(|w| w.value),
        features: feature_names().into_iter().zip(fv.values).collect(),
        flags: fv.flags.to_string(),
        prefilter: match prefilter(&s) {
            PrefilterDecision::Accept => "accept".into(),
            PrefilterDecision::Reject(r) => r.as_str().into(),
        },
        acc: s.acc,
        ecg: s.ecg,
        qrs,
    })
}

/// Zero-phase gain of a Butterworth bandpass at `points` frequencies
/// evenly spaced on `[0, FS/2]`.
pub fn bandpass_gain(order: usize, low_hz: f64, high_hz: f64, points: usize) -> Result<Vec<f64>> {
    let sos = Sos::butterworth_bandpass(&FilterSpec::bandpass(order, low_hz, high_hz, FS)?)?;
    let step = FS / 2.0 / points.saturating_sub(1).max(1) as f64;
    Ok((0..points)
        .map(|i| sos.zero_phase_gain(i as f64 * step, FS))
        .collect())
}

/// Trains an RBF SVM on 2-D points and returns its decision values on a
/// `resolution` x `resolution` grid over the unit square, row by row from
/// the top.
pub fn svm_surface(
    xs: &[f64],
    ys: &[f64],
    labels: &[f64],
    gamma: f64,
    c: f64,
    resolution: usize,
) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() != labels.len() {
        return Err(Error::Shape {
            expected: xs.len(),
            got: ys.len().min(labels.len()),
        });
    }
    let points: Vec<Vec<f64>> = xs.iter().zip(ys).map(|(&x, &y)| vec![x, y]).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l > 0.0 { 1.0 } else { -1.0 }).collect();
    let svm = train_svm(&points, &y, &SvmParams::new(gamma, c))?;
    let step = 1.0 / resolution.saturating_sub(1).max(1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        for col in 0..resolution {
            out.push(svm.decision(&[col as f64 * step, 1.0 - row as f64 * step]));
        }
    }
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// JSON-encoded [`SnippetReport`].
#[wasm_bindgen(js_name = snippetReport)]
pub fn snippet_report_js(
    regime: &str,
    seed: u32,
    coupling_gain: f64,
    acc_noise: f64,
) -> std::result::Result<String, JsError> {
    let report = snippet_report(regime, seed.into(), coupling_gain, acc_noise).map_err(js)?;
    serde_json::to_string(&report).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = bandpassGain)]
pub fn bandpass_gain_js(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    bandpass_gain(order, low_hz, high_hz, points).map_err(js)
}

#[wasm_bindgen(js_name = svmSurface)]
pub fn svm_surface_js(
    xs: &[f64],
    ys: &[f64],
    labels: &[f64],
    gamma: f64,
    c: f64,
    resolution: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    svm_surface(xs, ys, labels, gamma, c, resolution).map_err(js)
}

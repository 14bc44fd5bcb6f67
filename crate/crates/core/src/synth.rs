//! Synthetic recordings with known ground truth.
//!
//! ECG beats are a sharp R wave with a broader negative skirt (difference of
//! Gaussians, ~80 ms) plus a T wave. When the regime is mechanically coupled,
//! every beat also excites the accelerometer with an exponentially damped
//! 15 Hz oscillation a fixed 20..80 ms after the R peak.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dsp::{FilterSpec, Sos};
use crate::error::{Error, Result};
use crate::signal::{Interval, Label, Recording, Rhythm, RhythmInterval, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Organized rhythm with mechanical response (SC).
    OrgCoupled,
    /// Organized rhythm without mechanical response, PEA-like (AR).
    OrgDecoupled,
    /// Fibrillation-like 4..7 Hz activity (AR).
    VfLike,
    /// Asystole-like near-flat ECG (AR).
    AsyLike,
    /// Irregular RR intervals with mechanical response (SC).
    ArrhythmicCoupled,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::OrgCoupled,
        Regime::OrgDecoupled,
        Regime::VfLike,
        Regime::AsyLike,
        Regime::ArrhythmicCoupled,
    ];

    pub fn label(self) -> Label {
        if self.coupled() {
            Label::Sc
        } else {
            Label::Ar
        }
    }

    pub fn coupled(self) -> bool {
        matches!(self, Regime::OrgCoupled | Regime::ArrhythmicCoupled)
    }

    pub fn rhythm(self) -> Rhythm {
        match self {
            Regime::VfLike => Rhythm::Vf,
            Regime::AsyLike => Rhythm::Asy,
            _ => Rhythm::Org,
        }
    }

    fn has_beats(self) -> bool {
        !matches!(self, Regime::VfLike | Regime::AsyLike)
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::OrgCoupled => "org_coupled",
            Regime::OrgDecoupled => "org_decoupled",
            Regime::VfLike => "vf_like",
            Regime::AsyLike => "asy_like",
            Regime::ArrhythmicCoupled => "arrhythmic_coupled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub patient_id: String,
    /// Heart rate range; one rate is drawn per case.
    pub heart_rate_bpm: (f64, f64),
    /// Peak ACC response per beat in coupled regimes.
    pub coupling_gain: f64,
    pub acc_noise_sigma: f64,
    pub ecg_noise_sigma: f64,
    /// Spike artifacts per minute on the ACC channel.
    pub artifact_rate: f64,
    /// Consecutive regimes covering the recording.
    pub segments: Vec<Segment>,
    /// Compression-free intervals; chest compressions fill the rest.
    pub pauses: Vec<Interval>,
    pub fs_ecg: f64,
    pub fs_acc: f64,
    pub seed: u64,
}

impl SynthParams {
    /// One regime over a single pause of `seconds`, both channels at 250 Hz.
    pub fn single(regime: Regime, seconds: f64, seed: u64) -> Self {
        SynthParams {
            patient_id: format!("synth-{seed}"),
            heart_rate_bpm: (50.0, 100.0),
            coupling_gain: 1.0,
            acc_noise_sigma: 0.05,
            ecg_noise_sigma: 0.01,
            artifact_rate: 0.0,
            segments: vec![Segment {
                duration_s: seconds,
                regime,
            }],
            pauses: vec![Interval::new(0.0, seconds)],
            fs_ecg: 250.0,
            fs_acc: 250.0,
            seed,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.heart_rate_bpm;
        if !(20.0..=220.0).contains(&lo) || !(20.0..=220.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "heart rate range [{lo}, {hi}] must lie within [20, 220] bpm"
            )));
        }
        for (name, v) in [
            ("acc_noise_sigma", self.acc_noise_sigma),
            ("ecg_noise_sigma", self.ecg_noise_sigma),
            ("artifact_rate", self.artifact_rate),
            ("coupling_gain", self.coupling_gain),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0")));
            }
        }
        if self.segments.is_empty() || self.segments.iter().any(|s| !(s.duration_s > 0.0)) {
            return Err(Error::InvalidParameter(
                "segments must have positive durations".into(),
            ));
        }
        if !(self.fs_ecg > 0.0 && self.fs_acc > 0.0) {
            return Err(Error::InvalidParameter("sample rates must be positive".into()));
        }
        Ok(())
    }
}

/// Ground truth that accompanies a generated case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    /// R-peak times in seconds.
    pub r_times: Vec<f64>,
    pub segments: Vec<(f64, f64, Regime)>,
    pub coupling_delay_s: f64,
    pub heart_rate_bpm: f64,
}

impl SynthTruth {
    pub fn regime_at(&self, t: f64) -> Option<Regime> {
        self.segments
            .iter()
            .find(|(s, e, _)| t >= *s && t < *e)
            .map(|(_, _, r)| *r)
    }
}

const R_SIGMA: f64 = 0.012;
const SKIRT_SIGMA: f64 = 0.028;
const SKIRT_DEPTH: f64 = 0.25;
const T_DELAY: f64 = 0.28;
const T_SIGMA: f64 = 0.045;
const T_AMPLITUDE: f64 = 0.25;
const ACC_FREQ_HZ: f64 = 15.0;
const ACC_DECAY_S: f64 = 0.08;
const ACC_SPAN_S: f64 = 0.3;
const COMPRESSION_RATE_HZ: f64 = 1.8;

fn gauss(t: f64, sigma: f64) -> f64 {
    (-0.5 * (t / sigma).powi(2)).exp()
}

/// ECG beat shape relative to the R peak, peak value 1 at `t = 0`.
pub fn beat_template(t: f64) -> f64 {
    let qrs = (gauss(t, R_SIGMA) - SKIRT_DEPTH * gauss(t, SKIRT_SIGMA)) / (1.0 - SKIRT_DEPTH);
    qrs + T_AMPLITUDE * gauss(t - T_DELAY, T_SIGMA)
}

/// ACC response to one beat, `tau` seconds after its onset.
pub fn acc_impulse(tau: f64) -> f64 {
    if !(0.0..ACC_SPAN_S).contains(&tau) {
        return 0.0;
    }
    (-tau / ACC_DECAY_S).exp() * (2.0 * PI * ACC_FREQ_HZ * tau).sin()
}

fn add_template(
    out: &mut [f64],
    fs: f64,
    center_s: f64,
    before_s: f64,
    after_s: f64,
    f: impl Fn(f64) -> f64,
) {
    let lo = ((center_s - before_s) * fs).floor().max(0.0) as usize;
    let hi = (((center_s + after_s) * fs).ceil().max(0.0) as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        *v += f(i as f64 / fs - center_s);
    }
}

fn in_pause(pauses: &[Interval], t: f64) -> bool {
    pauses.iter().any(|p| t >= p.start_s && t < p.end_s)
}

fn white(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Generates a case and its ground truth; deterministic in `params.seed`.
pub fn generate_case(params: &SynthParams) -> Result<(Recording, SynthTruth)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let duration = params.duration_s();
    let (hr_lo, hr_hi) = params.heart_rate_bpm;
    let hr = if hr_hi > hr_lo {
        rng.random_range(hr_lo..hr_hi)
    } else {
        hr_lo
    };
    let rr = 60.0 / hr;
    let delay = rng.random_range(0.02..0.08);
    let ecg_amp = rng.random_range(0.6..1.4);
    let jitter = Normal::new(0.0, 0.005).expect("valid");
    let delay_jitter = Normal::new(0.0, 0.002).expect("valid");

    let mut segments = Vec::new();
    let mut t0 = 0.0;
    for s in &params.segments {
        segments.push((t0, t0 + s.duration_s, s.regime));
        t0 += s.duration_s;
    }
    let regime_at = |t: f64| {
        segments
            .iter()
            .find(|(s, e, _)| t >= *s && t < *e)
            .map(|(_, _, r)| *r)
    };

    // beat times, continuous across segments with beats
    let mut r_times = Vec::new();
    let mut onsets = Vec::new();
    let mut t = rng.random_range(0.0..rr);
    while t < duration {
        let regime = regime_at(t).expect("t within recording");
        let step = match regime {
            Regime::ArrhythmicCoupled => rr * rng.random_range(0.6..1.4),
            _ => rr * (1.0 + jitter.sample(&mut rng)),
        };
        let d = delay + delay_jitter.sample(&mut rng);
        if regime.has_beats() {
            r_times.push(t);
            if regime.coupled() {
                onsets.push(t + d);
            }
        }
        t += step.max(0.25);
    }

    // ECG
    let n_ecg = (duration * params.fs_ecg).round() as usize;
    let fs_e = params.fs_ecg;
    let mut ecg = vec![0.0; n_ecg];
    for &r in &r_times {
        add_template(&mut ecg, fs_e, r, 0.2, 0.6, |dt| ecg_amp * beat_template(dt));
    }
    let vf_noise = {
        let raw = white(&mut rng, n_ecg, 1.0);
        let spec = FilterSpec::bandpass(2, 4.0, 7.0, fs_e)?;
        let filtered = Sos::butterworth_bandpass(&spec)?.filtfilt(&raw);
        let rms = crate::dsp::stats::rms(&filtered).max(1e-12);
        let target = 0.3 * ecg_amp;
        filtered.into_iter().map(|v| v * target / rms).collect::<Vec<_>>()
    };
    let drift_phase = rng.random_range(0.0..2.0 * PI);
    let ecg_noise = white(&mut rng, n_ecg, params.ecg_noise_sigma);
    let comp_phase = rng.random_range(0.0..1.0);
    for i in 0..n_ecg {
        let t = i as f64 / fs_e;
        match regime_at(t) {
            Some(Regime::VfLike) => ecg[i] += vf_noise[i],
            Some(Regime::AsyLike) => ecg[i] += 0.02 * (2.0 * PI * 0.3 * t + drift_phase).sin(),
            _ => {}
        }
        ecg[i] += ecg_noise[i];
        if !in_pause(&params.pauses, t) {
            let phase = (t * COMPRESSION_RATE_HZ + comp_phase).fract();
            ecg[i] += 0.8 * (PI * phase).sin().powi(2);
        }
    }

    // ACC
    let n_acc = (duration * params.fs_acc).round() as usize;
    let fs_a = params.fs_acc;
    let mut acc = white(&mut rng, n_acc, params.acc_noise_sigma);
    for &on in &onsets {
        add_template(&mut acc, fs_a, on, 0.0, ACC_SPAN_S, |dt| {
            params.coupling_gain * acc_impulse(dt)
        });
    }
    for (i, v) in acc.iter_mut().enumerate() {
        let t = i as f64 / fs_a;
        if !in_pause(&params.pauses, t) {
            let phase = (t * COMPRESSION_RATE_HZ + comp_phase).fract();
            *v += 12.0 * (PI * phase).sin().powi(3);
        }
    }
    if params.artifact_rate > 0.0 {
        let expected = params.artifact_rate * duration / 60.0;
        let count = Poisson::new(expected)
            .map(|p| p.sample(&mut rng) as usize)
            .unwrap_or(0);
        for _ in 0..count {
            let i = rng.random_range(0..n_acc.max(1));
            if let Some(v) = acc.get_mut(i) {
                *v += 30.0 * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
    }

    let circulation = merge_intervals(
        segments
            .iter()
            .filter(|(_, _, r)| r.coupled())
            .map(|(s, e, _)| Interval::new(*s, *e)),
    );
    let mut rhythm: Vec<RhythmInterval> = Vec::new();
    for &(s, e, r) in &segments {
        match rhythm.last_mut() {
            Some(last) if last.rhythm == r.rhythm() && (last.end_s - s).abs() < 1e-9 => last.end_s = e,
            _ => rhythm.push(RhythmInterval {
                start_s: s,
                end_s: e,
                rhythm: r.rhythm(),
            }),
        }
    }

    let rec = Recording {
        patient_id: params.patient_id.clone(),
        ecg: Series::new(0.0, fs_e, ecg),
        acc: Series::new(0.0, fs_a, acc),
        compression_free: params.pauses.clone(),
        circulation,
        rhythm,
    };
    Ok((
        rec,
        SynthTruth {
            r_times,
            segments,
            coupling_delay_s: delay,
            heart_rate_bpm: hr,
        },
    ))
}

fn merge_intervals(it: impl Iterator<Item = Interval>) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for iv in it {
        match out.last_mut() {
            Some(last) if iv.start_s <= last.end_s + 1e-9 => last.end_s = last.end_s.max(iv.end_s),
            _ => out.push(iv),
        }
    }
    out
}

/// Relative weights of the regimes drawn for corpus cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeMix {
    pub org_coupled: f64,
    pub org_decoupled: f64,
    pub vf_like: f64,
    pub asy_like: f64,
    pub arrhythmic_coupled: f64,
}

impl Default for RegimeMix {
    fn default() -> Self {
        RegimeMix {
            org_coupled: 0.35,
            org_decoupled: 0.25,
            vf_like: 0.1,
            asy_like: 0.1,
            arrhythmic_coupled: 0.2,
        }
    }
}

impl RegimeMix {
    fn weight(&self, r: Regime) -> f64 {
        match r {
            Regime::OrgCoupled => self.org_coupled,
            Regime::OrgDecoupled => self.org_decoupled,
            Regime::VfLike => self.vf_like,
            Regime::AsyLike => self.asy_like,
            Regime::ArrhythmicCoupled => self.arrhythmic_coupled,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, label: Option<Label>) -> Option<Regime> {
        let candidates: Vec<Regime> = Regime::ALL
            .into_iter()
            .filter(|r| label.is_none_or(|l| r.label() == l))
            .filter(|r| self.weight(*r) > 0.0)
            .collect();
        let total: f64 = candidates.iter().map(|r| self.weight(*r)).sum();
        if candidates.is_empty() || !(total > 0.0) {
            return None;
        }
        let mut x = rng.random_range(0.0..total);
        for r in &candidates {
            x -= self.weight(*r);
            if x < 0.0 {
                return Some(*r);
            }
        }
        candidates.last().copied()
    }
}

/// Corpus description consumed by the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub cases: usize,
    pub seed: u64,
    pub mix: RegimeMix,
    /// Probability that a case contains an AR-to-SC transition.
    pub rosc_probability: f64,
    pub pauses_per_case: (usize, usize),
    pub pause_length_s: (f64, f64),
    pub compression_length_s: (f64, f64),
    pub heart_rate_bpm: (f64, f64),
    pub coupling_gain: (f64, f64),
    pub acc_noise_sigma: f64,
    pub ecg_noise_sigma: f64,
    pub artifact_rate: f64,
    pub fs_ecg: f64,
    pub fs_acc: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            cases: 20,
            seed: 1,
            mix: RegimeMix::default(),
            rosc_probability: 0.3,
            pauses_per_case: (2, 4),
            pause_length_s: (6.0, 14.0),
            compression_length_s: (10.0, 30.0),
            heart_rate_bpm: (45.0, 110.0),
            coupling_gain: (0.5, 1.5),
            acc_noise_sigma: 0.08,
            ecg_noise_sigma: 0.02,
            artifact_rate: 0.5,
            fs_ecg: 500.0,
            fs_acc: 250.0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.pauses_per_case.0 == 0 || self.pauses_per_case.0 > self.pauses_per_case.1 {
            return bad("pauses_per_case must be a nonempty range starting at >= 1");
        }
        if !(self.pause_length_s.0 > 0.0 && self.pause_length_s.0 <= self.pause_length_s.1) {
            return bad("pause_length_s must be a positive range");
        }
        if !(self.compression_length_s.0 > 0.0 && self.compression_length_s.0 <= self.compression_length_s.1)
        {
            return bad("compression_length_s must be a positive range");
        }
        if !(self.coupling_gain.0 > 0.0 && self.coupling_gain.0 <= self.coupling_gain.1) {
            return bad("coupling_gain must be a positive range");
        }
        if !(0.0..=1.0).contains(&self.rosc_probability) {
            return bad("rosc_probability must lie in [0, 1]");
        }
        let total = Regime::ALL.iter().map(|r| self.mix.weight(*r)).sum::<f64>();
        if Regime::ALL.iter().any(|r| self.mix.weight(*r) < 0.0) || !(total > 0.0) {
            return bad("regime mix weights must be >= 0 with a positive sum");
        }
        Ok(())
    }

    /// Parameters of case `index`.
    pub fn case_params(&self, index: usize) -> Result<SynthParams> {
        self.validate()?;
        let case_seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index as u64 + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let rosc = rng.random_bool(self.rosc_probability)
            && self.mix.draw(&mut rng.clone(), Some(Label::Ar)).is_some()
            && self.mix.draw(&mut rng.clone(), Some(Label::Sc)).is_some();
        let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };

        let n_pauses = rng.random_range(self.pauses_per_case.0..=self.pauses_per_case.1);
        let mut pauses = Vec::with_capacity(n_pauses);
        let mut t = uniform(&mut rng, self.compression_length_s);
        for _ in 0..n_pauses {
            let len = uniform(&mut rng, self.pause_length_s);
            pauses.push(Interval::new(t, t + len));
            t += len + uniform(&mut rng, self.compression_length_s);
        }
        let duration = t;

        let segments = if rosc {
            let ar = self.mix.draw(&mut rng, Some(Label::Ar)).expect("checked");
            let sc = self.mix.draw(&mut rng, Some(Label::Sc)).expect("checked");
            // transition inside the compression period after a random pause
            let k = rng.random_range(0..n_pauses.max(2) - 1).min(n_pauses - 1);
            let switch = if k + 1 < n_pauses {
                (pauses[k].end_s + pauses[k + 1].start_s) / 2.0
            } else {
                duration / 2.0
            };
            vec![
                Segment {
                    duration_s: switch,
                    regime: ar,
                },
                Segment {
                    duration_s: duration - switch,
                    regime: sc,
                },
            ]
        } else {
            vec![Segment {
                duration_s: duration,
                regime: self.mix.draw(&mut rng, None).expect("validated mix"),
            }]
        };

        Ok(SynthParams {
            patient_id: format!("case_{index:03}"),
            heart_rate_bpm: self.heart_rate_bpm,
            coupling_gain: uniform(&mut rng, self.coupling_gain),
            acc_noise_sigma: self.acc_noise_sigma,
            ecg_noise_sigma: self.ecg_noise_sigma,
            artifact_rate: self.artifact_rate,
            segments,
            pauses,
            fs_ecg: self.fs_ecg,
            fs_acc: self.fs_acc,
            seed: rng.random(),
        })
    }

    pub fn generate(&self) -> Result<Vec<(Recording, SynthTruth)>> {
        (0..self.cases)
            .map(|i| generate_case(&self.case_params(i)?))
            .collect()
    }
}

/// A single 4 s snippet of `regime` at 250 Hz plus the R-peak sample indices
/// that fall inside it.
pub fn synth_snippet(regime: Regime, params: &SynthParams) -> Result<(crate::Snippet, Vec<f64>)> {
    let mut p = params.clone();
    p.segments = vec![Segment {
        duration_s: 4.0,
        regime,
    }];
    p.pauses = vec![Interval::new(0.0, 4.0)];
    p.fs_ecg = crate::FS;
    p.fs_acc = crate::FS;
    let (rec, truth) = generate_case(&p)?;
    let snip = crate::signal::extract_snippets(&rec)
        .into_iter()
        .next()
        .ok_or_else(|| Error::DegenerateInput("no snippet produced".into()))?;
    Ok((snip, truth.r_times))
}

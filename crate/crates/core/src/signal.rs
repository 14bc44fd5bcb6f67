//! Recordings, snippets and the preprocessing that turns one into the other.

use serde::{Deserialize, Serialize};

use crate::dsp::stats;
use crate::error::{Error, Result};

/// Working sample rate of every snippet, Hz.
pub const FS: f64 = 250.0;
/// Snippet length in samples (4 s at 250 Hz).
pub const SNIPPET_LEN: usize = 1000;
pub const SNIPPET_SECONDS: f64 = 4.0;
/// Offset between consecutive snippet starts within a pause.
pub const SNIPPET_STRIDE_S: f64 = 2.0;

const TIME_EPS: f64 = 1e-9;

/// Uniformly sampled channel starting at `start_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub start_s: f64,
    pub fs: f64,
    pub samples: Vec<f64>,
}

impl Series {
    pub fn new(start_s: f64, fs: f64, samples: Vec<f64>) -> Self {
        Series { start_s, fs, samples }
    }

    /// Time of the last sample.
    pub fn end_s(&self) -> f64 {
        self.start_s + (self.samples.len().saturating_sub(1)) as f64 / self.fs
    }

    /// End of the span covered by the samples, one period past the last one.
    pub fn coverage_end_s(&self) -> f64 {
        self.start_s + self.samples.len() as f64 / self.fs
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_s + i as f64 / self.fs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Spontaneous circulation, `y = +1`.
    #[serde(rename = "SC")]
    Sc,
    /// Cardiac arrest, `y = -1`.
    #[serde(rename = "AR")]
    Ar,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Sc => 1.0,
            Label::Ar => -1.0,
        }
    }

    pub fn from_sign(y: f64) -> Self {
        if y >= 0.0 {
            Label::Sc
        } else {
            Label::Ar
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Sc => "SC",
            Label::Ar => "AR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "SC" | "1" | "+1" => Some(Label::Sc),
            "AR" | "-1" => Some(Label::Ar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Rhythm {
    Asy,
    Vf,
    Vt,
    Org,
}

impl Rhythm {
    pub fn as_str(self) -> &'static str {
        match self {
            Rhythm::Asy => "ASY",
            Rhythm::Vf => "VF",
            Rhythm::Vt => "VT",
            Rhythm::Org => "ORG",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "ASY" => Some(Rhythm::Asy),
            "VF" => Some(Rhythm::Vf),
            "VT" => Some(Rhythm::Vt),
            "ORG" | "PEA" | "PR" => Some(Rhythm::Org),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start_s: f64,
    pub end_s: f64,
}

impl Interval {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Interval { start_s, end_s }
    }

    pub fn len(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        (self.end_s.min(hi) - self.start_s.max(lo)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhythmInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub rhythm: Rhythm,
}

/// One case: time-aligned ECG (mV) and ACC (device units) plus annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub patient_id: String,
    pub ecg: Series,
    pub acc: Series,
    pub compression_free: Vec<Interval>,
    pub circulation: Vec<Interval>,
    pub rhythm: Vec<RhythmInterval>,
}

fn check_intervals<'a>(name: &str, iter: impl Iterator<Item = (f64, f64)> + 'a) -> Result<()> {
    let mut prev_end = f64::NEG_INFINITY;
    for (start, end) in iter {
        if !(end > start) {
            return Err(Error::InvalidParameter(format!(
                "{name} interval [{start}, {end}] has end <= start"
            )));
        }
        if start < prev_end {
            return Err(Error::InvalidParameter(format!(
                "{name} intervals overlap or are unsorted at {start}"
            )));
        }
        prev_end = end;
    }
    Ok(())
}

impl Recording {
    pub fn validate(&self) -> Result<()> {
        check_intervals(
            "compression_free",
            self.compression_free.iter().map(|i| (i.start_s, i.end_s)),
        )?;
        check_intervals(
            "circulation",
            self.circulation.iter().map(|i| (i.start_s, i.end_s)),
        )?;
        check_intervals("rhythm", self.rhythm.iter().map(|i| (i.start_s, i.end_s)))?;
        for (name, s) in [("ecg", &self.ecg), ("acc", &self.acc)] {
            if s.samples.is_empty() {
                return Err(Error::DegenerateInput(format!("{name} channel is empty")));
            }
            if !(s.fs > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} sample rate must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Both channels resampled onto the shared `FS` grid.
    pub fn resampled(&self) -> Result<Recording> {
        Ok(Recording {
            ecg: resample(&self.ecg, FS)?,
            acc: resample(&self.acc, FS)?,
            ..self.clone()
        })
    }

    /// Time span covered by both channels.
    pub fn joint_support(&self) -> Option<Interval> {
        let start = self.ecg.start_s.max(self.acc.start_s);
        let end = self.ecg.coverage_end_s().min(self.acc.coverage_end_s());
        (end > start).then(|| Interval::new(start, end))
    }
}

/// Linear interpolation onto the absolute grid `t = j / fs_out` restricted to
/// the span of `series`.
pub fn resample(series: &Series, fs_out: f64) -> Result<Series> {
    if series.samples.is_empty() {
        return Err(Error::DegenerateInput("cannot resample an empty series".into()));
    }
    if !(series.fs > 0.0) || !(fs_out > 0.0) {
        return Err(Error::InvalidParameter("sample rates must be positive".into()));
    }
    if (series.fs - fs_out).abs() < 1e-12 {
        let offset = series.start_s * fs_out;
        if (offset - offset.round()).abs() < 1e-6 {
            return Ok(Series::new(
                offset.round() / fs_out,
                fs_out,
                series.samples.clone(),
            ));
        }
    }
    let first = (series.start_s * fs_out - 1e-6).ceil() as i64;
    let last = (series.end_s() * fs_out + 1e-6).floor() as i64;
    let x = &series.samples;
    let samples = (first..=last)
        .map(|j| {
            let t = j as f64 / fs_out;
            let pos = ((t - series.start_s) * series.fs).max(0.0);
            let i = (pos.floor() as usize).min(x.len() - 1);
            if i + 1 >= x.len() {
                x[x.len() - 1]
            } else {
                let frac = pos - i as f64;
                x[i] + (x[i + 1] - x[i]) * frac
            }
        })
        .collect();
    Ok(Series::new(first as f64 / fs_out, fs_out, samples))
}

/// Subtracts the arithmetic mean.
pub fn center(signal: &[f64]) -> Vec<f64> {
    let m = stats::mean(signal);
    let mut out: Vec<f64> = signal.iter().map(|v| v - m).collect();
    // second pass removes the rounding residue of the first
    let residue = stats::mean(&out);
    for v in out.iter_mut() {
        *v -= residue;
    }
    out
}

/// A centered 4 s window of both channels at `FS`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snippet {
    pub acc: Vec<f64>,
    pub ecg: Vec<f64>,
    pub label: Label,
    pub patient_id: String,
    pub start_time_s: f64,
    pub rhythm: Option<Rhythm>,
    /// Index of the compression-free interval the snippet was cut from.
    pub pause: usize,
}

impl Snippet {
    /// Centers both channels; panics if either is not `SNIPPET_LEN` long.
    pub fn new(
        acc: &[f64],
        ecg: &[f64],
        label: Label,
        patient_id: impl Into<String>,
        start_time_s: f64,
    ) -> Self {
        assert_eq!(acc.len(), SNIPPET_LEN, "acc snippet length");
        assert_eq!(ecg.len(), SNIPPET_LEN, "ecg snippet length");
        Snippet {
            acc: center(acc),
            ecg: center(ecg),
            label,
            patient_id: patient_id.into(),
            start_time_s,
            rhythm: None,
            pause: 0,
        }
    }
}

/// Number of snippets that fit in a pause of `length_s` seconds.
pub fn snippet_count(length_s: f64) -> usize {
    if length_s + TIME_EPS < SNIPPET_SECONDS {
        0
    } else {
        ((length_s - SNIPPET_SECONDS + TIME_EPS) / SNIPPET_STRIDE_S).floor() as usize + 1
    }
}

fn majority_label(circulation: &[Interval], lo: f64, hi: f64) -> Label {
    let sc: f64 = circulation.iter().map(|c| c.overlap(lo, hi)).sum();
    if sc > (hi - lo) / 2.0 + TIME_EPS {
        Label::Sc
    } else {
        Label::Ar
    }
}

fn majority_rhythm(rhythms: &[RhythmInterval], lo: f64, hi: f64) -> Option<Rhythm> {
    let mut best: Option<(f64, Rhythm)> = None;
    for r in rhythms {
        let ov = Interval::new(r.start_s, r.end_s).overlap(lo, hi);
        if ov > 0.0 && best.is_none_or(|(b, _)| ov > b) {
            best = Some((ov, r.rhythm));
        }
    }
    best.map(|(_, r)| r)
}

/// Cuts centered snippets every 2 s from each compression-free interval.
/// Channels must already be on the `FS` grid (see [`Recording::resampled`]).
pub fn extract_snippets(rec: &Recording) -> Vec<Snippet> {
    let Some(support) = rec.joint_support() else {
        return Vec::new();
    };
    let ecg_first = (rec.ecg.start_s * FS).round() as i64;
    let acc_first = (rec.acc.start_s * FS).round() as i64;
    let mut out = Vec::new();
    for (pause, iv) in rec.compression_free.iter().enumerate() {
        let lo = iv.start_s.max(support.start_s);
        let hi = iv.end_s.min(support.end_s);
        if hi <= lo {
            continue;
        }
        for k in 0..snippet_count(hi - lo) {
            let t0 = lo + k as f64 * SNIPPET_STRIDE_S;
            let j0 = (t0 * FS - 1e-6).ceil() as i64;
            let (Ok(ie), Ok(ia)) = (usize::try_from(j0 - ecg_first), usize::try_from(j0 - acc_first)) else {
                continue;
            };
            if ie + SNIPPET_LEN > rec.ecg.samples.len() || ia + SNIPPET_LEN > rec.acc.samples.len() {
                continue;
            }
            let t_start = j0 as f64 / FS;
            let t_end = t_start + SNIPPET_SECONDS;
            let label = majority_label(&rec.circulation, t_start, t_end);
            let mut snip = Snippet::new(
                &rec.acc.samples[ia..ia + SNIPPET_LEN],
                &rec.ecg.samples[ie..ie + SNIPPET_LEN],
                label,
                rec.patient_id.clone(),
                t_start,
            );
            snip.rhythm = majority_rhythm(&rec.rhythm, t_start, t_end);
            snip.pause = pause;
            out.push(snip);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    AccAmplitude,
    EcgAmplitude,
    DegenerateSignal,
    AccPeakedness,
    EcgPeakedness,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::AccAmplitude => "acc_amplitude",
            RejectReason::EcgAmplitude => "ecg_amplitude",
            RejectReason::DegenerateSignal => "degenerate_signal",
            RejectReason::AccPeakedness => "acc_peakedness",
            RejectReason::EcgPeakedness => "ecg_peakedness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefilterDecision {
    Accept,
    Reject(RejectReason),
}

pub const MAX_ACC_AMPLITUDE: f64 = 20.0;
pub const MAX_ECG_AMPLITUDE_MV: f64 = 2.5;
pub const MAX_ACC_PEAKEDNESS: f64 = 25.0;
pub const MAX_ECG_PEAKEDNESS: f64 = 35.0;

/// Artifact screen on a centered snippet.
pub fn prefilter(snippet: &Snippet) -> PrefilterDecision {
    let acc_max = stats::max_abs(&snippet.acc);
    let ecg_max = stats::max_abs(&snippet.ecg);
    if acc_max >= MAX_ACC_AMPLITUDE {
        return PrefilterDecision::Reject(RejectReason::AccAmplitude);
    }
    if ecg_max >= MAX_ECG_AMPLITUDE_MV {
        return PrefilterDecision::Reject(RejectReason::EcgAmplitude);
    }
    let acc_mean = stats::mean_abs(&snippet.acc);
    let ecg_mean = stats::mean_abs(&snippet.ecg);
    if acc_mean == 0.0 || ecg_mean == 0.0 {
        return PrefilterDecision::Reject(RejectReason::DegenerateSignal);
    }
    if acc_max / acc_mean >= MAX_ACC_PEAKEDNESS {
        return PrefilterDecision::Reject(RejectReason::AccPeakedness);
    }
    if ecg_max / ecg_mean >= MAX_ECG_PEAKEDNESS {
        return PrefilterDecision::Reject(RejectReason::EcgPeakedness);
    }
    PrefilterDecision::Accept
}

//! On-disk case format: one directory holding `signals.csv` and
//! `annotations.json`, plus `truth.json` for synthetic cases.
//!
//! `signals.csv` has the header `t_s,ecg_mv,acc`. When the channels are
//! sampled at different rates, a row carries whichever channels have a
//! sample at that instant and leaves the other cell empty.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Interval, Recording, Rhythm, RhythmInterval, Series};
use crate::synth::SynthTruth;

pub const SIGNALS_FILE: &str = "signals.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const TRUTH_FILE: &str = "truth.json";

/// Sample times closer than this are one row.
const TIME_MATCH_S: f64 = 1e-9;
/// Allowed deviation of a sample time from its nominal grid position.
const GRID_SLACK_S: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    pub patient_id: String,
    pub fs_ecg: f64,
    pub fs_acc: f64,
    pub compression_free: Vec<(f64, f64)>,
    pub circulation: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhythm: Option<Vec<(f64, f64, Rhythm)>>,
}

impl Annotations {
    pub fn of(rec: &Recording) -> Self {
        Annotations {
            patient_id: rec.patient_id.clone(),
            fs_ecg: rec.ecg.fs,
            fs_acc: rec.acc.fs,
            compression_free: rec
                .compression_free
                .iter()
                .map(|i| (i.start_s, i.end_s))
                .collect(),
            circulation: rec.circulation.iter().map(|i| (i.start_s, i.end_s)).collect(),
            rhythm: (!rec.rhythm.is_empty()).then(|| {
                rec.rhythm
                    .iter()
                    .map(|r| (r.start_s, r.end_s, r.rhythm))
                    .collect()
            }),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    t_s: f64,
    ecg_mv: Option<f64>,
    acc: Option<f64>,
}

/// Interleaves both channels by sample time.
pub fn signals_csv(rec: &Recording) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let (e, a) = (&rec.ecg, &rec.acc);
    let (mut i, mut j) = (0, 0);
    while i < e.samples.len() || j < a.samples.len() {
        let te = (i < e.samples.len()).then(|| e.time(i));
        let ta = (j < a.samples.len()).then(|| a.time(j));
        let row = match (te, ta) {
            (Some(x), Some(y)) if (x - y).abs() <= TIME_MATCH_S => {
                i += 1;
                j += 1;
                Row {
                    t_s: x,
                    ecg_mv: Some(e.samples[i - 1]),
                    acc: Some(a.samples[j - 1]),
                }
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                Row {
                    t_s: x,
                    ecg_mv: Some(e.samples[i - 1]),
                    acc: None,
                }
            }
            (Some(x), None) => {
                i += 1;
                Row {
                    t_s: x,
                    ecg_mv: Some(e.samples[i - 1]),
                    acc: None,
                }
            }
            (_, Some(y)) => {
                j += 1;
                Row {
                    t_s: y,
                    ecg_mv: None,
                    acc: Some(a.samples[j - 1]),
                }
            }
            (None, None) => unreachable!(),
        };
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn annotations_json(rec: &Recording) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Annotations::of(rec))? + "\n")
}

/// Writes a case directory (created if missing).
pub fn write_case(dir: &Path, rec: &Recording, truth: Option<&SynthTruth>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SIGNALS_FILE), signals_csv(rec)?)?;
    fs::write(dir.join(ANNOTATIONS_FILE), annotations_json(rec)?)?;
    if let Some(t) = truth {
        fs::write(dir.join(TRUTH_FILE), serde_json::to_string_pretty(t)? + "\n")?;
    }
    Ok(())
}

fn channel(path: &Path, name: &str, points: &[(f64, f64)], fs: f64) -> Result<Series> {
    let Some(&(t0, _)) = points.first() else {
        return Err(Error::data(path, format!("column {name} has no samples")));
    };
    for (k, &(t, _)) in points.iter().enumerate() {
        let nominal = t0 + k as f64 / fs;
        if (t - nominal).abs() > GRID_SLACK_S.max(1e-3 / fs) {
            return Err(Error::data(
                path,
                format!("{name} sample at t_s={t} is off its {fs} Hz grid (expected {nominal})"),
            ));
        }
    }
    Ok(Series::new(t0, fs, points.iter().map(|p| p.1).collect()))
}

pub fn parse_signals(path: &Path, bytes: &[u8], fs_ecg: f64, fs_acc: f64) -> Result<(Series, Series)> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers().map_err(|e| Error::data(path, e.to_string()))?.clone();
    for col in ["t_s", "ecg_mv", "acc"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::data(path, format!("missing column {col}")));
        }
    }
    let mut ecg = Vec::new();
    let mut acc = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (line, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::data(path, format!("row {}: {e}", line + 2)))?;
        if !row.t_s.is_finite() || row.t_s <= last_t {
            return Err(Error::data(
                path,
                format!("row {}: t_s must increase strictly", line + 2),
            ));
        }
        last_t = row.t_s;
        for (v, dst) in [(row.ecg_mv, &mut ecg), (row.acc, &mut acc)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::data(path, format!("row {}: non-finite sample", line + 2)));
                }
                dst.push((row.t_s, v));
            }
        }
    }
    Ok((
        channel(path, "ecg_mv", &ecg, fs_ecg)?,
        channel(path, "acc", &acc, fs_acc)?,
    ))
}

/// Reads and validates one case directory.
pub fn read_case(dir: &Path) -> Result<Recording> {
    let ann_path = dir.join(ANNOTATIONS_FILE);
    let text = fs::read_to_string(&ann_path).map_err(|e| Error::data(&ann_path, e.to_string()))?;
    let ann: Annotations = serde_json::from_str(&text).map_err(|e| Error::data(&ann_path, e.to_string()))?;
    if !(ann.fs_ecg > 0.0 && ann.fs_acc > 0.0) {
        return Err(Error::data(&ann_path, "sample rates must be positive"));
    }
    let sig_path = dir.join(SIGNALS_FILE);
    let bytes = fs::read(&sig_path).map_err(|e| Error::data(&sig_path, e.to_string()))?;
    let (ecg, acc) = parse_signals(&sig_path, &bytes, ann.fs_ecg, ann.fs_acc)?;
    let to_iv = |v: &[(f64, f64)]| v.iter().map(|&(s, e)| Interval::new(s, e)).collect();
    let rec = Recording {
        patient_id: ann.patient_id,
        ecg,
        acc,
        compression_free: to_iv(&ann.compression_free),
        circulation: to_iv(&ann.circulation),
        rhythm: ann
            .rhythm
            .unwrap_or_default()
            .into_iter()
            .map(|(start_s, end_s, rhythm)| RhythmInterval {
                start_s,
                end_s,
                rhythm,
            })
            .collect(),
    };
    rec.validate()
        .map_err(|e| Error::data(&ann_path, e.to_string()))?;
    Ok(rec)
}

pub fn read_truth(dir: &Path) -> Result<Option<SynthTruth>> {
    let path = dir.join(TRUTH_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    Ok(Some(
        serde_json::from_str(&text).map_err(|e| Error::data(&path, e.to_string()))?,
    ))
}

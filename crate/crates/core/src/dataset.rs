//! Recording-to-feature-table pipeline and the feature CSV format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{feature_names, feature_vector, FeatureSet, FeatureVector, Flags, FEATURE_COUNT};
use crate::par;
use crate::signal::{extract_snippets, prefilter, Label, PrefilterDecision, Recording, Rhythm, Snippet};

/// One accepted snippet and its features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patient_id: String,
    pub start_time_s: f64,
    pub label: Label,
    pub rhythm: Option<Rhythm>,
    /// Compression-free interval index; not part of the CSV.
    pub pause: usize,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub patient_id: String,
    pub start_time_s: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub rows: Vec<FeatureRow>,
    pub rejections: Vec<Rejection>,
}

impl Extraction {
    pub fn extend(&mut self, other: Extraction) {
        self.rows.extend(other.rows);
        self.rejections.extend(other.rejections);
    }
}

fn featurize(snippet: &Snippet) -> std::result::Result<FeatureRow, Rejection> {
    match prefilter(snippet) {
        PrefilterDecision::Reject(reason) => Err(Rejection {
            patient_id: snippet.patient_id.clone(),
            start_time_s: snippet.start_time_s,
            reason: reason.as_str().to_string(),
        }),
        PrefilterDecision::Accept => Ok(FeatureRow {
            patient_id: snippet.patient_id.clone(),
            start_time_s: snippet.start_time_s,
            label: snippet.label,
            rhythm: snippet.rhythm,
            pause: snippet.pause,
            features: feature_vector(snippet),
        }),
    }
}

/// Resample, cut, screen and featurize one recording.
pub fn process_recording(rec: &Recording) -> Result<Extraction> {
    rec.validate()?;
    let snippets = extract_snippets(&rec.resampled()?);
    let mut out = Extraction::default();
    for r in par::map(&snippets, featurize) {
        match r {
            Ok(row) => out.rows.push(row),
            Err(rej) => out.rejections.push(rej),
        }
    }
    Ok(out)
}

pub fn feature_csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["patient_id", "start_time_s", "label", "rhythm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(feature_names());
    h.push("flags".into());
    h
}

pub fn write_feature_csv<W: std::io::Write>(rows: &[FeatureRow], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(feature_csv_header())?;
    for r in rows {
        let mut rec = vec![
            r.patient_id.clone(),
            r.start_time_s.to_string(),
            r.label.as_str().to_string(),
            r.rhythm.map(|x| x.as_str().to_string()).unwrap_or_default(),
        ];
        rec.extend(r.features.values.iter().map(|v| v.to_string()));
        rec.push(r.features.flags.to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejection_csv<W: std::io::Write>(rejections: &[Rejection], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["patient_id", "start_time_s", "reason"])?;
    for r in rejections {
        w.write_record([r.patient_id.clone(), r.start_time_s.to_string(), r.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a feature CSV; `path` is only used in error messages.
pub fn read_feature_csv<R: std::io::Read>(r: R, path: &Path) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader
        .headers()
        .map_err(|e| Error::data(path, e.to_string()))?
        .clone();
    let expected = feature_csv_header();
    if headers.len() != expected.len() || headers.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::data(
            path,
            "header must be patient_id,start_time_s,label,rhythm,v1..v49,flags",
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::data(path, format!("line {line}: {e}")))?;
        let bad = |what: &str| Error::data(path, format!("line {line}: invalid {what}"));
        let start_time_s: f64 = rec[1].parse().map_err(|_| bad("start_time_s"))?;
        let label = Label::parse(&rec[2]).ok_or_else(|| bad("label"))?;
        let rhythm = match rec[3].trim() {
            "" => None,
            s => Some(Rhythm::parse(s).ok_or_else(|| bad("rhythm"))?),
        };
        let mut values = [0.0; FEATURE_COUNT];
        for (k, v) in values.iter_mut().enumerate() {
            *v = rec[4 + k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(&format!("v{}", k + 1)))?;
        }
        rows.push(FeatureRow {
            patient_id: rec[0].to_string(),
            start_time_s,
            label,
            rhythm,
            pause: 0,
            features: FeatureVector {
                values,
                flags: Flags::parse(&rec[4 + FEATURE_COUNT]),
            },
        });
    }
    Ok(rows)
}

/// Design matrix for learning, restricted to a feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    /// +1 for SC, -1 for AR.
    pub y: Vec<f64>,
    pub groups: Vec<String>,
    pub rhythms: Vec<Option<Rhythm>>,
}

impl Dataset {
    pub fn from_rows(rows: &[FeatureRow], set: &FeatureSet) -> Self {
        Dataset {
            feature_names: set.names(),
            x: rows.iter().map(|r| set.select(&r.features.values)).collect(),
            y: rows.iter().map(|r| r.label.sign()).collect(),
            groups: rows.iter().map(|r| r.patient_id.clone()).collect(),
            rhythms: rows.iter().map(|r| r.rhythm).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
            rhythms: idx.iter().map(|&i| self.rhythms[i]).collect(),
        }
    }
}

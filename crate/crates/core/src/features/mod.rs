//! The 49-feature vector and its assembly from an accepted snippet.

pub mod acc;
pub mod ecg;
pub mod interdep;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsp::{FilterSpec, Sos};
use crate::error::{Error, Result};
use crate::signal::{Snippet, FS};

pub const FEATURE_COUNT: usize = 49;

/// Canonical feature names `v1..v49`.
pub fn feature_names() -> Vec<String> {
    (1..=FEATURE_COUNT).map(|i| format!("v{i}")).collect()
}

/// 1-based numbers of the features that use accelerometry.
pub const ACC_FEATURES: [usize; 26] = [
    1, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29,
];

pub fn is_acc_feature(number: usize) -> bool {
    ACC_FEATURES.contains(&number)
}

/// Fallback and surrogate markers, rendered as `v<i>:<reason>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags(Vec<String>);

impl Flags {
    pub fn push(&mut self, feature: usize, reason: &str) {
        let tag = format!("v{feature}:{reason}");
        if !self.0.contains(&tag) {
            self.0.push(tag);
        }
    }

    pub fn contains(&self, feature: usize) -> bool {
        let prefix = format!("v{feature}:");
        self.0.iter().any(|f| f.starts_with(&prefix))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(joined: &str) -> Self {
        Flags(
            joined
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub flags: Flags,
}

impl FeatureVector {
    /// Feature `v<number>` (1-based).
    pub fn v(&self, number: usize) -> f64 {
        self.values[number - 1]
    }
}

/// Which features a model consumes, as 0-based column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSet {
    All,
    EcgOnly,
    Custom(Vec<usize>),
}

impl FeatureSet {
    /// `all`, `ecg-only`, or a comma-separated list of names like `v8,v15`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(FeatureSet::All),
            "ecg-only" | "ecg" => Ok(FeatureSet::EcgOnly),
            list => {
                let mut idx = Vec::new();
                for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                    let number: usize = name
                        .strip_prefix('v')
                        .and_then(|n| n.parse().ok())
                        .filter(|n| (1..=FEATURE_COUNT).contains(n))
                        .ok_or_else(|| Error::InvalidParameter(format!("unknown feature `{name}`")))?;
                    if idx.contains(&(number - 1)) {
                        return Err(Error::InvalidParameter(format!("duplicate feature `{name}`")));
                    }
                    idx.push(number - 1);
                }
                if idx.is_empty() {
                    return Err(Error::InvalidParameter("empty feature list".into()));
                }
                Ok(FeatureSet::Custom(idx))
            }
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        match self {
            FeatureSet::All => (0..FEATURE_COUNT).collect(),
            FeatureSet::EcgOnly => (1..=FEATURE_COUNT)
                .filter(|&n| !is_acc_feature(n))
                .map(|n| n - 1)
                .collect(),
            FeatureSet::Custom(idx) => idx.clone(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.indices().iter().map(|i| format!("v{}", i + 1)).collect()
    }

    pub fn select(&self, values: &[f64]) -> Vec<f64> {
        self.indices().iter().map(|&i| values[i]).collect()
    }
}

/// All 49 features of an accepted snippet, in canonical order.
pub fn feature_vector(snippet: &Snippet) -> FeatureVector {
    let mut flags = Flags::default();
    let mut values = [0.0; FEATURE_COUNT];

    let inter = interdep::interdep_vector(snippet, &mut flags);
    values[..10].copy_from_slice(&inter.values);
    let qrs = &inter.qrs.positions;

    let a = &snippet.acc;
    let ens = acc::ensemble_average(a, qrs, interdep::qrs_window_len(FS));
    if ens.fallback {
        for i in 11..=16 {
            flags.push(i, "no_window");
        }
    }
    values[10..16].copy_from_slice(&acc::ensemble_time_stats(&ens, &mut flags));
    values[16..22].copy_from_slice(&acc::acc_band_powers(a));
    values[22..28].copy_from_slice(&acc::acc_psd_stats(a, &mut flags));
    values[28] = acc::spectral_entropy(a, &mut flags);

    let e_filt = Sos::butterworth_bandpass(&FilterSpec::ecg_features(FS))
        .map(|sos| sos.filtfilt(&snippet.ecg))
        .unwrap_or_else(|_| snippet.ecg.clone());
    values[29..35].copy_from_slice(&ecg::fibrillation_features(&e_filt, FS, &mut flags));
    values[35..44].copy_from_slice(&ecg::beat_features(&e_filt, qrs, FS, &mut flags));
    values[44..49].copy_from_slice(&ecg::slope_features(&e_filt, FS, &mut flags));

    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            *v = 0.0;
            flags.push(i + 1, "non_finite");
        }
    }
    FeatureVector { values, flags }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecg_only_excludes_acc_features() {
        let names = FeatureSet::EcgOnly.names();
        assert_eq!(names.len(), 23);
        for n in ACC_FEATURES {
            assert!(!names.contains(&format!("v{n}")));
        }
        assert!(names.contains(&"v2".to_string()));
        assert!(names.contains(&"v4".to_string()));
        assert!(names.contains(&"v9".to_string()));
    }

    #[test]
    fn parses_feature_lists() {
        assert_eq!(FeatureSet::parse("v15, v8").unwrap().indices(), vec![14, 7]);
        assert!(FeatureSet::parse("v50").is_err());
        assert!(FeatureSet::parse("v1,v1").is_err());
        assert_eq!(FeatureSet::parse("all").unwrap().indices().len(), 49);
    }

    #[test]
    fn flags_round_trip_text() {
        let mut f = Flags::default();
        f.push(6, "no_ecg_max");
        f.push(30, "surrogate");
        f.push(6, "no_ecg_max");
        assert_eq!(f.to_string(), "v6:no_ecg_max;v30:surrogate");
        assert_eq!(Flags::parse(&f.to_string()), f);
        assert_eq!(Flags::parse(""), Flags::default());
    }
}

//! Random patient-wise train/test partition balanced by snippet count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TEST_FRACTION: f64 = 0.25;
pub const MAX_SPLIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl PatientSplit {
    /// Row indices of each side, in row order.
    pub fn indices(&self, groups: &[String]) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            if self.test.binary_search(g).is_ok() {
                test.push(i);
            } else if self.train.binary_search(g).is_ok() {
                train.push(i);
            }
        }
        (train, test)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    rows: usize,
    sc: usize,
    ar: usize,
}

/// Shuffles patients and sends each to the test side while the midpoint of
/// its snippet block still fits under the test target. Retries with a fresh
/// shuffle until both sides hold both classes.
pub fn patient_split(
    groups: &[String],
    labels: &[f64],
    test_fraction: f64,
    seed: u64,
) -> Result<PatientSplit> {
    if groups.len() != labels.len() {
        return Err(Error::Shape {
            expected: groups.len(),
            got: labels.len(),
        });
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter("test fraction must lie in (0, 1)".into()));
    }
    let mut tally: BTreeMap<&str, Tally> = BTreeMap::new();
    for (g, &y) in groups.iter().zip(labels) {
        let t = tally.entry(g.as_str()).or_default();
        t.rows += 1;
        if y > 0.0 {
            t.sc += 1;
        } else {
            t.ar += 1;
        }
    }
    if tally.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 patients, got {}",
            tally.len()
        )));
    }
    let target = test_fraction * groups.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patients: Vec<&str> = tally.keys().copied().collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        patients.shuffle(&mut rng);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        let (mut tr, mut te) = (Tally::default(), Tally::default());
        let mut test_rows = 0.0;
        for &p in &patients {
            let t = tally[p];
            let side = if test_rows + t.rows as f64 / 2.0 <= target {
                test_rows += t.rows as f64;
                test.push(p.to_string());
                &mut te
            } else {
                train.push(p.to_string());
                &mut tr
            };
            side.sc += t.sc;
            side.ar += t.ar;
        }
        if tr.sc > 0 && tr.ar > 0 && te.sc > 0 && te.ar > 0 {
            train.sort();
            test.sort();
            return Ok(PatientSplit { train, test });
        }
    }
    Err(Error::Split(format!(
        "no split with both classes on both sides after {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(spec: &[(&str, usize, f64)]) -> (Vec<String>, Vec<f64>) {
        let mut g = Vec::new();
        let mut y = Vec::new();
        for &(p, n, label) in spec {
            for _ in 0..n {
                g.push(p.to_string());
                y.push(label);
            }
        }
        (g, y)
    }

    #[test]
    fn four_equal_patients_split_three_to_one() {
        let (g, y) = ids(&[("a", 5, 1.0), ("b", 5, -1.0), ("c", 5, 1.0), ("d", 5, -1.0)]);
        let mut y = y;
        // every patient holds both classes so any partition is admissible
        for i in (0..20).step_by(5) {
            y[i] = -y[i];
        }
        for seed in 0..20 {
            let s = patient_split(&g, &y, 0.25, seed).unwrap();
            assert_eq!((s.train.len(), s.test.len()), (3, 1));
            assert!(s.train.iter().all(|p| !s.test.contains(p)));
        }
    }

    #[test]
    fn impossible_coverage_fails() {
        let (g, y) = ids(&[("a", 5, 1.0), ("b", 5, 1.0), ("c", 5, -1.0)]);
        assert!(matches!(patient_split(&g, &y, 0.25, 1), Err(Error::Split(_))));
    }
}

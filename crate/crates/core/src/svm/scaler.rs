//! Robust per-feature standardization: median 0, interquartile range 1.

use serde::{Deserialize, Serialize};

use crate::dsp::stats::percentile_sorted;
use crate::error::{Error, Result};

/// IQRs below this are replaced by 1.
pub const IQR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub medians: Vec<f64>,
    pub iqrs: Vec<f64>,
    /// Columns whose raw IQR fell below the floor.
    #[serde(default)]
    pub floored: Vec<usize>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyTrainingSet)?;
        let d = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Shape {
                expected: d,
                got: bad.len(),
            });
        }
        let mut medians = Vec::with_capacity(d);
        let mut iqrs = Vec::with_capacity(d);
        let mut floored = Vec::new();
        let mut col = Vec::with_capacity(rows.len());
        for j in 0..d {
            col.clear();
            col.extend(rows.iter().map(|r| r[j]));
            col.sort_by(f64::total_cmp);
            medians.push(percentile_sorted(&col, 0.5));
            let iqr = percentile_sorted(&col, 0.75) - percentile_sorted(&col, 0.25);
            if iqr < IQR_FLOOR {
                floored.push(j);
                iqrs.push(1.0);
            } else {
                iqrs.push(iqr);
            }
        }
        Ok(Scaler {
            medians,
            iqrs,
            floored,
        })
    }

    pub fn dim(&self) -> usize {
        self.medians.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.medians.iter().zip(&self.iqrs))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits a scaler on `rows` (at least one row).
pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler> {
    Scaler::fit(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_one_to_four() {
        let rows: Vec<Vec<f64>> = (1..=4).map(|v| vec![v as f64]).collect();
        let s = fit_scaler(&rows).unwrap();
        assert_eq!(s.medians, vec![2.5]);
        assert_eq!(s.iqrs, vec![1.5]);
    }

    #[test]
    fn constant_column_is_floored() {
        let rows = vec![vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 5.0]];
        let s = fit_scaler(&rows).unwrap();
        assert_eq!(s.floored, vec![0]);
        let t = s.transform(&rows).unwrap();
        assert!(t.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn fit_data_is_standardized() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|i| vec![(i as f64 * 1.7).sin() * 10.0, (i * i) as f64])
            .collect();
        let s = fit_scaler(&rows).unwrap();
        let again = fit_scaler(&s.transform(&rows).unwrap()).unwrap();
        for j in 0..2 {
            assert!(again.medians[j].abs() < 1e-9);
            assert!((again.iqrs[j] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_scaler(&[]), Err(Error::EmptyTrainingSet)));
        let s = fit_scaler(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(s.transform_row(&[1.0]), Err(Error::Shape { .. })));
    }
}

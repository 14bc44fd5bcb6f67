//! Exhaustive search over (gamma, C) scored by mean balanced accuracy
//! across patient-disjoint folds.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::svm::kernel::{DenseKernel, SquaredDistances};
use crate::svm::scaler::Scaler;
use crate::svm::{train_on_kernel, validate_training, SvmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub gammas: Vec<f64>,
    pub cs: Vec<f64>,
}

impl Default for HyperGrid {
    /// gamma = 10^(-5 + n/4), n = 0..14; C = 10^(-3 + n/3), n = 0..15.
    fn default() -> Self {
        HyperGrid {
            gammas: (0..15).map(|n| 10f64.powf(-5.0 + n as f64 / 4.0)).collect(),
            cs: (0..16).map(|n| 10f64.powf(-3.0 + n as f64 / 3.0)).collect(),
        }
    }
}

impl HyperGrid {
    pub fn new(mut gammas: Vec<f64>, mut cs: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || cs.is_empty() {
            return Err(Error::InvalidParameter("grid axes must be non-empty".into()));
        }
        if gammas.iter().chain(&cs).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("grid values must be positive".into()));
        }
        gammas.sort_by(f64::total_cmp);
        cs.sort_by(f64::total_cmp);
        gammas.dedup();
        cs.dedup();
        Ok(HyperGrid { gammas, cs })
    }

    pub fn len(&self) -> usize {
        self.gammas.len() * self.cs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, C-major so that equal scores resolve towards small C.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.cs
            .iter()
            .flat_map(|&c| self.gammas.iter().map(move |&g| (g, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub mean_balanced_accuracy: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub gamma: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub score: f64,
    /// One row per grid point in `HyperGrid::points` order.
    pub table: Vec<CvRow>,
}

/// Fold index per row. Patients are shuffled, then each goes to the fold
/// currently holding the fewest rows.
pub fn patient_folds(groups: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups {
        *sizes.entry(g.as_str()).or_default() += 1;
    }
    if folds < 2 || sizes.len() < folds {
        return Err(Error::Fold {
            folds,
            patients: sizes.len(),
        });
    }
    let mut patients: Vec<&str> = sizes.keys().copied().collect();
    patients.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut load = vec![0usize; folds];
    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for p in patients {
        let k = (0..folds).min_by_key(|&k| (load[k], k)).unwrap_or(0);
        load[k] += sizes[p];
        assignment.insert(p, k);
    }
    Ok(groups.iter().map(|g| assignment[g.as_str()]).collect())
}

/// Errors if any patient id appears on both sides.
pub fn check_disjoint<'a>(
    train: impl IntoIterator<Item = &'a String>,
    test: impl IntoIterator<Item = &'a String>,
) -> Result<()> {
    let train: BTreeSet<&String> = train.into_iter().collect();
    if let Some(p) = test.into_iter().find(|p| train.contains(p)) {
        return Err(Error::Leakage(format!("patient {p} on both sides")));
    }
    Ok(())
}

/// Balanced accuracy of sign predictions; a single-class set scores the
/// recall of the class present.
pub fn balanced_accuracy_of(decisions: &[f64], y: &[f64]) -> f64 {
    let (mut tp, mut p, mut tn, mut n) = (0usize, 0usize, 0usize, 0usize);
    for (&f, &t) in decisions.iter().zip(y) {
        let pred = if f >= 0.0 { 1.0 } else { -1.0 };
        if t > 0.0 {
            p += 1;
            tp += (pred > 0.0) as usize;
        } else {
            n += 1;
            tn += (pred < 0.0) as usize;
        }
    }
    match (p, n) {
        (0, 0) => 0.0,
        (0, _) => tn as f64 / n as f64,
        (_, 0) => tp as f64 / p as f64,
        _ => 0.5 * (tp as f64 / p as f64 + tn as f64 / n as f64),
    }
}

fn subset<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Scores of every grid point on one fold, in `HyperGrid::points` order.
fn fold_scores(
    x: &[Vec<f64>],
    y: &[f64],
    train: &[usize],
    test: &[usize],
    grid: &HyperGrid,
    template: &SvmParams,
) -> Result<Vec<f64>> {
    let raw_train = subset(x, train);
    let y_train = subset(y, train);
    let y_test = subset(y, test);
    let scaler = Scaler::fit(&raw_train)?;
    let xt = scaler.transform(&raw_train)?;
    let xv = scaler.transform(&subset(x, test))?;
    let single = !(y_train.contains(&1.0) && y_train.contains(&-1.0));
    let d_train = SquaredDistances::symmetric(&xt);
    let d_test = SquaredDistances::between(&xv, &xt);

    let mut by_gamma = Vec::with_capacity(grid.gammas.len());
    for &gamma in &grid.gammas {
        let mut scores = Vec::with_capacity(grid.cs.len());
        if single {
            // nothing to separate: constant prediction of the seen class
            let f = vec![y_train[0]; test.len()];
            scores.resize(grid.cs.len(), balanced_accuracy_of(&f, &y_test));
            by_gamma.push(scores);
            continue;
        }
        let mut kernel = DenseKernel::from_distances(&d_train, gamma);
        let k_test: Vec<f64> = d_test.values.iter().map(|d| (-gamma * d).exp()).collect();
        let mut warm: Option<Vec<f64>> = None;
        for &c in &grid.cs {
            let params = SvmParams {
                gamma,
                c,
                ..template.clone()
            };
            let (svm, alpha) = train_on_kernel(&mut kernel, &xt, &y_train, &params, warm.as_deref());
            let decisions: Vec<f64> = (0..test.len())
                .map(|r| {
                    let row = &k_test[r * train.len()..(r + 1) * train.len()];
                    alpha
                        .iter()
                        .zip(row)
                        .zip(&y_train)
                        .filter(|((a, _), _)| **a > 0.0)
                        .map(|((a, k), yi)| a * yi * k)
                        .sum::<f64>()
                        + svm.bias
                })
                .collect();
            scores.push(balanced_accuracy_of(&decisions, &y_test));
            warm = Some(alpha);
        }
        by_gamma.push(scores);
    }
    let mut out = Vec::with_capacity(grid.len());
    for ci in 0..grid.cs.len() {
        for scores in &by_gamma {
            out.push(scores[ci]);
        }
    }
    Ok(out)
}

/// Patient-grouped cross-validated grid search on raw (unscaled) rows. The
/// scaler is refit on the training part of every fold.
pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[f64],
    groups: &[String],
    grid: &HyperGrid,
    folds: usize,
    seed: u64,
    template: &SvmParams,
) -> Result<GridSearch> {
    validate_training(x, y)?;
    if groups.len() != x.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: groups.len(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let assignment = patient_folds(groups, folds, seed)?;
    let mut splits = Vec::with_capacity(folds);
    for k in 0..folds {
        let train: Vec<usize> = (0..x.len()).filter(|&i| assignment[i] != k).collect();
        let test: Vec<usize> = (0..x.len()).filter(|&i| assignment[i] == k).collect();
        check_disjoint(
            train.iter().map(|&i| &groups[i]),
            test.iter().map(|&i| &groups[i]),
        )?;
        splits.push((train, test));
    }
    let per_fold = par::map(&splits, |(train, test)| {
        fold_scores(x, y, train, test, grid, template)
    });
    let per_fold: Vec<Vec<f64>> = per_fold.into_iter().collect::<Result<_>>()?;

    let mut table = Vec::with_capacity(grid.len());
    for (p, (gamma, c)) in grid.points().into_iter().enumerate() {
        let fold_scores: Vec<f64> = per_fold.iter().map(|s| s[p]).collect();
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        table.push(CvRow {
            gamma,
            c,
            mean_balanced_accuracy: mean,
            fold_scores,
        });
    }
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.mean_balanced_accuracy > table[best].mean_balanced_accuracy {
            best = i;
        }
    }
    Ok(GridSearch {
        gamma: table[best].gamma,
        c: table[best].c,
        score: table[best].mean_balanced_accuracy,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_240_points() {
        let g = HyperGrid::default();
        assert_eq!(g.len(), 240);
        assert_eq!(g.points().len(), 240);
        assert!((g.gammas[0] - 1e-5).abs() < 1e-20);
        assert!((g.gammas[14] - 10f64.powf(-1.5)).abs() < 1e-15);
        assert!((g.cs[0] - 1e-3).abs() < 1e-18);
        assert!((g.cs[15] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn folds_never_split_a_patient() {
        let groups: Vec<String> = (0..60).map(|i| format!("p{}", (i * 7) % 13)).collect();
        let a = patient_folds(&groups, 5, 3).unwrap();
        for i in 0..groups.len() {
            for j in 0..groups.len() {
                if groups[i] == groups[j] {
                    assert_eq!(a[i], a[j]);
                }
            }
        }
        assert!((0..5).all(|k| a.contains(&k)));
    }

    #[test]
    fn too_few_patients_is_a_fold_error() {
        let groups: Vec<String> = vec!["a".into(), "b".into(), "a".into()];
        assert!(matches!(
            patient_folds(&groups, 3, 0),
            Err(Error::Fold {
                folds: 3,
                patients: 2
            })
        ));
    }

    #[test]
    fn leakage_is_detected() {
        let a = ["x".to_string(), "y".to_string()];
        let b = ["y".to_string()];
        assert!(matches!(check_disjoint(&a, &b), Err(Error::Leakage(_))));
        assert!(check_disjoint(&a[..1], &b).is_ok());
    }

    #[test]
    fn single_class_fold_scores_recall() {
        assert_eq!(
            balanced_accuracy_of(&[1.0, -1.0, 2.0], &[1.0, 1.0, 1.0]),
            2.0 / 3.0
        );
        assert_eq!(balanced_accuracy_of(&[1.0, -1.0], &[1.0, -1.0]), 1.0);
    }
}

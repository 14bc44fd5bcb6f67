//! Sigmoid calibration `P(SC | f) = 1 / (1 + exp(a f + b))`, fitted by
//! Newton's method with backtracking on the regularized log-likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub a: f64,
    pub b: f64,
}

impl Sigmoid {
    /// Constant 0.5, used when the decision values carry no ordering.
    pub const FLAT: Sigmoid = Sigmoid { a: 0.0, b: 0.0 };

    pub fn probability(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub sigmoid: Sigmoid,
    /// True when every decision value was identical.
    pub flat: bool,
    pub iterations: usize,
}

fn objective(f: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    f.iter()
        .zip(t)
        .map(|(&fi, &ti)| {
            let z = fi * a + b;
            if z >= 0.0 {
                ti * z + (-z).exp().ln_1p()
            } else {
                (ti - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Fits the sigmoid to decision values `f` with labels `y` in {-1, +1}.
///
/// Targets are shrunk towards the class priors, `(n+ + 1)/(n+ + 2)` and
/// `1/(n- + 2)`, which keeps the fit finite on separable data.
pub fn fit_sigmoid(f: &[f64], y: &[f64]) -> Result<SigmoidFit> {
    if f.len() != y.len() {
        return Err(Error::Shape {
            expected: f.len(),
            got: y.len(),
        });
    }
    let pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = y.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClass);
    }
    if f.iter().all(|&v| v == f[0]) {
        return Ok(SigmoidFit {
            sigmoid: Sigmoid::FLAT,
            flat: true,
            iterations: 0,
        });
    }
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect();

    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    let mut a = 0.0;
    let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
    let mut fval = objective(f, &t, a, b);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&fi, &ti) in f.iter().zip(&t) {
            let z = fi * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += fi * fi * d2;
            h22 += d2;
            h21 += fi * d2;
            let d1 = ti - p;
            g1 += fi * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        iterations += 1;
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(f, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(SigmoidFit {
        sigmoid: Sigmoid { a, b },
        flat: false,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_values_give_confident_probabilities() {
        // prior-shrunk targets are (n+1)/(n+2), so 0.99 needs n of order 100s
        let f: Vec<f64> = (0..1000)
            .map(|i| {
                if i < 500 {
                    3.0 + i as f64 * 1e-3
                } else {
                    -3.0 - i as f64 * 1e-3
                }
            })
            .collect();
        let y: Vec<f64> = (0..1000).map(|i| if i < 500 { 1.0 } else { -1.0 }).collect();
        let fit = fit_sigmoid(&f, &y).unwrap();
        assert!(fit.sigmoid.a < 0.0);
        for (fi, yi) in f.iter().zip(&y) {
            let p = fit.sigmoid.probability(*fi);
            if *yi > 0.0 {
                assert!(p >= 0.99, "{p}");
            } else {
                assert!(p <= 0.01, "{p}");
            }
        }
    }

    #[test]
    fn flipping_labels_and_values_complements() {
        let f = [1.2, 0.3, -0.4, 0.8, -1.5, -0.1, 0.05, 2.0];
        let y = [1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        let s = fit_sigmoid(&f, &y).unwrap().sigmoid;
        let nf: Vec<f64> = f.iter().map(|v| -v).collect();
        let ny: Vec<f64> = y.iter().map(|v| -v).collect();
        let r = fit_sigmoid(&nf, &ny).unwrap().sigmoid;
        for x in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            let p = s.probability(x);
            let q = r.probability(-x);
            assert!((p + q - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_values_are_flat() {
        let fit = fit_sigmoid(&[0.4; 6], &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(fit.flat);
        assert_eq!(fit.sigmoid.probability(123.0), 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            fit_sigmoid(&[1.0, 2.0], &[1.0, 1.0]),
            Err(Error::SingleClass)
        ));
    }
}

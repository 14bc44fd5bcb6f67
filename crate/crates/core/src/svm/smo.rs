//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Each step updates the maximal KKT-violating pair analytically.

use crate::svm::kernel::KernelRows;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub c: f64,
    /// Stop once the maximal violation `m(a) - M(a)` drops to this value.
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverOptions {
    pub fn new(c: f64) -> Self {
        SolverOptions {
            c,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Offset `b` of `f(x) = sum_i a_i y_i K(x_i, x) + b`.
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal violation, `max(0, m(a) - M(a))`.
    pub kkt_gap: f64,
    pub converged: bool,
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Largest violation over the current working sets, with the selected pair.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (f64, Option<usize>, Option<usize>) {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let (mut i_best, mut j_best) = (None, None);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], c) && v > gmax {
            gmax = v;
            i_best = Some(t);
        }
        if in_low(y[t], alpha[t], c) && v < gmin {
            gmin = v;
            j_best = Some(t);
        }
    }
    (gmax - gmin, i_best, j_best)
}

/// Maximal KKT violation of `alpha` for the given kernel.
pub fn kkt_violation<K: KernelRows>(kernel: &mut K, y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let grad = gradient(kernel, y, alpha);
    select_pair(alpha, &grad, y, c).0.max(0.0)
}

fn gradient<K: KernelRows>(kernel: &mut K, y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut grad = vec![-1.0; n];
    for i in 0..n {
        if alpha[i] != 0.0 {
            let row = kernel.row(i);
            let s = alpha[i] * y[i];
            for t in 0..n {
                grad[t] += y[t] * s * row[t];
            }
        }
    }
    grad
}

fn bias_from(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    -rho
}

/// Solves the dual; `warm_start` must be feasible for `opts.c`.
pub fn solve<K: KernelRows>(
    kernel: &mut K,
    y: &[f64],
    opts: &SolverOptions,
    warm_start: Option<&[f64]>,
) -> DualSolution {
    let n = y.len();
    let c = opts.c;
    let mut alpha = match warm_start {
        Some(a) => a.iter().map(|v| v.clamp(0.0, c)).collect(),
        None => vec![0.0; n],
    };
    let mut grad = if warm_start.is_some() {
        gradient(kernel, y, &alpha)
    } else {
        vec![-1.0; n]
    };
    let mut iterations = 0;
    let mut gap;
    loop {
        let (g, i_sel, j_sel) = select_pair(&alpha, &grad, y, c);
        gap = g;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            gap = 0.0;
            break;
        };
        if gap <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let (qd_i, qd_j) = (kernel.diag(i), kernel.diag(j));
        let k_ij = kernel.row(i)[j];
        let q_ij = y[i] * y[j] * k_ij;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = qd_i + qd_j + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd_i + qd_j - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        // snap round-off onto the box
        for t in [i, j] {
            alpha[t] = alpha[t].clamp(0.0, c);
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        if d_i != 0.0 {
            let s = y[i] * d_i;
            let row = kernel.row(i);
            for t in 0..n {
                grad[t] += y[t] * s * row[t];
            }
        }
        if d_j != 0.0 {
            let s = y[j] * d_j;
            let row = kernel.row(j);
            for t in 0..n {
                grad[t] += y[t] * s * row[t];
            }
        }
    }
    let bias = bias_from(&alpha, &grad, y, c);
    DualSolution {
        alpha,
        bias,
        iterations,
        kkt_gap: gap.max(0.0),
        converged: gap <= opts.tol,
    }
}

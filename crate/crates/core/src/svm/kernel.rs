//! Gaussian kernel rows, either fully precomputed or served from a
//! byte-capped LRU row cache.

use std::collections::{HashMap, VecDeque};

/// `exp(-gamma * |x - z|^2)`.
pub fn rbf(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, z)).exp()
}

pub fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Access to rows of a symmetric kernel matrix.
pub trait KernelRows {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn diag(&self, i: usize) -> f64;
    /// Row `i`, valid until the next call.
    fn row(&mut self, i: usize) -> &[f64];
}

/// Dense `n x n` kernel matrix.
#[derive(Debug, Clone)]
pub struct DenseKernel {
    n: usize,
    values: Vec<f64>,
}

impl DenseKernel {
    pub fn from_rows(rows: &[Vec<f64>], gamma: f64) -> Self {
        let n = rows.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in 0..i {
                let k = rbf(&rows[i], &rows[j], gamma);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        DenseKernel { n, values }
    }

    /// Kernel from a precomputed squared-distance matrix.
    pub fn from_distances(dist: &SquaredDistances, gamma: f64) -> Self {
        DenseKernel {
            n: dist.rows,
            values: dist.values.iter().map(|d| (-gamma * d).exp()).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

impl KernelRows for DenseKernel {
    fn len(&self) -> usize {
        self.n
    }

    fn diag(&self, i: usize) -> f64 {
        self.values[i * self.n + i]
    }

    fn row(&mut self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Row-major squared distances between two point sets.
#[derive(Debug, Clone)]
pub struct SquaredDistances {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl SquaredDistances {
    pub fn between(a: &[Vec<f64>], b: &[Vec<f64>]) -> Self {
        let mut values = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for z in b {
                values.push(squared_distance(x, z));
            }
        }
        SquaredDistances {
            rows: a.len(),
            cols: b.len(),
            values,
        }
    }

    pub fn symmetric(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = squared_distance(&a[i], &a[j]);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        SquaredDistances {
            rows: n,
            cols: n,
            values,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

/// Kernel rows computed on demand and kept in an LRU cache of bounded size.
pub struct CachedKernel<'a> {
    points: &'a [Vec<f64>],
    gamma: f64,
    capacity_rows: usize,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl<'a> CachedKernel<'a> {
    pub fn new(points: &'a [Vec<f64>], gamma: f64, cache_bytes: usize) -> Self {
        let row_bytes = (points.len() * std::mem::size_of::<f64>()).max(1);
        CachedKernel {
            points,
            gamma,
            capacity_rows: (cache_bytes / row_bytes).max(2),
            rows: HashMap::new(),
            order: VecDeque::new(),
        }
    }
}

impl KernelRows for CachedKernel<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn diag(&self, _i: usize) -> f64 {
        1.0
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows.contains_key(&i) {
            if let Some(pos) = self.order.iter().position(|&r| r == i) {
                self.order.remove(pos);
            }
        } else {
            if self.rows.len() >= self.capacity_rows {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.points[i];
            let row = self.points.iter().map(|z| rbf(xi, z, self.gamma)).collect();
            self.rows.insert(i, row);
        }
        self.order.push_back(i);
        &self.rows[&i]
    }
}

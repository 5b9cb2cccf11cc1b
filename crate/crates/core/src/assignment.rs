//! Maximum-weight bipartite assignment and the exact known-order solver.

use crate::error::{KeychainError, Result};
use crate::model::{KnownOrderInstance, Policy};

/// Dense rows × columns matrix of finite nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(KeychainError::InvalidInput(
                "weight matrix is ragged".into(),
            ));
        }
        let n = rows.len();
        Self::from_flat(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KeychainError::InvalidInput(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(KeychainError::InvalidInput(format!(
                "weight ({}, {}) = {} is not a finite nonnegative number",
                pos / cols.max(1),
                pos % cols.max(1),
                data[pos]
            )));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// A matching given as ascending `(row, column)` pairs. Zero-weight pairs
/// are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub value: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// Shortest augmenting path Hungarian method on the zero-padded square
/// matrix, O(n^3) for n = max(rows, cols).
pub fn max_weight_assignment(w: &WeightMatrix) -> Assignment {
    let n = w.rows.max(w.cols);
    if n == 0 {
        return Assignment {
            value: 0.0,
            pairs: Vec::new(),
        };
    }
    let cost = |i: usize, j: usize| -> f64 {
        if i < w.rows && j < w.cols {
            -w.get(i, j)
        } else {
            0.0
        }
    };
    // 1-based potentials; column 0 is the virtual source
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter_map(|j| {
            let (r, c) = (owner[j] - 1, j - 1);
            (r < w.rows && c < w.cols && w.get(r, c) > 0.0).then_some((r, c))
        })
        .collect();
    pairs.sort_unstable();
    let value = pairs.iter().map(|&(r, c)| w.get(r, c)).sum();
    Assignment { value, pairs }
}

/// Bayes-optimal policy for a fixed chain order: assign keys to the round
/// where they are first tested, with weight r_{k,t}.
pub fn solve_known_order(instance: &KnownOrderInstance) -> (f64, Policy) {
    let w = WeightMatrix::new(instance.reward_matrix())
        .expect("reward matrix entries are finite and nonnegative");
    let a = max_weight_assignment(&w);
    let mut assignment = vec![None; instance.num_rounds()];
    for &(k, t) in &a.pairs {
        assignment[t] = Some(k);
    }
    (a.value, Policy::known_order(assignment))
}

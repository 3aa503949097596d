//! Coordinate-format sparse systems and the direct solve backend.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

/// Default relative residual accepted by [`solve_linear`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sparse matrix in coordinate form; duplicate entries are summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self::rect(n, n)
    }

    pub fn rect(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    /// Row count.
    pub fn dim(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect(),
        }
    }

    /// Summed entries as a sorted map; used to compare assembled operators.
    pub fn to_sorted(&self) -> std::collections::BTreeMap<(usize, usize), f64> {
        let mut m = std::collections::BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *m.entry((i, j)).or_insert(0.0) += v;
        }
        m
    }
}

/// Matrix, right-hand side and residual tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub tol: f64,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        SparseSystem {
            matrix: SparseMatrix::new(n),
            rhs: vec![0.0; n],
            tol: DEFAULT_TOL,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Replaces the rows and columns of `fixed` by identity rows and moves the
    /// known column contributions to the right-hand side.
    pub fn constrain(&mut self, fixed: &std::collections::BTreeMap<usize, f64>) {
        if fixed.is_empty() {
            return;
        }
        let mut is_fixed = vec![None; self.dim()];
        for (&i, &g) in fixed {
            is_fixed[i] = Some(g);
        }
        let mut kept = Vec::with_capacity(self.matrix.entries.len());
        for &(i, j, v) in &self.matrix.entries {
            if is_fixed[i].is_some() {
                continue;
            }
            match is_fixed[j] {
                Some(g) => self.rhs[i] -= v * g,
                None => kept.push((i, j, v)),
            }
        }
        for (&i, &g) in fixed {
            kept.push((i, i, 1.0));
            self.rhs[i] = g;
        }
        self.matrix.entries = kept;
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r = norm(&ax.iter().zip(&self.rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
        let b = norm(&self.rhs);
        if b == 0.0 {
            r
        } else {
            r / b
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sparse LU with partial pivoting followed by up to three steps of
/// iterative refinement. Sequential, hence bit-reproducible.
pub fn solve_linear(system: &SparseSystem) -> Result<Vec<f64>> {
    let n = system.dim();
    if system.matrix.ncols() != n {
        return Err(Error::Mismatch(format!(
            "matrix is {n}x{}, not square",
            system.matrix.ncols()
        )));
    }
    if system.rhs.len() != n {
        return Err(Error::Mismatch(format!(
            "right-hand side has {} entries for a {n}x{n} matrix",
            system.rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let triplets: Vec<_> = system
        .matrix
        .entries
        .iter()
        .map(|&(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Singular(format!("matrix construction failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;

    let solve = |b: &[f64]| -> Vec<f64> {
        let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        (0..n).map(|i| x[(i, 0)]).collect()
    };

    let bnorm = norm(&system.rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = solve(&system.rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!(
            "{n}x{n} system has a zero pivot (non-finite solution)"
        )));
    }
    let mut res = system.relative_residual(&x);
    for _ in 0..3 {
        if res <= 0.01 * system.tol {
            break;
        }
        let ax = system.matrix.matvec(&x);
        let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let trial_res = system.relative_residual(&trial);
        if !(trial_res < res) {
            break;
        }
        x = trial;
        res = trial_res;
    }
    if !res.is_finite() || res > system.tol {
        return Err(Error::SolveAccuracy { residual: res });
    }
    Ok(x)
}

use ndarray::Array2;
use rayon::prelude::*;

use super::SymmetricOperator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric matrix in compressed sparse row form. Both triangles are
/// stored; column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseSymmetric<T> {
    /// Builds from per-row `(column, value)` lists. Duplicate columns within
    /// a row are summed. Symmetry is checked exactly on the pattern and to
    /// `1e-9` relative on values.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::ShapeMismatch(format!("{} rows for n = {n}", rows.len())));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                if c >= n {
                    return Err(Error::IndexOutOfRange { index: c, len: n });
                }
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let m = Self { n, row_ptr, cols, vals };
        m.check_symmetric(1e-9)?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Same pattern, values replaced by `f(i, j, v)`.
    pub fn map_entries(&self, f: impl Fn(usize, usize, T) -> T + Sync) -> Self {
        let mut vals = vec![T::zero(); self.vals.len()];
        vals.par_iter_mut().enumerate().for_each(|(k, out)| {
            let i = self.row_ptr.partition_point(|&p| p <= k) - 1;
            *out = f(i, self.cols[k], self.vals[k]);
        });
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals,
        }
    }

    /// Row sums.
    pub fn degrees(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).1.iter().fold(T::zero(), |s, &v| s + v))
            .collect()
    }

    fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
        for (i, j, v) in self.iter() {
            if j <= i {
                continue;
            }
            let (cols, vals) = self.row(j);
            let mirror = match cols.binary_search(&i) {
                Ok(k) => vals[k],
                Err(_) => {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation: v.as_f64().abs(),
                    })
                }
            };
            let dev = (v - mirror).as_f64().abs();
            if dev > rel_tol * scale {
                return Err(Error::NotSymmetric { row: i, col: j, deviation: dev });
            }
        }
        Ok(())
    }
}

impl<T: Scalar> SymmetricOperator<T> for SparseSymmetric<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).fold(T::zero(), |s, (&j, &v)| s + v * x[j]);
        });
    }

    fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.iter() {
            out[[i, j]] = v;
        }
        out
    }
}

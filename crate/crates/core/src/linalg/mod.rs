//! Dense and sparse symmetric linear algebra used by the spectral stage.

mod eigen;
mod sparse;

pub use eigen::{symmetric_eigen, top_eigenpairs, EigenPairs, DENSE_LIMIT};
pub use sparse::SparseSymmetric;

use ndarray::Array2;
use rayon::prelude::*;

use crate::scalar::Scalar;

/// A symmetric linear operator `y = A x`.
pub trait SymmetricOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[T], y: &mut [T]);

    fn to_dense(&self) -> Array2<T> {
        let n = self.dim();
        let mut out = Array2::zeros((n, n));
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply(&e, &mut col);
            out.column_mut(j).iter_mut().zip(&col).for_each(|(o, &c)| *o = c);
            e[j] = T::zero();
        }
        out
    }
}

impl<T: Scalar> SymmetricOperator<T> for Array2<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = self.row(i);
            *yi = row.iter().zip(x).fold(T::zero(), |s, (&a, &b)| s + a * b);
        });
    }

    fn to_dense(&self) -> Array2<T> {
        self.clone()
    }
}

/// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`, with its position.
pub fn asymmetry<T: Scalar>(a: &Array2<T>) -> (f64, usize, usize) {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let mut worst = (0.0, 0, 0);
    for i in 0..a.nrows() {
        for j in i + 1..a.ncols() {
            let dev = (a[[i, j]] - a[[j, i]]).as_f64().abs();
            if dev > worst.0 {
                worst = (dev, i, j);
            }
        }
    }
    if scale > 0.0 {
        worst.0 /= scale;
    }
    worst
}

//! Normalized spectral clustering of an affinity matrix.
//!
//! `Z = D^{-1/2} V D^{-1/2}` with `D` the degree matrix, the top `m`
//! eigenvectors of `Z` as columns of `U`, rows of `U` scaled to unit length,
//! then k-means on the rows. Labels are zero-based.

use ndarray::{Array2, Axis};

use crate::affinity::{AffinityMatrix, DataMatrix};
use crate::error::{Error, Result};
use crate::fastpath::{dispatch_affinity, AffinityOptions};
use crate::kernels::KernelSpec;
use crate::kmeans::{kmeans, KMeansConfig};
use crate::linalg::{asymmetry, top_eigenpairs, SparseSymmetric, SymmetricOperator};
use crate::scalar::Scalar;

/// Rows shorter than this are left at zero by [`row_normalize`].
pub const ROW_NORM_FLOOR: f64 = 1e-12;

/// Eigenpair residual bound relative to `max(1, |λ|)`.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Number of clusters and of retained eigenvectors.
    pub m: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
    pub degree_floor: f64,
}

impl SpectralConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            kmeans_restarts: 10,
            kmeans_max_iters: 300,
            kmeans_tol: 1e-6,
            seed: 0,
            degree_floor: 1e-12,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.m < 2 || self.m > n_points {
            return Err(Error::InvalidParameter(format!(
                "m = {} clusters must lie in [2, {n_points}]",
                self.m
            )));
        }
        if self.kmeans_restarts == 0 || self.kmeans_max_iters == 0 {
            return Err(Error::InvalidParameter("k-means restarts and iterations must be positive".into()));
        }
        if !(self.kmeans_tol > 0.0 && self.degree_floor > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            restarts: self.kmeans_restarts,
            max_iters: self.kmeans_max_iters,
            tol: self.kmeans_tol,
            seed: self.seed,
        }
    }
}

/// Row-normalized spectral embedding, computed once and clustered as often
/// as needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    /// `N × m`, rows of unit length (or zero).
    pub rows: Array2<T>,
    /// Retained eigenvalues of `Z`, descending.
    pub eigenvalues: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment<T> {
    /// Zero-based cluster per point, each in `0..m`.
    pub labels: Vec<usize>,
    /// Retained eigenvalues of `Z`, descending.
    pub eigenvalues: Vec<T>,
    /// Final k-means objective on the embedding.
    pub distortion: T,
    pub restarts_used: usize,
}

fn floored_inv_sqrt<T: Scalar>(degrees: &[T], floor: f64) -> Vec<T> {
    let floor = T::lit(floor);
    degrees.iter().map(|&d| d.max(floor).sqrt().recip()).collect()
}

/// `D^{-1/2} V D^{-1/2}` with degrees floored at `degree_floor`.
pub fn normalize_affinity<T: Scalar>(v: &AffinityMatrix<T>, degree_floor: f64) -> Array2<T> {
    normalize_dense(v.entries(), degree_floor).expect("affinity is validated symmetric")
}

/// [`normalize_affinity`] for a raw matrix, checking symmetry first.
pub fn normalize_dense<T: Scalar>(v: &Array2<T>, degree_floor: f64) -> Result<Array2<T>> {
    if v.nrows() != v.ncols() {
        return Err(Error::ShapeMismatch(format!("{}x{} affinity", v.nrows(), v.ncols())));
    }
    let (dev, row, col) = asymmetry(v);
    if dev > 1e-9 {
        return Err(Error::NotSymmetric { row, col, deviation: dev });
    }
    let degrees: Vec<T> = v.sum_axis(Axis(1)).to_vec();
    let s = floored_inv_sqrt(&degrees, degree_floor);
    let mut z = v.clone();
    for ((i, j), e) in z.indexed_iter_mut() {
        *e = *e * s[i] * s[j];
    }
    Ok(z)
}

pub fn normalize_sparse<T: Scalar>(v: &SparseSymmetric<T>, degree_floor: f64) -> SparseSymmetric<T> {
    let s = floored_inv_sqrt(&v.degrees(), degree_floor);
    v.map_entries(|i, j, e| e * s[i] * s[j])
}

/// The `m` algebraically largest eigenpairs of `z`, eigenvalues descending
/// and eigenvectors as unit columns.
pub fn top_eigenvectors<T, A>(z: &A, m: usize, seed: u64) -> Result<(Array2<T>, Vec<T>)>
where
    T: Scalar,
    A: SymmetricOperator<T> + ?Sized,
{
    // Single precision cannot reach 1e-6 residuals on large operators.
    let eps = T::epsilon().as_f64();
    let tol = EIGEN_TOLERANCE.max(100.0 * eps * (z.dim() as f64).sqrt());
    let pairs = top_eigenpairs(z, m, tol, seed)?;
    Ok((pairs.vectors, pairs.values))
}

/// Scales rows to unit Euclidean norm; rows with norm below
/// [`ROW_NORM_FLOOR`] become zero.
pub fn row_normalize<T: Scalar>(u: &Array2<T>) -> Array2<T> {
    let mut out = u.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm.as_f64() < ROW_NORM_FLOOR {
            row.fill(T::zero());
        } else {
            row.mapv_inplace(|x| x / norm);
        }
    }
    out
}

/// Embedding of a normalized affinity operator.
pub fn embed<T, A>(z: &A, config: &SpectralConfig) -> Result<Embedding<T>>
where
    T: Scalar,
    A: SymmetricOperator<T> + ?Sized,
{
    config.validate(z.dim())?;
    let (u, eigenvalues) = top_eigenvectors(z, config.m, config.seed)?;
    Ok(Embedding {
        rows: row_normalize(&u),
        eigenvalues,
    })
}

/// Runs k-means on an existing embedding.
pub fn cluster_embedding<T: Scalar>(embedding: &Embedding<T>, config: &SpectralConfig) -> Result<ClusterAssignment<T>> {
    config.validate(embedding.rows.nrows())?;
    let km = kmeans(embedding.rows.view(), config.m, &config.kmeans_config())?;
    Ok(ClusterAssignment {
        labels: km.labels,
        eigenvalues: embedding.eigenvalues.clone(),
        distortion: km.distortion,
        restarts_used: config.kmeans_restarts,
    })
}

/// Spectral clustering of a precomputed affinity.
pub fn msc_from_affinity<T: Scalar>(v: &AffinityMatrix<T>, config: &SpectralConfig) -> Result<ClusterAssignment<T>> {
    config.validate(v.n())?;
    let z = normalize_affinity(v, config.degree_floor);
    cluster_embedding(&embed(&z, config)?, config)
}

/// Multi-point spectral clustering: affinity construction followed by
/// [`msc_from_affinity`].
pub fn msc<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    options: &AffinityOptions,
    config: &SpectralConfig,
) -> Result<ClusterAssignment<T>> {
    config.validate(data.n_points())?;
    let v = dispatch_affinity(data, spec, options)?;
    msc_from_affinity(&v, config)
}

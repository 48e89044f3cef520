//! The order-`n` affinity tensor and its mode-1 unfolding.
//!
//! For `N` points and an `n`-point kernel `K`, the tensor entry at
//! `(i_1, …, i_n)` is `K(x_{i_1}, …, x_{i_n})`. Unfolding along the first
//! index gives an `N × N^{n-1}` matrix `A`; the clustering affinity is
//! `V = A Aᵀ`. `A` is never materialized: columns are generated on demand
//! and accumulated into `V` block by block.
//!
//! Indices are zero-based. Column `j` of `A` corresponds to the tail
//! `(i_2, …, i_n)` with `j = Σ_{l=2}^{n} i_l N^{l-2}`, i.e. `i_2` varies
//! fastest. Repeated indices are part of the tensor.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayViewMut1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{check_unit_cube, pow_support, KernelFamily, KernelSpec};
use crate::scalar::{sum_terms, Scalar};

/// Default cap on `N^{n+1}` for brute-force unfolding.
pub const DEFAULT_BUDGET: f64 = 1e10;

/// Columns generated per accumulation block.
const BLOCK_COLUMNS: usize = 256;

/// Rows of `V` per parallel task. Fixed so that the partial products do not
/// depend on the thread count.
const ROW_BAND: usize = 32;

/// `N` points of `[0,1]^d`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    points: Array2<T>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(points: Array2<T>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(Error::TooFewPoints(points.nrows()));
        }
        if points.ncols() == 0 {
            return Err(Error::InvalidParameter("points need at least one coordinate".into()));
        }
        let points = points.as_standard_layout().into_owned();
        check_unit_cube(points.as_slice().expect("standard layout"))?;
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
            flat.extend_from_slice(r);
        }
        let arr = Array2::from_shape_vec((rows.len(), d), flat).expect("rows * d buffer");
        Self::new(arr)
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.points.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.points
    }

    /// Rows reordered so that row `k` of the result is row `perm[k]` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(self.points.select(Axis(0), perm))
    }
}

/// How an affinity matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AffinityOrigin {
    BruteForce,
    Sampled,
    ClosedForm,
    /// The two-point kernel matrix used directly as the affinity.
    KernelMatrix,
    /// Supplied by the caller.
    Supplied,
}

/// Symmetric nonnegative `N × N` affinity.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    entries: Array2<T>,
    origin: AffinityOrigin,
}

impl<T: Scalar> AffinityMatrix<T> {
    /// Validates symmetry (1e-9 relative) and nonnegativity up to roundoff
    /// (entries ≥ -1e-9 · max entry).
    pub fn new(entries: Array2<T>, origin: AffinityOrigin) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::ShapeMismatch(format!("{}x{} affinity", n, entries.ncols())));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("non-finite affinity entry {bad}")));
        }
        let (dev, row, col) = crate::linalg::asymmetry(&entries);
        if dev > 1e-9 {
            return Err(Error::NotSymmetric { row, col, deviation: dev });
        }
        let max = entries.iter().fold(T::zero(), |m, &v| m.max(v));
        let floor = -T::lit(1e-9) * max;
        for ((row, col), &v) in entries.indexed_iter() {
            if v < floor {
                return Err(Error::NegativeEntry { row, col, value: v.as_f64() });
            }
        }
        Ok(Self { entries, origin })
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<T> {
        self.entries
    }

    pub fn origin(&self) -> AffinityOrigin {
        self.origin
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// `c · V` for `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            entries: &self.entries * c,
            origin: self.origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// `columns` uniform draws with replacement.
    WithReplacement,
    /// Every column exactly once, in index order; `columns` must equal `N^{n-1}`.
    Exhaustive,
}

/// Column sampling for the approximate affinity `V ≈ Σ_k w_k w_kᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub columns: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl SamplingPlan {
    pub fn uniform(columns: usize, seed: u64) -> Self {
        Self {
            columns,
            seed,
            mode: SamplingMode::WithReplacement,
        }
    }

    pub fn exhaustive(n_points: usize, order: usize) -> Result<Self> {
        Ok(Self {
            columns: column_count(n_points, order)?,
            seed: 0,
            mode: SamplingMode::Exhaustive,
        })
    }

    pub fn validate(&self, n_points: usize, order: usize) -> Result<()> {
        if self.columns == 0 {
            return Err(Error::InvalidParameter("sampling plan needs c >= 1 columns".into()));
        }
        match column_count(n_points, order) {
            Ok(total) if self.columns > total => Err(Error::InvalidParameter(format!(
                "c = {} exceeds the {total} columns of the unfolding",
                self.columns
            ))),
            Ok(total) if self.mode == SamplingMode::Exhaustive && self.columns != total => {
                Err(Error::InvalidParameter(format!(
                    "exhaustive sampling needs c = {total}, got {}",
                    self.columns
                )))
            }
            Err(e) if self.mode == SamplingMode::Exhaustive => Err(e),
            _ => Ok(()),
        }
    }
}

/// Number of columns `N^{n-1}` of the unfolding.
pub fn column_count(n_points: usize, order: usize) -> Result<usize> {
    let exponent = order.saturating_sub(1);
    u32::try_from(exponent)
        .ok()
        .and_then(|e| n_points.checked_pow(e))
        .ok_or(Error::IndexOverflow { points: n_points, exponent })
}

/// Column of the unfolding holding the tail `(i_2, …, i_n)`.
pub fn column_index(tail: &[usize], n_points: usize) -> Result<usize> {
    column_count(n_points, tail.len() + 1)?;
    let mut j = 0usize;
    for &i in tail.iter().rev() {
        if i >= n_points {
            return Err(Error::IndexOutOfRange { index: i, len: n_points });
        }
        j = j * n_points + i;
    }
    Ok(j)
}

/// Inverse of [`column_index`].
pub fn column_tail(column: usize, n_points: usize, order: usize) -> Result<Vec<usize>> {
    let total = column_count(n_points, order)?;
    if column >= total {
        return Err(Error::IndexOutOfRange { index: column, len: total });
    }
    let mut rest = column;
    Ok((1..order)
        .map(|_| {
            let i = rest % n_points;
            rest /= n_points;
            i
        })
        .collect())
}

fn check_indices(indices: &[usize], n_points: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= n_points) {
        Some(&i) => Err(Error::IndexOutOfRange { index: i, len: n_points }),
        None => Ok(()),
    }
}

fn check_tuple_len(spec_order: usize, len: usize) -> Result<()> {
    if spec_order != len {
        return Err(Error::DimensionMismatch { expected: spec_order, found: len });
    }
    Ok(())
}

/// Tensor entry `K(x_{i_1}, …, x_{i_n})`.
pub fn tensor_entry<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    indices: &[usize],
) -> Result<T> {
    spec.validate()?;
    check_tuple_len(spec.order, indices.len())?;
    check_indices(indices, data.n_points())?;
    let points: Vec<&[T]> = indices.iter().map(|&i| data.point(i)).collect();
    Ok(spec.eval_unchecked(&points))
}

/// Column of the unfolding obtained by varying the first index with the
/// tail fixed.
pub fn unfolded_column<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    tail: &[usize],
) -> Result<Array1<T>> {
    spec.validate()?;
    check_tuple_len(spec.order, tail.len() + 1)?;
    check_indices(tail, data.n_points())?;
    let eval = ColumnEvaluator::new(data, spec);
    let mut out = Array1::zeros(data.n_points());
    eval.fill(tail, out.view_mut());
    Ok(out)
}

/// Per-point precomputation shared by every column.
struct ColumnEvaluator<'a, T> {
    data: &'a DataMatrix<T>,
    spec: KernelSpec<T>,
    /// `x^q` (or `x ln x` at `q = 1`) per point and coordinate.
    powered: Option<Array2<T>>,
}

impl<'a, T: Scalar> ColumnEvaluator<'a, T> {
    fn new(data: &'a DataMatrix<T>, spec: &KernelSpec<T>) -> Self {
        let powered = match spec.family {
            KernelFamily::JensenTsallis if !spec.is_linear() => {
                let q = spec.q;
                Some(data.as_array().mapv(|x| {
                    if q == T::one() {
                        x.xlnx()
                    } else {
                        pow_support(x, q)
                    }
                }))
            }
            _ => None,
        };
        Self {
            data,
            spec: *spec,
            powered,
        }
    }

    fn fill(&self, tail: &[usize], mut out: ArrayViewMut1<T>) {
        let d = self.data.dim();
        let n = self.data.n_points();
        match (&self.powered, self.spec.family) {
            (Some(powered), _) => {
                let q = self.spec.q;
                let shannon = q == T::one();
                let mut sum = vec![T::zero(); d];
                let mut tail_self = vec![T::zero(); d];
                for &t in tail {
                    let x = self.data.point(t);
                    let p = powered.row(t);
                    for j in 0..d {
                        sum[j] += x[j];
                        tail_self[j] += p[j];
                    }
                }
                let inv = if shannon { T::one() } else { (q - T::one()).recip() };
                for i in 0..n {
                    let x = self.data.point(i);
                    let p = powered.row(i);
                    let terms = (0..d).map(|j| {
                        let total = x[j] + sum[j];
                        let joint = if shannon { total.xlnx() } else { pow_support(total, q) };
                        joint - p[j] - tail_self[j]
                    });
                    out[i] = sum_terms(d, terms) * inv;
                }
            }
            (None, KernelFamily::GaussianBaseline) => {
                let y = self.data.point(tail[0]);
                for i in 0..n {
                    out[i] = crate::kernels::gaussian_raw(self.data.point(i), y, self.spec.sigma);
                }
            }
            (None, _) => {
                // Linear kernel: 2 x_iᵀ s + 2 Σ_{l<k} x_lᵀ x_k over the tail.
                let two = T::lit(2.0);
                let mut sum = vec![T::zero(); d];
                for &t in tail {
                    for (s, &x) in sum.iter_mut().zip(self.data.point(t)) {
                        *s += x;
                    }
                }
                let mut pairs = T::zero();
                for a in 0..tail.len() {
                    for b in a + 1..tail.len() {
                        pairs += crate::kernels::dot_raw(self.data.point(tail[a]), self.data.point(tail[b]));
                    }
                }
                for i in 0..n {
                    out[i] = two * (crate::kernels::dot_raw(self.data.point(i), &sum) + pairs);
                }
            }
        }
    }
}

/// Accumulates `Σ_k w_k w_kᵀ` over the columns named by `tail_of(k)`,
/// `k in 0..count`. Partial sums are formed per block in a fixed order, so
/// the result does not depend on the thread count.
fn accumulate<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    count: usize,
    tail_of: impl Fn(usize) -> Vec<usize> + Sync,
) -> Array2<T> {
    let n = data.n_points();
    let eval = ColumnEvaluator::new(data, spec);
    let mut v = Array2::<T>::zeros((n, n));
    let band = ROW_BAND;
    let mut start = 0;
    while start < count {
        let width = BLOCK_COLUMNS.min(count - start);
        let mut block = Array2::<T>::zeros((n, width));
        block
            .axis_iter_mut(Axis(1))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, col)| eval.fill(&tail_of(start + k), col));
        let bt = block.t();
        v.axis_chunks_iter_mut(Axis(0), band)
            .into_par_iter()
            .enumerate()
            .for_each(|(b, mut rows)| {
                let lo = b * band;
                let hi = lo + rows.nrows();
                let a = block.slice(ndarray::s![lo..hi, ..]);
                general_mat_mul(T::one(), &a, &bt, T::one(), &mut rows);
            });
        start += width;
    }
    symmetrize(&mut v);
    v
}

/// Averages `v` with its transpose in place, removing roundoff asymmetry.
pub(crate) fn symmetrize<T: Scalar>(v: &mut Array2<T>) {
    let n = v.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in i + 1..n {
            let m = (v[[i, j]] + v[[j, i]]) * half;
            v[[i, j]] = m;
            v[[j, i]] = m;
        }
    }
}

fn check_budget(n_points: usize, order: usize, budget: f64) -> Result<()> {
    let required = (n_points as f64).powi(order as i32 + 1);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Exact `V = A Aᵀ` by enumerating all `N^{n-1}` columns, with the default
/// budget of [`DEFAULT_BUDGET`] kernel evaluations.
pub fn brute_force_affinity<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
) -> Result<AffinityMatrix<T>> {
    brute_force_affinity_with_budget(data, spec, DEFAULT_BUDGET)
}

pub fn brute_force_affinity_with_budget<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    budget: f64,
) -> Result<AffinityMatrix<T>> {
    spec.validate()?;
    let n = data.n_points();
    check_budget(n, spec.order, budget)?;
    let count = column_count(n, spec.order)?;
    let order = spec.order;
    let v = accumulate(data, spec, count, |j| {
        column_tail(j, n, order).expect("column in range")
    });
    AffinityMatrix::new(v, AffinityOrigin::BruteForce)
}

/// `V ≈ Σ_{k=1}^{c} w_{j_k} w_{j_k}ᵀ` over sampled unfolding columns. No
/// rescaling is applied.
pub fn sampled_affinity<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    plan: &SamplingPlan,
) -> Result<AffinityMatrix<T>> {
    spec.validate()?;
    let n = data.n_points();
    plan.validate(n, spec.order)?;
    let order = spec.order;
    let v = match plan.mode {
        SamplingMode::Exhaustive => accumulate(data, spec, plan.columns, |j| {
            column_tail(j, n, order).expect("column in range")
        }),
        SamplingMode::WithReplacement => {
            // Drawing each tail index uniformly is a uniform draw over columns
            // and never forms N^{n-1}.
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            let tails: Vec<Vec<usize>> = (0..plan.columns)
                .map(|_| (1..order).map(|_| rng.random_range(0..n)).collect())
                .collect();
            accumulate(data, spec, plan.columns, |k| tails[k].clone())
        }
    };
    AffinityMatrix::new(v, AffinityOrigin::Sampled)
}

/// The two-point kernel matrix `K_ij = k(x_i, x_j)`, for affinity-free
/// spectral clustering baselines.
pub fn kernel_matrix<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
) -> Result<AffinityMatrix<T>> {
    spec.validate()?;
    if spec.order != 2 {
        return Err(Error::Ineligible(format!(
            "kernel matrix needs a two-point kernel, got order {}",
            spec.order
        )));
    }
    let n = data.n_points();
    let mut k = Array2::<T>::zeros((n, n));
    k.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for j in 0..n {
                row[j] = spec.eval_unchecked(&[data.point(i), data.point(j)]);
            }
        });
    symmetrize(&mut k);
    AffinityMatrix::new(k, AffinityOrigin::KernelMatrix)
}

//! Symmetric eigensolvers.
//!
//! [`symmetric_eigen`] is a full dense decomposition (Householder
//! tridiagonalization followed by implicit QL), used directly for small
//! matrices and for the Rayleigh-Ritz step of [`top_eigenpairs`].
//! [`top_eigenpairs`] builds an orthonormal block Krylov basis with full
//! reorthogonalization and extracts Ritz pairs until every requested pair
//! meets its residual target. Blocks (rather than a single start vector)
//! let repeated eigenvalues show up with their multiplicity.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SymmetricOperator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Matrices up to this size are decomposed densely.
pub const DENSE_LIMIT: usize = 400;

/// Extra vectors per Krylov block beyond the requested count.
const BLOCK_EXTRA: usize = 4;

/// Eigenpairs sorted by descending eigenvalue; `vectors` is `n × m` with
/// unit-norm columns.
#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

/// Full eigendecomposition of a symmetric matrix. Eigenvalues are returned
/// in ascending order; column `k` of the matrix is the eigenvector of
/// `values[k]`.
pub fn symmetric_eigen<T: Scalar>(a: &Array2<T>) -> Result<(Vec<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok((vec![], Array2::zeros((0, 0))));
    }
    let mut v: Vec<T> = a.iter().copied().collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, n, &mut v, &mut d, &mut e)?;
    let vectors = Array2::from_shape_vec((n, n), v).expect("n*n buffer");
    Ok((d, vectors))
}

/// Householder reduction of the row-major symmetric `v` to tridiagonal form.
/// On return `d` holds the diagonal, `e[1..]` the subdiagonal and `v` the
/// accumulated orthogonal transformation.
fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL on the symmetric tridiagonal (`d`, `e[1..]`), applying the
/// rotations to the `rows × n` row-major matrix `z`. Eigenvalues end up in
/// `d` in ascending order with the columns of `z` permuted to match.
fn tql2<T: Scalar>(n: usize, rows: usize, z: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence(format!(
                        "QL iteration stalled at eigenvalue {l} of {n}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..rows {
                        let row = &mut z[k * n..(k + 1) * n];
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }

    // Selection sort keeps eigenvector columns aligned with their values.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(i, k);
            for r in 0..rows {
                z.swap(r * n + i, r * n + k);
            }
        }
    }
    Ok(())
}

/// The `m` algebraically largest eigenpairs of a symmetric operator.
///
/// Every returned pair satisfies `‖Au - λu‖₂ ≤ tol · max(1, |λ|)`; if the
/// Krylov space is exhausted first, [`Error::NoConvergence`] is returned.
/// `seed` fixes the random start block, so results are reproducible.
pub fn top_eigenpairs<T, A>(op: &A, m: usize, tol: f64, seed: u64) -> Result<EigenPairs<T>>
where
    T: Scalar,
    A: SymmetricOperator<T> + ?Sized,
{
    let n = op.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenpairs of a {n}x{n} operator"
        )));
    }
    let pairs = if n <= DENSE_LIMIT {
        dense_top(&op.to_dense(), m)?
    } else {
        BlockKrylov::new(op, m, seed).run(tol)?
    };
    for k in 0..m {
        let res = residual_norm(op, pairs.values[k], pairs.vectors.column(k).to_vec().as_slice());
        if res > tol * pairs.values[k].as_f64().abs().max(1.0) {
            return Err(Error::NoConvergence(format!(
                "eigenpair {k} residual {res:.3e} exceeds {tol:.1e}"
            )));
        }
    }
    Ok(pairs)
}

fn dense_top<T: Scalar>(a: &Array2<T>, m: usize) -> Result<EigenPairs<T>> {
    let n = a.nrows();
    let sym = (a + &a.t()) * T::lit(0.5);
    let (values, vectors) = symmetric_eigen(&sym)?;
    let mut out = Array2::zeros((n, m));
    let mut top = Vec::with_capacity(m);
    for k in 0..m {
        let src = n - 1 - k;
        top.push(values[src]);
        out.column_mut(k).assign(&vectors.column(src));
    }
    Ok(EigenPairs {
        values: top,
        vectors: out,
    })
}

pub(crate) fn residual_norm<T, A>(op: &A, lambda: T, u: &[T]) -> f64
where
    T: Scalar,
    A: SymmetricOperator<T> + ?Sized,
{
    let mut au = vec![T::zero(); u.len()];
    op.apply(u, &mut au);
    au.iter()
        .zip(u)
        .map(|(&a, &x)| {
            let r = (a - lambda * x).as_f64();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct BlockKrylov<'a, T, A: ?Sized> {
    op: &'a A,
    n: usize,
    m: usize,
    block: usize,
    basis: Vec<Vec<T>>,
    images: Vec<Vec<T>>,
    /// Lower triangle of the projected matrix, row `k` has `k + 1` entries.
    projected: Vec<Vec<T>>,
    rng: ChaCha8Rng,
}

impl<'a, T: Scalar, A: SymmetricOperator<T> + ?Sized> BlockKrylov<'a, T, A> {
    fn new(op: &'a A, m: usize, seed: u64) -> Self {
        let n = op.dim();
        Self {
            op,
            n,
            m,
            block: (m + BLOCK_EXTRA).min(n),
            basis: Vec::new(),
            images: Vec::new(),
            projected: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
        }
    }

    fn random_vector(&mut self) -> Vec<T> {
        (0..self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                T::lit(z)
            })
            .collect()
    }

    /// Orthogonalizes `v` against the basis (two classical Gram-Schmidt
    /// passes) and appends it. Returns false if `v` lies in the span.
    fn push(&mut self, mut v: Vec<T>) -> bool {
        let original = dot(&v, &v).sqrt();
        if original == T::zero() {
            return false;
        }
        for _ in 0..2 {
            let coeffs: Vec<T> = self.basis.iter().map(|q| dot(q, &v)).collect();
            for (q, c) in self.basis.iter().zip(coeffs) {
                axpy(-c, q, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= T::lit(1e-10) * original || norm == T::zero() {
            return false;
        }
        let inv = norm.recip();
        v.iter_mut().for_each(|x| *x *= inv);
        let mut image = vec![T::zero(); self.n];
        self.op.apply(&v, &mut image);
        let mut row: Vec<T> = self.basis.iter().map(|q| dot(q, &image)).collect();
        row.push(dot(&v, &image));
        self.projected.push(row);
        self.basis.push(v);
        self.images.push(image);
        true
    }

    fn run(mut self, tol: f64) -> Result<EigenPairs<T>> {
        let target = tol * 1e-2;
        while self.basis.len() < self.block {
            let v = self.random_vector();
            self.push(v);
        }
        let mut block_start = 0;
        let mut next_check = self.block + self.m.max(8);
        loop {
            let k = self.basis.len();
            if k >= next_check || k == self.n {
                if let Some(pairs) = self.ritz(target, k == self.n)? {
                    return Ok(pairs);
                }
                next_check = k + self.block.max(k / 4);
            }
            if k == self.n {
                return Err(Error::NoConvergence(format!(
                    "Krylov space exhausted at dimension {k}"
                )));
            }
            let block_end = self.basis.len();
            let candidates: Vec<Vec<T>> = self.images[block_start..block_end].to_vec();
            block_start = block_end;
            for c in candidates {
                if self.basis.len() == self.n {
                    break;
                }
                if !self.push(c) {
                    // Invariant subspace reached along this direction.
                    let mut tries = 0;
                    while tries < 4 && self.basis.len() < self.n {
                        let r = self.random_vector();
                        if self.push(r) {
                            break;
                        }
                        tries += 1;
                    }
                }
            }
        }
    }

    /// Rayleigh-Ritz on the current basis. Returns the top pairs if all meet
    /// `target`, or unconditionally when `last` is set.
    fn ritz(&self, target: f64, last: bool) -> Result<Option<EigenPairs<T>>> {
        let k = self.basis.len();
        let mut h = Array2::<T>::zeros((k, k));
        for (i, row) in self.projected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                h[[i, j]] = v;
                h[[j, i]] = v;
            }
        }
        let (values, vecs) = symmetric_eigen(&h)?;
        let mut out = Array2::zeros((self.n, self.m));
        let mut top = Vec::with_capacity(self.m);
        for r in 0..self.m {
            let src = k - 1 - r;
            let lambda = values[src];
            let mut u = vec![T::zero(); self.n];
            let mut au = vec![T::zero(); self.n];
            for j in 0..k {
                let s = vecs[[j, src]];
                axpy(s, &self.basis[j], &mut u);
                axpy(s, &self.images[j], &mut au);
            }
            let res = au
                .iter()
                .zip(&u)
                .map(|(&a, &x)| {
                    let r = (a - lambda * x).as_f64();
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            if !last && res > target * lambda.as_f64().abs().max(1.0) {
                return Ok(None);
            }
            let norm = dot(&u, &u).sqrt();
            for (i, x) in u.into_iter().enumerate() {
                out[[i, r]] = x / norm;
            }
            top.push(lambda);
        }
        Ok(Some(EigenPairs {
            values: top,
            vectors: out,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseSymmetric;
    use ndarray::array;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    #[test]
    fn dense_small_known() {
        let a = array![[2.0f64, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let u = vecs.column(1);
        assert!((u[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((u[0] - u[1]).abs() < 1e-14);
    }

    #[test]
    fn dense_reconstructs() {
        let a = random_symmetric(30, 1);
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let recon = vecs.dot(&Array2::from_diag(&ndarray::Array1::from(vals))).dot(&vecs.t());
        let err = (&recon - &a).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "reconstruction error {err}");
        let gram = vecs.t().dot(&vecs);
        let orth = (&gram - &Array2::<f64>::eye(30)).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(orth < 1e-12);
    }

    #[test]
    fn identity_top_two() {
        let z = Array2::<f64>::eye(5);
        let p = top_eigenpairs(&z, 2, 1e-6, 0).unwrap();
        assert_eq!(p.values.len(), 2);
        assert!((p.values[0] - 1.0).abs() < 1e-14 && (p.values[1] - 1.0).abs() < 1e-14);
        let dotp: f64 = p.vectors.column(0).dot(&p.vectors.column(1));
        assert!(dotp.abs() < 1e-12);
    }

    #[test]
    fn residuals_random_n50() {
        let z = random_symmetric(50, 7);
        let p = top_eigenpairs(&z, 6, 1e-6, 3).unwrap();
        for k in 0..6 {
            let r = residual_norm(&z, p.values[k], p.vectors.column(k).to_vec().as_slice());
            assert!(r <= 1e-6 * p.values[k].abs().max(1.0));
            if k > 0 {
                assert!(p.values[k - 1] >= p.values[k]);
            }
        }
    }

    #[test]
    fn krylov_matches_dense_with_multiplicity() {
        // Three identical disconnected ring blocks: top eigenvalue has multiplicity 3.
        let block = 150;
        let n = 3 * block;
        let mut rows = vec![Vec::new(); n];
        for b in 0..3 {
            for i in 0..block {
                let a = b * block + i;
                let c = b * block + (i + 1) % block;
                rows[a].push((c, 0.5));
                rows[c].push((a, 0.5));
                rows[a].push((a, 0.1 * ((i % 7) as f64) / 7.0));
            }
        }
        let sparse = SparseSymmetric::from_rows(n, rows).unwrap();
        let dense = sparse.to_dense();
        let expected = dense_top(&dense, 5).unwrap();
        let got = BlockKrylov::new(&sparse, 5, 11).run(1e-8).unwrap();
        for k in 0..5 {
            assert!(
                (expected.values[k] - got.values[k]).abs() < 1e-8,
                "k={k}: {} vs {}",
                expected.values[k],
                got.values[k]
            );
        }
    }

    #[test]
    fn krylov_random_dense() {
        let z = random_symmetric(500, 5);
        let p = top_eigenpairs(&z, 4, 1e-6, 1).unwrap();
        let (vals, _) = symmetric_eigen(&z).unwrap();
        for k in 0..4 {
            assert!((p.values[k] - vals[499 - k]).abs() < 1e-7);
        }
    }

    #[test]
    fn rejects_bad_m() {
        let z = Array2::<f64>::eye(3);
        assert!(top_eigenpairs(&z, 0, 1e-6, 0).is_err());
        assert!(top_eigenpairs(&z, 4, 1e-6, 0).is_err());
    }

    #[test]
    fn f32_dense() {
        let a: Array2<f32> = random_symmetric(20, 2).mapv(|x| x as f32);
        let p = top_eigenpairs(&a, 3, 1e-4, 0).unwrap();
        assert!(p.values[0] >= p.values[1] && p.values[1] >= p.values[2]);
    }
}

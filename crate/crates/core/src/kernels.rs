//! Jensen-Tsallis kernels on the unit cube and their multi-point extensions.
//!
//! The kernels here score similarity between points of `[0,1]^d`:
//!
//! * [`jt_kernel`]: the two-point Jensen-Tsallis kernel `k_q(x, y)`,
//!   positive definite for `q ∈ [0, 2]`. `q = 2` gives twice the dot
//!   product, `q = 1` the Jensen-Shannon kernel.
//! * [`multipoint_kernel`]: `K_{q,n}(x_1, …, x_n)`, the same construction
//!   applied to `n` points at once.
//! * [`multipoint_linear`]: the `q = 2` member, `2 Σ_{i<j} x_iᵀx_j`.
//! * [`gaussian_kernel`]: the usual RBF baseline.
//!
//! Entropic quantities on the probability simplex ([`tsallis_entropy`],
//! [`jt_q_difference`], [`jt_kernel_simplex`]) are provided as well.
//!
//! Conventions: `0 ln 0 = 0`, and `0^q = 0` for every `q` (sums run over
//! the support, which is what makes `q = 0` meaningful). `q = 1` is an exact
//! branch, not a numerical limit. `q` outside `[0, 2]` is rejected.

use crate::error::{Error, Result};
use crate::scalar::{sum_terms, Scalar};

/// Largest supported kernel order.
pub const MAX_ORDER: usize = 64;

/// Tolerance on `Σ p(j) = 1` for [`Pmf`].
pub const PMF_SUM_TOLERANCE: f64 = 1e-9;

/// A point of the unit cube `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T>(Vec<T>);

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs at least one coordinate".into()));
        }
        check_unit_cube(&coords)?;
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A probability mass function on `d` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<T>(Vec<T>);

impl<T: Scalar> Pmf<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty".into()));
        }
        for (j, &p) in probs.iter().enumerate() {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::InvalidPmf(format!("entry {j} = {p} not in [0,1]")));
            }
        }
        let total: T = probs.iter().copied().sum();
        if (total.as_f64() - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    JensenTsallis,
    MultipointLinear,
    GaussianBaseline,
}

/// Which kernel to evaluate and with what parameters.
///
/// `q` is only read by [`KernelFamily::JensenTsallis`], `sigma` only by
/// [`KernelFamily::GaussianBaseline`]. The Gaussian baseline is a two-point
/// kernel, so its order is always 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub q: T,
    pub order: usize,
    pub sigma: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn jensen_tsallis(q: T, order: usize) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::JensenTsallis,
            q,
            order,
            sigma: T::one(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear(order: usize) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::MultipointLinear,
            q: T::lit(2.0),
            order,
            sigma: T::one(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: T) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::GaussianBaseline,
            q: T::lit(2.0),
            order: 2,
            sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.order)?;
        match self.family {
            KernelFamily::JensenTsallis => check_q(self.q),
            KernelFamily::MultipointLinear => Ok(()),
            KernelFamily::GaussianBaseline => {
                if self.order != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian baseline is a two-point kernel, got order {}",
                        self.order
                    )));
                }
                check_sigma(self.sigma)
            }
        }
    }

    /// True when the kernel is the multi-point linear kernel, either by
    /// family or as Jensen-Tsallis with `q = 2`.
    pub fn is_linear(&self) -> bool {
        match self.family {
            KernelFamily::MultipointLinear => true,
            KernelFamily::JensenTsallis => self.q == T::lit(2.0),
            KernelFamily::GaussianBaseline => false,
        }
    }

    /// Evaluates the kernel on `points` without validating them. The slice
    /// length must equal `self.order` and all points must share a dimension.
    pub fn eval_unchecked(&self, points: &[&[T]]) -> T {
        debug_assert_eq!(points.len(), self.order);
        match self.family {
            KernelFamily::JensenTsallis => multipoint_raw(points, self.q),
            KernelFamily::MultipointLinear => linear_raw(points),
            KernelFamily::GaussianBaseline => gaussian_raw(points[0], points[1], self.sigma),
        }
    }

    /// Short human-readable label, e.g. `jt(q=0.5,n=3)`.
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::JensenTsallis => format!("jt(q={},n={})", self.q, self.order),
            KernelFamily::MultipointLinear => format!("linear(n={})", self.order),
            KernelFamily::GaussianBaseline => format!("gaussian(sigma={})", self.sigma),
        }
    }
}

pub(crate) fn check_q<T: Scalar>(q: T) -> Result<()> {
    if q >= T::zero() && q <= T::lit(2.0) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "q",
            value: q.as_f64(),
            range: "[0, 2]",
        })
    }
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (2..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "kernel order n",
            value: order as f64,
            range: "[2, 64]",
        })
    }
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "sigma",
            value: sigma.as_f64(),
            range: "(0, inf)",
        })
    }
}

pub(crate) fn check_unit_cube<T: Scalar>(coords: &[T]) -> Result<()> {
    for &c in coords {
        if !(c >= T::zero() && c <= T::one()) {
            return Err(Error::OutOfRange {
                what: "coordinate",
                value: c.as_f64(),
                range: "[0, 1]",
            });
        }
    }
    Ok(())
}

fn check_same_dim(dims: impl Iterator<Item = usize>) -> Result<usize> {
    let mut expected = None;
    for d in dims {
        match expected {
            None => expected = Some(d),
            Some(e) if e != d => return Err(Error::DimensionMismatch { expected: e, found: d }),
            _ => {}
        }
    }
    expected.ok_or_else(|| Error::InvalidParameter("no inputs".into()))
}

/// `x^q` with `0^q = 0`.
#[inline]
pub(crate) fn pow_support<T: Scalar>(x: T, q: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x.powf(q)
    }
}

fn tsallis_raw<T: Scalar>(p: &[T], q: T) -> T {
    if q == T::one() {
        -sum_terms(p.len(), p.iter().map(|&v| v.xlnx()))
    } else {
        let s = sum_terms(p.len(), p.iter().map(|&v| pow_support(v, q)));
        (T::one() - s) / (q - T::one())
    }
}

pub(crate) fn multipoint_raw<T: Scalar>(points: &[&[T]], q: T) -> T {
    let d = points[0].len();
    let per_coord = |j: usize| {
        let total = points.iter().fold(T::zero(), |acc, p| acc + p[j]);
        if q == T::one() {
            total.xlnx() - points.iter().fold(T::zero(), |acc, p| acc + p[j].xlnx())
        } else {
            pow_support(total, q) - points.iter().fold(T::zero(), |acc, p| acc + pow_support(p[j], q))
        }
    };
    let s = sum_terms(d, (0..d).map(per_coord));
    if q == T::one() {
        s
    } else {
        s / (q - T::one())
    }
}

pub(crate) fn dot_raw<T: Scalar>(x: &[T], y: &[T]) -> T {
    sum_terms(x.len(), x.iter().zip(y).map(|(&a, &b)| a * b))
}

pub(crate) fn linear_raw<T: Scalar>(points: &[&[T]]) -> T {
    let mut s = T::zero();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            s += dot_raw(points[i], points[j]);
        }
    }
    T::lit(2.0) * s
}

pub(crate) fn gaussian_raw<T: Scalar>(x: &[T], y: &[T], sigma: T) -> T {
    let sq = sum_terms(x.len(), x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)));
    (-sq / (T::lit(2.0) * sigma * sigma)).exp()
}

/// Tsallis entropy `H_q(p)`; Shannon entropy at `q = 1`.
pub fn tsallis_entropy<T: Scalar>(p: &Pmf<T>, q: T) -> Result<T> {
    check_q(q)?;
    Ok(tsallis_raw(p.probs(), q))
}

/// The q-logarithm `(x^{1-q} - 1)/(1 - q)`, with `ln x` at `q = 1`.
pub fn q_log<T: Scalar>(x: T, q: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::Domain(format!("q_log needs x > 0, got {x}")));
    }
    if q == T::one() {
        Ok(x.ln())
    } else {
        let e = T::one() - q;
        Ok((x.powf(e) - T::one()) / e)
    }
}

/// Jensen-Tsallis q-difference `H_q(p̄) - n^{-q} Σ H_q(p_i)` of `n ≥ 2`
/// distributions, where `p̄` is their coordinatewise mean.
pub fn jt_q_difference<T: Scalar>(pmfs: &[Pmf<T>], q: T) -> Result<T> {
    check_q(q)?;
    if pmfs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "q-difference needs at least 2 distributions, got {}",
            pmfs.len()
        )));
    }
    let d = check_same_dim(pmfs.iter().map(Pmf::dim))?;
    let n = T::from_count(pmfs.len());
    let mean: Vec<T> = (0..d)
        .map(|j| pmfs.iter().fold(T::zero(), |acc, p| acc + p.probs()[j]) / n)
        .collect();
    let entropies: T = pmfs.iter().map(|p| tsallis_raw(p.probs(), q)).sum();
    Ok(tsallis_raw(&mean, q) - entropies / n.powf(q))
}

/// Jensen-Tsallis kernel between two distributions,
/// `2^q (ln_q 2 - T_q(p1, p2))`.
pub fn jt_kernel_simplex<T: Scalar>(p1: &Pmf<T>, p2: &Pmf<T>, q: T) -> Result<T> {
    let two = T::lit(2.0);
    let t = jt_q_difference(&[p1.clone(), p2.clone()], q)?;
    Ok(two.powf(q) * (q_log(two, q)? - t))
}

/// Two-point Jensen-Tsallis kernel on `[0,1]^d`.
pub fn jt_kernel<T: Scalar>(x: &Point<T>, y: &Point<T>, q: T) -> Result<T> {
    check_q(q)?;
    check_same_dim([x.dim(), y.dim()].into_iter())?;
    Ok(multipoint_raw(&[x.coords(), y.coords()], q))
}

/// Multi-point Jensen-Tsallis kernel `K_{q,n}` on `n ≥ 2` points.
pub fn multipoint_kernel<T: Scalar>(points: &[Point<T>], q: T) -> Result<T> {
    check_q(q)?;
    check_order(points.len())?;
    check_same_dim(points.iter().map(Point::dim))?;
    let views: Vec<&[T]> = points.iter().map(Point::coords).collect();
    Ok(multipoint_raw(&views, q))
}

/// Multi-point linear kernel `2 Σ_{i<j} x_iᵀx_j`.
pub fn multipoint_linear<T: Scalar>(points: &[Point<T>]) -> Result<T> {
    check_order(points.len())?;
    check_same_dim(points.iter().map(Point::dim))?;
    let views: Vec<&[T]> = points.iter().map(Point::coords).collect();
    Ok(linear_raw(&views))
}

/// Gaussian kernel `exp(-‖x - y‖² / (2σ²))`.
pub fn gaussian_kernel<T: Scalar>(x: &Point<T>, y: &Point<T>, sigma: T) -> Result<T> {
    check_sigma(sigma)?;
    check_same_dim([x.dim(), y.dim()].into_iter())?;
    Ok(gaussian_raw(x.coords(), y.coords(), sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pmf(v: &[f64]) -> Pmf<f64> {
        Pmf::new(v.to_vec()).unwrap()
    }

    fn pt(v: &[f64]) -> Point<f64> {
        Point::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn tsallis_examples() {
        let ln2 = 2f64.ln();
        assert!(close(tsallis_entropy(&pmf(&[0.5, 0.5]), 1.0).unwrap(), ln2, 1e-15));
        assert_eq!(tsallis_entropy(&pmf(&[1.0, 0.0]), 2.0).unwrap(), 0.0);
        let h = tsallis_entropy(&pmf(&[0.25, 0.75]), 0.5).unwrap();
        let expected = (1.0 - (0.25f64.sqrt() + 0.75f64.sqrt())) / -0.5;
        assert!(close(h, expected, 1e-15));
        assert!(close(h, 0.732051, 1e-6));
    }

    #[test]
    fn pmf_validation() {
        assert!(matches!(Pmf::new(vec![0.5, 0.6]), Err(Error::InvalidPmf(_))));
        assert!(matches!(Pmf::new(vec![-0.1, 1.1]), Err(Error::InvalidPmf(_))));
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(Pmf::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn q_log_examples() {
        assert_eq!(q_log(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(q_log(1.0, 1.0).unwrap(), 0.0);
        assert!(close(q_log(2.0, 2.0).unwrap(), 0.5, 1e-15));
        assert!(close(q_log(2.0, 1.0).unwrap(), 2f64.ln(), 1e-15));
        assert!(matches!(q_log(0.0, 1.5), Err(Error::Domain(_))));
        assert!(matches!(q_log(-1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn q_difference_examples() {
        let p = pmf(&[0.2, 0.3, 0.5]);
        let t = jt_q_difference(&[p.clone(), p.clone(), p], 1.0).unwrap();
        assert!(t.abs() < 1e-15);
        let pair = [pmf(&[1.0, 0.0]), pmf(&[0.0, 1.0])];
        let t2 = jt_q_difference(&pair, 2.0).unwrap();
        assert!(close(t2, 0.5, 1e-15));
        assert!(close(t2, q_log(2.0, 2.0).unwrap(), 1e-15));
    }

    #[test]
    fn q_difference_errors() {
        let a = pmf(&[1.0, 0.0]);
        let b = pmf(&[0.2, 0.3, 0.5]);
        assert!(matches!(
            jt_q_difference(&[a.clone(), b], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(jt_q_difference(std::slice::from_ref(&a), 1.0).is_err());
        assert!(matches!(
            jt_q_difference(&[a.clone(), a], 2.5),
            Err(Error::OutOfRange { what: "q", .. })
        ));
    }

    #[test]
    fn simplex_kernel_examples() {
        assert!(jt_kernel_simplex(&pmf(&[1.0, 0.0]), &pmf(&[0.0, 1.0]), 2.0).unwrap().abs() < 1e-15);
        let h = pmf(&[0.5, 0.5]);
        assert!(close(jt_kernel_simplex(&h, &h, 2.0).unwrap(), 1.0, 1e-14));
        let e = pmf(&[1.0, 0.0]);
        assert!(close(jt_kernel_simplex(&e, &e, 1.0).unwrap(), 2.0 * 2f64.ln(), 1e-14));
        assert!(close(1.386294, 2.0 * 2f64.ln(), 1e-6));
    }

    #[test]
    fn jt_kernel_examples() {
        assert_eq!(jt_kernel(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0]), 2.0).unwrap(), 0.0);
        let v = jt_kernel(&pt(&[0.5]), &pt(&[0.5]), 1.0).unwrap();
        assert!(close(v, 2f64.ln(), 1e-15));
        let x = pt(&[1.0, 0.0]);
        let v = jt_kernel(&x, &x, 0.5).unwrap();
        assert!(close(v, (2f64.sqrt() - 2.0) / -0.5, 1e-15));
        assert!(close(v, 1.171573, 1e-6));
    }

    #[test]
    fn jt_kernel_rejects_out_of_cube() {
        assert!(matches!(
            Point::new(vec![0.5, 1.5]),
            Err(Error::OutOfRange { what: "coordinate", .. })
        ));
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(jt_kernel(&pt(&[0.5]), &pt(&[0.5, 0.5]), 1.0).is_err());
        assert!(jt_kernel(&pt(&[0.5]), &pt(&[0.5]), -0.1).is_err());
    }

    #[test]
    fn multipoint_examples() {
        let x = pt(&[0.3, 0.9]);
        let y = pt(&[0.7, 0.1]);
        for q in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let two = multipoint_kernel(&[x.clone(), y.clone()], q).unwrap();
            assert_eq!(two, jt_kernel(&x, &y, q).unwrap());
        }
        let one = pt(&[1.0]);
        let v = multipoint_kernel(&[one.clone(), one.clone(), one], 1.0).unwrap();
        assert!(close(v, 3.0 * 3f64.ln(), 1e-15));
        assert!(close(v, 3.295837, 1e-6));
        let z = pt(&[0.0, 0.0]);
        for n in 2..6 {
            assert_eq!(multipoint_kernel(&vec![z.clone(); n], 2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn multipoint_linear_examples() {
        let pts = [pt(&[1.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 1.0])];
        assert_eq!(multipoint_linear(&pts).unwrap(), 4.0);
        let h = pt(&[0.5, 0.5]);
        assert_eq!(multipoint_linear(&[h.clone(), h]).unwrap(), 1.0);
        let z = pt(&[0.0]);
        assert_eq!(multipoint_linear(&vec![z; 7]).unwrap(), 0.0);
        assert!(matches!(
            multipoint_linear(&[pt(&[0.1]), pt(&[0.1, 0.2])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(multipoint_linear(&[pt(&[0.1])]).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let x = pt(&[0.3, 0.4]);
        assert_eq!(gaussian_kernel(&x, &x, 0.1).unwrap(), 1.0);
        let v = gaussian_kernel(&pt(&[1.0, 0.0]), &pt(&[0.0, 0.0]), 1.0).unwrap();
        assert!(close(v, (-0.5f64).exp(), 1e-15));
        assert!(close(v, 0.606531, 1e-6));
        let far = gaussian_kernel(&pt(&[1.0, 1.0]), &pt(&[0.0, 0.0]), 0.01).unwrap();
        assert!(far < 1e-300);
        assert!(gaussian_kernel(&x, &x, 0.0).is_err());
        assert!(gaussian_kernel(&x, &x, -1.0).is_err());
    }

    #[test]
    fn spec_constructors_validate() {
        assert!(KernelSpec::<f64>::jensen_tsallis(2.1, 2).is_err());
        assert!(KernelSpec::<f64>::jensen_tsallis(1.0, 1).is_err());
        assert!(KernelSpec::<f64>::linear(65).is_err());
        assert!(KernelSpec::<f64>::gaussian(0.0).is_err());
        let mut g = KernelSpec::<f64>::gaussian(0.5).unwrap();
        g.order = 3;
        assert!(g.validate().is_err());
        assert!(KernelSpec::<f64>::jensen_tsallis(2.0, 3).unwrap().is_linear());
        assert!(!KernelSpec::<f64>::jensen_tsallis(1.5, 3).unwrap().is_linear());
    }

    #[test]
    fn long_vectors_use_compensated_sums() {
        // 2000 coordinates: compensated and naive differ, both close to the exact value.
        let d = 2000;
        let x = Point::new(vec![0.25f64; d]).unwrap();
        let v = jt_kernel(&x, &x, 2.0).unwrap();
        assert!(close(v, 2.0 * d as f64 * 0.0625, 1e-14));
    }

    #[test]
    fn f32_agrees_with_f64() {
        let x64 = [0.2, 0.7, 0.05];
        let y64 = [0.9, 0.0, 0.4];
        let x32: Vec<f32> = x64.iter().map(|&v| v as f32).collect();
        let y32: Vec<f32> = y64.iter().map(|&v| v as f32).collect();
        for q in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let a = jt_kernel(&pt(&x64), &pt(&y64), q).unwrap();
            let b = jt_kernel(
                &Point::new(x32.clone()).unwrap(),
                &Point::new(y32.clone()).unwrap(),
                q as f32,
            )
            .unwrap();
            assert!(close(b as f64, a, 1e-5), "q={q}: {a} vs {b}");
        }
    }

    fn unit_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, d)
    }

    fn simplex_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, d).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-12;
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        })
    }

    fn normalized(v: Vec<f64>) -> Vec<f64> {
        // Renormalize in f64 so the sum is within 1e-15 of 1.
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #[test]
        fn symmetric(x in unit_vec(4), y in unit_vec(4), q in 0.0f64..=2.0) {
            let (x, y) = (pt(&x), pt(&y));
            prop_assert_eq!(jt_kernel(&x, &y, q).unwrap(), jt_kernel(&y, &x, q).unwrap());
        }

        #[test]
        fn permutation_invariant(
            pts in prop::collection::vec(unit_vec(3), 2..=6),
            q in prop::sample::select(vec![0.0, 0.5, 1.0, 1.5, 2.0, 0.73]),
            perm_seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let points: Vec<Point<f64>> = pts.iter().map(|p| pt(p)).collect();
            let mut shuffled = points.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let a = multipoint_kernel(&points, q).unwrap();
            let b = multipoint_kernel(&shuffled, q).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn nonnegative(
            pts in prop::collection::vec(unit_vec(3), 2..=6),
            q in 0.0f64..=2.0,
        ) {
            let points: Vec<Point<f64>> = pts.iter().map(|p| pt(p)).collect();
            prop_assert!(multipoint_kernel(&points, q).unwrap() >= -1e-12);
        }

        #[test]
        fn q2_is_linear(pts in prop::collection::vec(unit_vec(3), 2..=6)) {
            let points: Vec<Point<f64>> = pts.iter().map(|p| pt(p)).collect();
            let a = multipoint_kernel(&points, 2.0).unwrap();
            let b = multipoint_linear(&points).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) || (a - b).abs() < 1e-14);
        }

        #[test]
        fn simplex_identity(p1 in simplex_vec(5), p2 in simplex_vec(5), q in 0.0f64..=2.0) {
            let (p1, p2) = (normalized(p1), normalized(p2));
            let k_simplex = jt_kernel_simplex(&pmf(&p1), &pmf(&p2), q).unwrap();
            let k_cube = jt_kernel(&pt(&p1), &pt(&p2), q).unwrap();
            prop_assert!((k_simplex - k_cube).abs() <= 1e-10 * k_cube.abs().max(1e-12),
                "q={} simplex={} cube={}", q, k_simplex, k_cube);
        }

        #[test]
        fn q_continuity(x in prop::collection::vec(0.05f64..=1.0, 3), y in prop::collection::vec(0.05f64..=1.0, 3)) {
            let (x, y) = (pt(&x), pt(&y));
            let at_one = jt_kernel(&x, &y, 1.0).unwrap();
            for q in [1.0 - 1e-6, 1.0 + 1e-6] {
                prop_assert!((jt_kernel(&x, &y, q).unwrap() - at_one).abs() <= 1e-4);
            }
        }

        #[test]
        fn q_difference_bounded(p1 in simplex_vec(4), p2 in simplex_vec(4), q in 0.0f64..=2.0) {
            let (p1, p2) = (normalized(p1), normalized(p2));
            let t = jt_q_difference(&[pmf(&p1), pmf(&p2)], q).unwrap();
            prop_assert!(t <= q_log(2.0, q).unwrap() + 1e-12);
        }
    }
}

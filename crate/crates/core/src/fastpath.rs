//! Closed-form affinity for the multi-point linear kernel, and the
//! dispatcher that picks an affinity construction.
//!
//! With `Y` the `N × d` data, `G = Y Yᵀ`, `x̄ = Σ_i x_i` and `g = G 1 = Y x̄`,
//! the linear-kernel affinity of order `n` is
//!
//! ```text
//! V = 4(n-1) N^{n-2} G²
//!   + 8 C(n-1,2) N^{n-3} (g gᵀ + (Gg) 1ᵀ + 1 (Gg)ᵀ)
//!   + 12 C(n-1,3) N^{n-4} ‖x̄‖² (g 1ᵀ + 1 gᵀ)
//!   + 4 C(n-1,2) [N^{n-3} ‖G‖_F² + 2(n-3) N^{n-4} ‖g‖² + C(n-3,2) N^{n-5} ‖x̄‖⁴] 1 1ᵀ
//! ```
//!
//! Terms whose binomial coefficient vanishes are skipped, so negative powers
//! of `N` never appear. When `d < N` the `N × N` Gram matrix is never
//! formed: `G² = Y (YᵀY) Yᵀ`, `Gg = Y (YᵀY) x̄` and `‖G‖_F = ‖YᵀY‖_F`.

use ndarray::{Array1, Array2, Axis};

use crate::affinity::{
    brute_force_affinity_with_budget, kernel_matrix, sampled_affinity, symmetrize, AffinityMatrix,
    AffinityOrigin, DataMatrix, SamplingPlan, DEFAULT_BUDGET,
};
use crate::error::{Error, Result};
use crate::kernels::{check_order, KernelSpec};
use crate::scalar::Scalar;

/// Gram-derived quantities shared by every order of the closed form.
#[derive(Debug, Clone)]
pub struct LinearAffinityInputs<T> {
    pub n_points: usize,
    /// `G²`.
    pub gram_squared: Array2<T>,
    /// `g = Y x̄`.
    pub g: Array1<T>,
    /// `G g`.
    pub gram_g: Array1<T>,
    /// `‖x̄‖²`.
    pub mean_sq: T,
    /// `‖G‖_F²`.
    pub gram_fro_sq: T,
    /// `‖g‖²`.
    pub g_sq: T,
}

impl<T: Scalar> LinearAffinityInputs<T> {
    pub fn new(data: &DataMatrix<T>) -> Self {
        let y = data.as_array();
        let (n, d) = y.dim();
        let xbar = y.sum_axis(Axis(0));
        let g = y.dot(&xbar);
        let (gram_squared, gram_g, gram_fro_sq) = if d < n {
            let scatter = y.t().dot(y);
            let ys = y.dot(&scatter);
            let fro = scatter.iter().map(|&v| v * v).sum::<T>();
            (ys.dot(&y.t()), ys.dot(&xbar), fro)
        } else {
            let gram = y.dot(&y.t());
            let fro = gram.iter().map(|&v| v * v).sum::<T>();
            (gram.dot(&gram), gram.dot(&g), fro)
        };
        Self {
            n_points: n,
            gram_squared,
            mean_sq: xbar.dot(&xbar),
            g_sq: g.dot(&g),
            g,
            gram_g,
            gram_fro_sq,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// `c · N^e` in `T`, failing when the result is not finite.
fn coefficient<T: Scalar>(c: f64, n_points: usize, e: usize) -> Result<T> {
    let v = T::lit(c) * T::from_count(n_points).powi(e as i32);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!(
            "closed-form coefficient {c} * {n_points}^{e} is not representable"
        )))
    }
}

/// Exact linear-kernel affinity in `O(N² d)` using the closed form above.
pub fn closed_form_affinity<T: Scalar>(data: &DataMatrix<T>, order: usize) -> Result<AffinityMatrix<T>> {
    check_order(order)?;
    closed_form_from_inputs(&LinearAffinityInputs::new(data), order)
}

/// Closed form from precomputed inputs, so several orders can share them.
pub fn closed_form_from_inputs<T: Scalar>(
    inputs: &LinearAffinityInputs<T>,
    order: usize,
) -> Result<AffinityMatrix<T>> {
    check_order(order)?;
    let n = order;
    let np = inputs.n_points;
    let c_pairs = binomial(n - 1, 2);
    let c_triples = binomial(n - 1, 3);

    let quad = coefficient::<T>(4.0 * (n - 1) as f64, np, n - 2)?;
    let mut v = &inputs.gram_squared * quad;

    if c_pairs > 0.0 {
        let cross = coefficient::<T>(8.0 * c_pairs, np, n - 3)?;
        let mut constant = coefficient::<T>(4.0 * c_pairs, np, n - 3)? * inputs.gram_fro_sq;
        if n >= 4 {
            let c = coefficient::<T>(4.0 * c_pairs * 2.0 * (n - 3) as f64, np, n - 4)?;
            constant += c * inputs.g_sq;
        }
        let c_tail = binomial(n - 3, 2);
        if c_tail > 0.0 {
            let c = coefficient::<T>(4.0 * c_pairs * c_tail, np, n - 5)?;
            constant += c * inputs.mean_sq * inputs.mean_sq;
        }
        let linear = if c_triples > 0.0 {
            coefficient::<T>(12.0 * c_triples, np, n - 4)? * inputs.mean_sq
        } else {
            T::zero()
        };
        let g = &inputs.g;
        let gg = &inputs.gram_g;
        for ((i, j), e) in v.indexed_iter_mut() {
            *e += cross * (g[i] * g[j] + gg[i] + gg[j]) + linear * (g[i] + g[j]) + constant;
        }
    }

    if v.iter().any(|e| !e.is_finite()) {
        return Err(Error::Overflow(format!(
            "closed-form affinity for N = {np}, n = {n} overflows"
        )));
    }
    symmetrize(&mut v);
    AffinityMatrix::new(v, AffinityOrigin::ClosedForm)
}

/// Which affinity construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AffinityMode {
    /// Closed form for linear kernels, brute force otherwise.
    #[default]
    Auto,
    BruteForce,
    Sampled,
    ClosedForm,
    /// The two-point kernel matrix itself.
    KernelMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityOptions {
    pub mode: AffinityMode,
    /// Required for [`AffinityMode::Sampled`].
    pub plan: Option<SamplingPlan>,
    /// Cap on `N^{n+1}` for brute force.
    pub budget: f64,
}

impl Default for AffinityOptions {
    fn default() -> Self {
        Self {
            mode: AffinityMode::Auto,
            plan: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl AffinityOptions {
    pub fn with_mode(mode: AffinityMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn sampled(plan: SamplingPlan) -> Self {
        Self {
            mode: AffinityMode::Sampled,
            plan: Some(plan),
            ..Self::default()
        }
    }
}

/// Builds the affinity for `spec` on `data` according to `options`.
pub fn dispatch_affinity<T: Scalar>(
    data: &DataMatrix<T>,
    spec: &KernelSpec<T>,
    options: &AffinityOptions,
) -> Result<AffinityMatrix<T>> {
    spec.validate()?;
    match options.mode {
        AffinityMode::Auto if spec.is_linear() => closed_form_affinity(data, spec.order),
        AffinityMode::Auto | AffinityMode::BruteForce => {
            brute_force_affinity_with_budget(data, spec, options.budget)
        }
        AffinityMode::ClosedForm => {
            if !spec.is_linear() {
                return Err(Error::Ineligible(format!(
                    "closed form needs the linear kernel (or q = 2), got {}",
                    spec.label()
                )));
            }
            closed_form_affinity(data, spec.order)
        }
        AffinityMode::Sampled => {
            let plan = options.plan.ok_or_else(|| {
                Error::InvalidParameter("sampled mode needs a sampling plan".into())
            })?;
            sampled_affinity(data, spec, &plan)
        }
        AffinityMode::KernelMatrix => kernel_matrix(data, spec),
    }
}

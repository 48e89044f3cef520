//! Self-checking property suites behind `msc verify`.
//!
//! Every case is generated from `seed` alone, so a failing case can be
//! replayed from the dump alone.

use msc_core::linalg::symmetric_eigen;
use msc_core::{
    brute_force_affinity, closed_form_affinity, kernel_matrix, DataMatrix, KernelSpec, Point,
};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed form against brute force, relative Frobenius error.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// PSD check: min eigenvalue ≥ -tol · max eigenvalue.
pub const PSD_TOLERANCE: f64 = 1e-8;
pub const PERMUTATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// One replayable dump per failing case.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub cases: usize,
    pub inject_fault: bool,
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..=1.0))
}

fn dump(points: &Array2<f64>) -> String {
    let rows: Vec<String> = points
        .outer_iter()
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn closed_form_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut failures = Vec::new();
    for case in 0..opts.cases {
        let n_points = rng.random_range(3..=8);
        let d = rng.random_range(1..=3);
        let order = rng.random_range(2..=5);
        let x = random_points(&mut rng, n_points, d);
        let data = DataMatrix::new(x.clone()).expect("points in the unit cube");
        let outcome = closed_form_affinity(&data, order).and_then(|cf| {
            let bf = brute_force_affinity(&data, &KernelSpec::linear(order)?)?;
            let mut cf = cf.into_entries();
            if opts.inject_fault && case == 0 {
                cf[[0, 0]] *= 1.0 + 1e-6;
            }
            Ok(frobenius(&(&cf - bf.entries())) / frobenius(bf.entries()))
        });
        match outcome {
            Ok(err) if err <= CLOSED_FORM_TOLERANCE => {}
            other => failures.push(format!(
                "case {case}: seed={} N={n_points} d={d} n={order} error={other:?} X={}",
                opts.seed,
                dump(&x)
            )),
        }
    }
    SuiteReport {
        name: "closed-form-vs-brute-force",
        cases: opts.cases,
        failures,
    }
}

pub fn psd_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let mut failures = Vec::new();
    let mut cases = 0;
    for q in [0.0, 0.5, 1.0, 1.5, 2.0] {
        for d in [1, 2, 5, 20] {
            cases += 1;
            let x = random_points(&mut rng, 50, d);
            let data = DataMatrix::new(x.clone()).expect("points in the unit cube");
            let outcome = KernelSpec::jensen_tsallis(q, 2)
                .and_then(|spec| kernel_matrix(&data, &spec))
                .and_then(|k| symmetric_eigen(k.entries()))
                .map(|(vals, _)| (vals[0], vals[vals.len() - 1]));
            match outcome {
                Ok((min, max)) if min >= -PSD_TOLERANCE * max => {}
                other => failures.push(format!(
                    "q={q} d={d} seed={} (min, max eigenvalue)={other:?} X={}",
                    opts.seed,
                    dump(&x)
                )),
            }
        }
    }
    SuiteReport {
        name: "jt-gram-psd",
        cases,
        failures,
    }
}

pub fn permutation_suite(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let mut failures = Vec::new();
    let cases = 200;
    for case in 0..cases {
        let n = rng.random_range(2..=6);
        let d = rng.random_range(1..=4);
        let q = match case % 4 {
            0 => 1.0,
            1 => 2.0,
            _ => rng.random_range(0.0..=2.0),
        };
        let x = random_points(&mut rng, n, d);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let points: Vec<Point<f64>> = x.outer_iter().map(|r| Point::new(r.to_vec()).expect("unit cube")).collect();
        let permuted: Vec<Point<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
        let a = msc_core::multipoint_kernel(&points, q);
        let b = msc_core::multipoint_kernel(&permuted, q);
        let la = msc_core::multipoint_linear(&points);
        let lb = msc_core::multipoint_linear(&permuted);
        let ok = match (a, b, la, lb) {
            (Ok(a), Ok(b), Ok(la), Ok(lb)) => {
                (a - b).abs() <= PERMUTATION_TOLERANCE * a.abs().max(1.0)
                    && (la - lb).abs() <= PERMUTATION_TOLERANCE * la.abs().max(1.0)
            }
            _ => false,
        };
        if !ok {
            failures.push(format!(
                "case {case}: seed={} q={q:?} n={n} d={d} perm={perm:?} X={}",
                opts.seed,
                dump(&x)
            ));
        }
    }
    SuiteReport {
        name: "kernel-permutation-invariance",
        cases,
        failures,
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteReport> {
    vec![closed_form_suite(opts), psd_suite(opts), permutation_suite(opts)]
}

pub fn format_reports(reports: &[SuiteReport]) -> String {
    let mut out = format!("{:<32} {:>6} {:>7}  status\n", "suite", "cases", "failed");
    for r in reports {
        out.push_str(&format!(
            "{:<32} {:>6} {:>7}  {}\n",
            r.name,
            r.cases,
            r.failures.len(),
            if r.passed() { "PASS" } else { "FAIL" }
        ));
    }
    out
}

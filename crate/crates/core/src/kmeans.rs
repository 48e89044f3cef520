//! Lloyd's k-means with k-means++ seeding and seeded restarts.
//!
//! Restart `r` draws from its own `ChaCha8Rng` seeded with `seed + r`, so
//! restarts run in parallel and the result does not depend on scheduling.
//! The best restart by distortion wins; ties go to the lowest restart index.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative distortion change falls to this value.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    /// Zero-based cluster per row.
    pub labels: Vec<usize>,
    pub centers: Array2<T>,
    /// Sum of squared distances to assigned centers.
    pub distortion: T,
    pub iterations: usize,
    /// Restart that produced this result.
    pub restart: usize,
}

/// Clusters the rows of `points` into `k` groups.
pub fn kmeans<T: Scalar>(points: ArrayView2<T>, k: usize, config: &KMeansConfig) -> Result<KMeansResult<T>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} clusters for {n} points")));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidParameter("k-means needs at least one restart".into()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidParameter("k-means tolerance must be positive".into()));
    }
    let runs: Vec<KMeansResult<T>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
            let mut run = lloyd(points, plus_plus(points, k, &mut rng), config);
            run.restart = r;
            run
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.distortion < best.distortion { run } else { best })
        .expect("at least one restart");
    Ok(best)
}

fn sq_dist<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
}

/// k-means++ seeding: each new center is drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn plus_plus<T: Scalar>(points: ArrayView2<T>, k: usize, rng: &mut ChaCha8Rng) -> Array2<T> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(first)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Roundoff can leave `target` past the final partial sum.
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(sq_dist(points.row(i), points.row(pick)).as_f64());
        }
    }
    centers
}

/// Nearest center per point (ties to the lowest index) and the distortion.
fn assign<T: Scalar>(points: ArrayView2<T>, centers: &Array2<T>, labels: &mut [usize], dist: &mut [T]) -> T {
    labels
        .par_iter_mut()
        .zip(dist.par_iter_mut())
        .enumerate()
        .for_each(|(i, (label, d))| {
            let mut best = (0, sq_dist(points.row(i), centers.row(0)));
            for c in 1..centers.nrows() {
                let dc = sq_dist(points.row(i), centers.row(c));
                if dc < best.1 {
                    best = (c, dc);
                }
            }
            *label = best.0;
            *d = best.1;
        });
    dist.iter().copied().sum()
}

/// Gives every empty cluster the point farthest from its current center,
/// taken from clusters that keep at least one member.
fn repair_empty<T: Scalar>(labels: &mut [usize], dist: &mut [T], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..labels.len() {
            if counts[labels[i]] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        counts[labels[i]] -= 1;
        counts[c] = 1;
        labels[i] = c;
        dist[i] = T::zero();
    }
}

fn update_centers<T: Scalar>(points: ArrayView2<T>, labels: &[usize], centers: &mut Array2<T>) {
    let k = centers.nrows();
    let mut counts = vec![0usize; k];
    centers.fill(T::zero());
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = centers.row_mut(l);
        row += &points.row(i);
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = T::from_count(count).recip();
            centers.row_mut(c).mapv_inplace(|v| v * inv);
        }
    }
}

fn lloyd<T: Scalar>(points: ArrayView2<T>, mut centers: Array2<T>, config: &KMeansConfig) -> KMeansResult<T> {
    let n = points.nrows();
    let k = centers.nrows();
    let mut labels = vec![0usize; n];
    let mut dist = vec![T::zero(); n];
    let mut distortion = assign(points, &centers, &mut labels, &mut dist);
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        repair_empty(&mut labels, &mut dist, k);
        update_centers(points, &labels, &mut centers);
        let previous = labels.clone();
        let next = assign(points, &centers, &mut labels, &mut dist);
        debug_assert!(
            next.as_f64() <= distortion.as_f64() * (1.0 + 1e-9) + 1e-12,
            "k-means distortion rose from {distortion} to {next}"
        );
        let change = (distortion - next).abs().as_f64();
        let scale = distortion.as_f64();
        distortion = next;
        if labels == previous || change <= config.tol * scale {
            break;
        }
    }
    repair_empty(&mut labels, &mut dist, k);
    update_centers(points, &labels, &mut centers);
    let distortion = (0..n)
        .map(|i| sq_dist(points.row(i), centers.row(labels[i])))
        .sum();
    KMeansResult {
        labels,
        centers,
        distortion,
        iterations,
        restart: 0,
    }
}

//! Purity, synthetic arcs, feature scaling and parameter sweeps.

use std::collections::HashMap;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::affinity::DataMatrix;
use crate::error::{Error, Result};
use crate::fastpath::{dispatch_affinity, AffinityOptions};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::scalar::Scalar;
use crate::spectral::{cluster_embedding, embed, normalize_affinity, SpectralConfig};

/// Points with ground-truth class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    pub data: DataMatrix<T>,
    pub truth: Vec<usize>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(data: DataMatrix<T>, truth: Vec<usize>) -> Result<Self> {
        if truth.len() != data.n_points() {
            return Err(Error::DimensionMismatch { expected: data.n_points(), found: truth.len() });
        }
        let mut classes = truth.clone();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::TooFewGroups(classes.len()));
        }
        Ok(Self { data, truth })
    }

    pub fn n_classes(&self) -> usize {
        let mut classes = self.truth.clone();
        classes.sort_unstable();
        classes.dedup();
        classes.len()
    }
}

/// Fraction of points in the majority true class of their predicted cluster.
pub fn purity(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: labels.len() });
    }
    if labels.is_empty() {
        return Err(Error::InvalidParameter("purity of an empty labeling".into()));
    }
    let mut counts: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&l, &t) in labels.iter().zip(truth) {
        *counts.entry(l).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = counts.values().map(|c| c.values().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / labels.len() as f64)
}

/// Two concentric noisy arcs in the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSpec {
    pub points_per_arc: usize,
    pub center: (f64, f64),
    pub radii: (f64, f64),
    /// Angles are evenly spaced over this closed interval.
    pub angle_range: (f64, f64),
    pub radial_noise_sd: f64,
    pub seed: u64,
}

impl Default for ArcSpec {
    fn default() -> Self {
        Self {
            points_per_arc: 100,
            center: (0.5, 0.5),
            radii: (0.2, 0.4),
            angle_range: (0.0, std::f64::consts::PI),
            radial_noise_sd: 0.01,
            seed: 0,
        }
    }
}

impl ArcSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let (r0, r1) = self.radii;
        if !(r0 > 0.0 && r1 > 0.0 && r0 != r1) {
            return Err(Error::InvalidParameter(format!("arc radii {r0} and {r1} must be distinct and positive")));
        }
        if self.points_per_arc == 0 {
            return Err(Error::InvalidParameter("arcs need at least one point each".into()));
        }
        if !(self.radial_noise_sd >= 0.0) {
            return Err(Error::InvalidParameter("noise standard deviation must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Inner arc first (truth 0), then outer arc (truth 1). Coordinates are
/// clipped to `[0,1]`.
pub fn gen_arcs(spec: &ArcSpec) -> Result<LabeledDataset<f64>> {
    spec.validate()?;
    let p = spec.points_per_arc;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Array2::zeros((2 * p, 2));
    let mut truth = Vec::with_capacity(2 * p);
    let (a0, a1) = spec.angle_range;
    for (arc, &radius) in [spec.radii.0, spec.radii.1].iter().enumerate() {
        for k in 0..p {
            let t = if p == 1 { 0.5 } else { k as f64 / (p - 1) as f64 };
            let theta = a0 + (a1 - a0) * t;
            let noise: f64 = StandardNormal.sample(&mut rng);
            let r = radius + spec.radial_noise_sd * noise;
            let row = arc * p + k;
            points[[row, 0]] = (spec.center.0 + r * theta.cos()).clamp(0.0, 1.0);
            points[[row, 1]] = (spec.center.1 + r * theta.sin()).clamp(0.0, 1.0);
            truth.push(arc);
        }
    }
    LabeledDataset::new(DataMatrix::new(points)?, truth)
}

/// Per-column min-max scaling into `[0,1]`. Constant columns map to 0.
pub fn minmax_normalize<T: Scalar>(x: &Array2<T>) -> Array2<T> {
    let mut out = x.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let lo = col.iter().copied().fold(T::infinity(), T::min);
        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        col.mapv_inplace(|v| {
            if span > T::zero() {
                ((v - lo) / span).min(T::one()).max(T::zero())
            } else {
                T::zero()
            }
        });
    }
    out
}

/// One sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub spec: KernelSpec<T>,
    pub mean_purity: f64,
    pub best_purity: f64,
    /// Wall-clock seconds for affinity, embedding and all repeats.
    pub wall_time: f64,
}

impl<T: Scalar> SweepRow<T> {
    /// Kernel family name.
    pub fn kernel_name(&self) -> &'static str {
        match self.spec.family {
            KernelFamily::JensenTsallis => "jt",
            KernelFamily::MultipointLinear => "linear",
            KernelFamily::GaussianBaseline => "gaussian",
        }
    }
}

/// Runs spectral clustering for every spec. The embedding is computed once
/// per spec; k-means is repeated `repeats` times with seeds
/// `config.seed + r`, and mean and best purity are reported.
pub fn sweep<T: Scalar>(
    dataset: &LabeledDataset<T>,
    specs: &[KernelSpec<T>],
    options: &AffinityOptions,
    config: &SpectralConfig,
    repeats: usize,
) -> Result<Vec<SweepRow<T>>> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one kernel".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("sweep needs at least one repeat".into()));
    }
    config.validate(dataset.data.n_points())?;
    specs
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let v = dispatch_affinity(&dataset.data, spec, options)?;
            let z = normalize_affinity(&v, config.degree_floor);
            let embedding = embed(&z, config)?;
            let mut purities = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let run = SpectralConfig {
                    seed: config.seed.wrapping_add(r as u64),
                    ..*config
                };
                let assignment = cluster_embedding(&embedding, &run)?;
                purities.push(purity(&assignment.labels, &dataset.truth)?);
            }
            Ok(SweepRow {
                spec: *spec,
                mean_purity: purities.iter().sum::<f64>() / repeats as f64,
                best_purity: purities.iter().copied().fold(0.0, f64::max),
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

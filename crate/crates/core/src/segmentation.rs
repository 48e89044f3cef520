//! Image segmentation: spectral over-segmentation of pixels followed by
//! greedy normalized-cut merging of neighboring clusters.
//!
//! The affinity between pixels is `M = V^{1-λ} ∘ R^λ`, where `V` comes from
//! a multi-point kernel on per-pixel features and `R` is a truncated
//! Gaussian on pixel positions. `M` inherits the sparsity of `R`.

use ndarray::Array2;
use rayon::prelude::*;

use crate::affinity::{AffinityMatrix, DataMatrix};
use crate::error::{Error, Result};
use crate::fastpath::{dispatch_affinity, AffinityOptions};
use crate::kernels::KernelSpec;
use crate::linalg::SparseSymmetric;
use crate::scalar::Scalar;
use crate::spectral::{cluster_embedding, embed, normalize_sparse, SpectralConfig};

/// Default pixel cap, enough for 80×60 images.
pub const MAX_PIXELS: usize = 4800;

pub const TEXTURE_BINS: usize = 16;

/// Grayscale image with intensities in `[0,1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid<T> {
    width: usize,
    height: usize,
    intensities: Vec<T>,
}

impl<T: Scalar> ImageGrid<T> {
    pub fn new(width: usize, height: usize, intensities: Vec<T>) -> Result<Self> {
        Self::with_max_pixels(width, height, intensities, MAX_PIXELS)
    }

    pub fn with_max_pixels(width: usize, height: usize, intensities: Vec<T>, max: usize) -> Result<Self> {
        let pixels = width * height;
        if pixels == 0 {
            return Err(Error::InvalidParameter("image has no pixels".into()));
        }
        if intensities.len() != pixels {
            return Err(Error::DimensionMismatch { expected: pixels, found: intensities.len() });
        }
        if pixels > max {
            return Err(Error::ImageTooLarge { pixels, max });
        }
        crate::kernels::check_unit_cube(&intensities)?;
        Ok(Self { width, height, intensities })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn intensities(&self) -> &[T] {
        &self.intensities
    }

    pub fn at(&self, row: usize, col: usize) -> T {
        self.intensities[row * self.width + col]
    }

    /// Unordered 4-connected neighbor pairs `(i, j)` with `i < j`.
    pub fn neighbor_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (w, h) = (self.width, self.height);
        (0..h).flat_map(move |r| {
            (0..w).flat_map(move |c| {
                let i = r * w + c;
                let right = (c + 1 < w).then_some((i, i + 1));
                let down = (r + 1 < h).then_some((i, i + w));
                right.into_iter().chain(down)
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// One coordinate per pixel: its intensity.
    #[default]
    Intensity,
    /// 16-bin histogram of the 3×3 neighborhood, summing to 1.
    Texture16,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig<T> {
    pub lambda: f64,
    /// Location cutoff radius in pixels.
    pub radius: f64,
    pub m_initial: usize,
    pub target_segments: usize,
    pub feature_mode: FeatureMode,
    pub kernel: KernelSpec<T>,
    pub affinity: AffinityOptions,
    /// `m` is overridden by `m_initial`.
    pub spectral: SpectralConfig,
}

impl<T: Scalar> SegmentationConfig<T> {
    pub fn new(kernel: KernelSpec<T>, target_segments: usize) -> Self {
        Self {
            lambda: 0.008,
            radius: 5.0,
            m_initial: 10,
            target_segments,
            feature_mode: FeatureMode::Intensity,
            kernel,
            affinity: AffinityOptions::default(),
            spectral: SpectralConfig::new(10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::OutOfRange { what: "lambda", value: self.lambda, range: "(0, 1)" });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::OutOfRange { what: "radius", value: self.radius, range: "(0, inf)" });
        }
        if self.target_segments < 2 || self.target_segments > self.m_initial {
            return Err(Error::InvalidParameter(format!(
                "target segments {} must lie in [2, m_initial = {}]",
                self.target_segments, self.m_initial
            )));
        }
        self.kernel.validate()
    }
}

/// Per-pixel feature vectors in pixel order.
pub fn pixel_features<T: Scalar>(image: &ImageGrid<T>, mode: FeatureMode) -> Result<DataMatrix<T>> {
    let n = image.len();
    match mode {
        FeatureMode::Intensity => {
            DataMatrix::new(Array2::from_shape_vec((n, 1), image.intensities.clone()).expect("n x 1"))
        }
        FeatureMode::Texture16 => {
            let (w, h) = (image.width as isize, image.height as isize);
            let ninth = T::lit(1.0 / 9.0);
            let mut feats = Array2::<T>::zeros((n, TEXTURE_BINS));
            feats
                .outer_iter_mut()
                .into_par_iter()
                .enumerate()
                .for_each(|(i, mut hist)| {
                    let (r, c) = ((i / image.width) as isize, (i % image.width) as isize);
                    let mut counts = [0u32; TEXTURE_BINS];
                    for dr in -1..=1 {
                        for dc in -1..=1 {
                            let rr = (r + dr).clamp(0, h - 1) as usize;
                            let cc = (c + dc).clamp(0, w - 1) as usize;
                            counts[texture_bin(image.at(rr, cc))] += 1;
                        }
                    }
                    for (slot, &k) in hist.iter_mut().zip(&counts) {
                        *slot = T::from_count(k as usize) * ninth;
                    }
                });
            DataMatrix::new(feats)
        }
    }
}

/// Equal-width bin over `[0,1]`; `1.0` falls in the last bin.
fn texture_bin<T: Scalar>(v: T) -> usize {
    ((v.as_f64() * TEXTURE_BINS as f64).floor() as usize).min(TEXTURE_BINS - 1)
}

/// `R_ij = exp(-‖p_i - p_j‖²)` for `‖p_i - p_j‖ < r`, zero otherwise, with
/// `p = (row, col)` in pixel units.
pub fn location_similarity<T: Scalar>(image: &ImageGrid<T>, r: f64) -> Result<SparseSymmetric<T>> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange { what: "radius", value: r, range: "(0, inf)" });
    }
    let (w, h) = (image.width, image.height);
    let reach = r.ceil() as isize;
    let rows: Vec<Vec<(usize, T)>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (pr, pc) = ((i / w) as isize, (i % w) as isize);
            let mut row = Vec::new();
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let (qr, qc) = (pr + dr, pc + dc);
                    if qr < 0 || qc < 0 || qr >= h as isize || qc >= w as isize {
                        continue;
                    }
                    let d2 = (dr * dr + dc * dc) as f64;
                    if d2.sqrt() < r {
                        row.push((qr as usize * w + qc as usize, T::lit((-d2).exp())));
                    }
                }
            }
            row
        })
        .collect();
    SparseSymmetric::from_rows(w * h, rows)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, range: "[0, 1)" });
    }
    Ok(())
}

/// `V^{1-λ} R^λ` on the stored pattern of `R`. Entries of `V` below zero
/// (roundoff) are clamped to zero first.
pub fn combined_affinity<T: Scalar>(
    v: &AffinityMatrix<T>,
    r: &SparseSymmetric<T>,
    lambda: f64,
) -> Result<SparseSymmetric<T>> {
    check_lambda(lambda)?;
    if v.n() != r.n() {
        return Err(Error::ShapeMismatch(format!("V is {}x{}, R is {}x{}", v.n(), v.n(), r.n(), r.n())));
    }
    let (a, b) = (T::lit(1.0 - lambda), T::lit(lambda));
    let ve = v.entries();
    Ok(r.map_entries(|i, j, rij| ve[[i, j]].max(T::zero()).powf(a) * rij.powf(b)))
}

/// Dense `V^{1-λ} R^λ` over every entry.
pub fn combined_affinity_dense<T: Scalar>(
    v: &AffinityMatrix<T>,
    r: &AffinityMatrix<T>,
    lambda: f64,
) -> Result<AffinityMatrix<T>> {
    check_lambda(lambda)?;
    if v.n() != r.n() {
        return Err(Error::ShapeMismatch(format!("V is {}x{}, R is {}x{}", v.n(), v.n(), r.n(), r.n())));
    }
    let (a, b) = (T::lit(1.0 - lambda), T::lit(lambda));
    let mut m = v.entries().clone();
    ndarray::Zip::from(&mut m)
        .and(r.entries())
        .for_each(|e, &rij| *e = e.max(T::zero()).powf(a) * rij.powf(b));
    AffinityMatrix::new(m, crate::affinity::AffinityOrigin::Supplied)
}

/// Between-group weight sums `W_ab = Σ_{i∈a, j∈b} M_ij`.
#[derive(Debug, Clone, PartialEq)]
struct GroupWeights {
    /// Original label of each group, ascending.
    labels: Vec<usize>,
    w: Array2<f64>,
}

impl GroupWeights {
    fn new(entries: impl Iterator<Item = (usize, usize, f64)>, labels: &[usize]) -> Result<Self> {
        let mut ids: Vec<usize> = labels.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() < 2 {
            return Err(Error::TooFewGroups(ids.len()));
        }
        let group: Vec<usize> = labels.iter().map(|l| ids.binary_search(l).expect("label present")).collect();
        let mut w = Array2::zeros((ids.len(), ids.len()));
        for (i, j, v) in entries {
            w[[group[i], group[j]]] += v;
        }
        Ok(Self { labels: ids, w })
    }

    fn ncut(&self) -> f64 {
        ncut_of(&self.w, None)
    }

    /// Ncut after merging groups `a` and `b`, without building the merged matrix.
    fn ncut_merged(&self, a: usize, b: usize) -> f64 {
        ncut_of(&self.w, Some((a, b)))
    }

    fn merge(&mut self, a: usize, b: usize) {
        let k = self.labels.len();
        let keep: Vec<usize> = (0..k).filter(|&g| g != b).collect();
        let mut w = Array2::zeros((k - 1, k - 1));
        for (ni, &gi) in keep.iter().enumerate() {
            for (nj, &gj) in keep.iter().enumerate() {
                let fold = |g: usize| if g == a { vec![a, b] } else { vec![g] };
                w[[ni, nj]] = fold(gi)
                    .iter()
                    .flat_map(|&x| fold(gj).into_iter().map(move |y| (x, y)))
                    .map(|(x, y)| self.w[[x, y]])
                    .sum();
            }
        }
        self.labels.remove(b);
        self.w = w;
    }
}

/// `Σ_g cut(g)/assoc(g)` with `assoc(g) = Σ_h W_gh` and
/// `cut(g) = assoc(g) - W_gg`, optionally with `a` and `b` treated as one
/// group. A group with zero association contributes `+∞`.
fn ncut_of(w: &Array2<f64>, merged: Option<(usize, usize)>) -> f64 {
    let k = w.nrows();
    let members = |g: usize| -> Vec<usize> {
        match merged {
            Some((a, b)) if g == a => vec![a, b],
            _ => vec![g],
        }
    };
    let mut total = 0.0;
    for g in 0..k {
        if matches!(merged, Some((_, b)) if g == b) {
            continue;
        }
        let mg = members(g);
        let assoc: f64 = mg.iter().map(|&x| w.row(x).sum()).sum();
        let within: f64 = mg.iter().flat_map(|&x| mg.iter().map(move |&y| (x, y))).map(|(x, y)| w[[x, y]]).sum();
        if assoc <= 0.0 {
            return f64::INFINITY;
        }
        total += (assoc - within) / assoc;
    }
    total
}

/// k-way normalized cut of the partition `labels` under weights `m`.
pub fn ncut<T: Scalar>(m: &SparseSymmetric<T>, labels: &[usize]) -> Result<f64> {
    check_label_len(m.n(), labels)?;
    Ok(GroupWeights::new(m.iter().map(|(i, j, v)| (i, j, v.as_f64())), labels)?.ncut())
}

/// [`ncut`] for a dense weight matrix.
pub fn ncut_dense<T: Scalar>(m: &Array2<T>, labels: &[usize]) -> Result<f64> {
    check_label_len(m.nrows(), labels)?;
    Ok(GroupWeights::new(m.indexed_iter().map(|((i, j), v)| (i, j, v.as_f64())), labels)?.ncut())
}

fn check_label_len(n: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
    }
    Ok(())
}

/// One greedy merge: the pair of labels joined, the resulting Ncut and
/// every candidate that was considered.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub pair: (usize, usize),
    pub ncut: f64,
    pub adjacent_only: bool,
    pub candidates: Vec<((usize, usize), f64)>,
}

/// Greedily merges 4-adjacent clusters until `target` remain, always
/// choosing the merge with the smallest resulting Ncut. Labels of the
/// output are those of the input; a merged pair keeps the smaller label.
pub fn merge_segments<T: Scalar>(
    m: &SparseSymmetric<T>,
    labels: &[usize],
    image: &ImageGrid<T>,
    target: usize,
) -> Result<Vec<usize>> {
    merge_segments_traced(m, labels, image, target).map(|(l, _)| l)
}

pub fn merge_segments_traced<T: Scalar>(
    m: &SparseSymmetric<T>,
    labels: &[usize],
    image: &ImageGrid<T>,
    target: usize,
) -> Result<(Vec<usize>, Vec<MergeStep>)> {
    check_label_len(m.n(), labels)?;
    check_label_len(image.len(), labels)?;
    if target < 1 {
        return Err(Error::InvalidParameter("merge target must be at least 1".into()));
    }
    let mut labels = labels.to_vec();
    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if target > distinct.len() {
        return Err(Error::InvalidParameter(format!(
            "merge target {target} exceeds the {} current groups",
            distinct.len()
        )));
    }
    if target == distinct.len() {
        return Ok((labels, Vec::new()));
    }
    let mut groups = GroupWeights::new(m.iter().map(|(i, j, v)| (i, j, v.as_f64())), &labels)?;
    let mut steps = Vec::new();
    while groups.labels.len() > target {
        let k = groups.labels.len();
        let mut adjacent = vec![vec![false; k]; k];
        for (i, j) in image.neighbor_pairs() {
            let (a, b) = (
                groups.labels.binary_search(&labels[i]).expect("label tracked"),
                groups.labels.binary_search(&labels[j]).expect("label tracked"),
            );
            if a != b {
                adjacent[a.min(b)][a.max(b)] = true;
            }
        }
        let any_adjacent = adjacent.iter().flatten().any(|&x| x);
        let mut candidates = Vec::new();
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            for b in a + 1..k {
                if any_adjacent && !adjacent[a][b] {
                    continue;
                }
                let value = groups.ncut_merged(a, b);
                candidates.push(((groups.labels[a], groups.labels[b]), value));
                if best.is_none_or(|(_, _, v)| value < v) {
                    best = Some((a, b, value));
                }
            }
        }
        let (a, b, value) = best.expect("at least one pair when k >= 2");
        let (la, lb) = (groups.labels[a], groups.labels[b]);
        for l in labels.iter_mut() {
            if *l == lb {
                *l = la;
            }
        }
        groups.merge(a, b);
        steps.push(MergeStep {
            pair: (la, lb),
            ncut: value,
            adjacent_only: any_adjacent,
            candidates,
        });
    }
    Ok((labels, steps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation<T> {
    /// Final segment per pixel, row-major, relabeled to `0..target`.
    pub labels: Vec<usize>,
    /// Spectral partition before merging.
    pub initial_labels: Vec<usize>,
    pub eigenvalues: Vec<T>,
    pub merges: Vec<MergeStep>,
}

/// Relabels to `0..k` in order of first appearance.
pub fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Full pipeline: features, `V`, `R`, `M`, spectral over-segmentation into
/// `m_initial` clusters, then merging down to the target count.
pub fn segment<T: Scalar>(image: &ImageGrid<T>, config: &SegmentationConfig<T>) -> Result<Segmentation<T>> {
    config.validate()?;
    let data = pixel_features(image, config.feature_mode)?;
    let v = dispatch_affinity(&data, &config.kernel, &config.affinity)?;
    let r = location_similarity(image, config.radius)?;
    let m = combined_affinity(&v, &r, config.lambda)?;
    drop(v);
    let spectral = SpectralConfig {
        m: config.m_initial,
        ..config.spectral
    };
    let z = normalize_sparse(&m, spectral.degree_floor);
    let embedding = embed(&z, &spectral)?;
    let initial = cluster_embedding(&embedding, &spectral)?;
    let (merged, merges) = merge_segments_traced(&m, &initial.labels, image, config.target_segments)?;
    Ok(Segmentation {
        labels: compact_labels(&merged),
        initial_labels: initial.labels,
        eigenvalues: initial.eigenvalues,
        merges,
    })
}

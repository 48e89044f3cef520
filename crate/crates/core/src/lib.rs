//! Multi-point spectral clustering with Jensen-Tsallis kernels.
//!
//! The pipeline builds an order-`n` affinity tensor from an `n`-point
//! kernel, unfolds it into an `N × N` affinity `V = A Aᵀ`, and clusters the
//! top eigenvectors of the normalized affinity. Linear kernels take a
//! closed-form shortcut; image segmentation and evaluation helpers sit on
//! top.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod affinity;
pub mod error;
pub mod evaluation;
pub mod fastpath;
pub mod kernels;
pub mod kmeans;
pub mod linalg;
pub mod scalar;
pub mod segmentation;
pub mod spectral;

pub use affinity::{
    brute_force_affinity, brute_force_affinity_with_budget, column_count, column_index,
    column_tail, kernel_matrix, sampled_affinity, tensor_entry, unfolded_column, AffinityMatrix,
    AffinityOrigin, DataMatrix, SamplingMode, SamplingPlan, DEFAULT_BUDGET,
};
pub use error::{Error, Result};
pub use evaluation::{gen_arcs, minmax_normalize, purity, sweep, ArcSpec, LabeledDataset, SweepRow};
pub use fastpath::{
    closed_form_affinity, closed_form_from_inputs, dispatch_affinity, AffinityMode,
    AffinityOptions, LinearAffinityInputs,
};
pub use kernels::{
    gaussian_kernel, jt_kernel, jt_kernel_simplex, jt_q_difference, multipoint_kernel,
    multipoint_linear, q_log, tsallis_entropy, KernelFamily, KernelSpec, Pmf, Point, MAX_ORDER,
};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use linalg::SparseSymmetric;
pub use scalar::{CompensatedSum, Scalar};
pub use segmentation::{
    combined_affinity, combined_affinity_dense, location_similarity, merge_segments,
    merge_segments_traced, ncut, ncut_dense, pixel_features, segment, FeatureMode, ImageGrid,
    MergeStep, Segmentation, SegmentationConfig, MAX_PIXELS,
};
pub use spectral::{
    cluster_embedding, embed, msc, msc_from_affinity, normalize_affinity, normalize_dense,
    normalize_sparse, row_normalize, top_eigenvectors, ClusterAssignment, Embedding,
    SpectralConfig,
};

pub type DataMatrix64 = DataMatrix<f64>;
pub type AffinityMatrix64 = AffinityMatrix<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type Point64 = Point<f64>;
pub type Pmf64 = Pmf<f64>;
pub type ImageGrid64 = ImageGrid<f64>;
pub type SegmentationConfig64 = SegmentationConfig<f64>;
pub type LabeledDataset64 = LabeledDataset<f64>;
pub type ClusterAssignment64 = ClusterAssignment<f64>;

//! Fixtures shared by the acceptance suite: synthetic datasets, the
//! two-tone test image and the bundled Iris table.

use std::path::{Path, PathBuf};

use msc_cli::table::{compact_truth, parse_table, LabelColumn, TableFormat};
use msc_core::{minmax_normalize, DataMatrix, ImageGrid};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Uniform points in `[0,1]^d`.
pub fn uniform_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DataMatrix<f64> {
    DataMatrix::new(Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..=1.0))).unwrap()
}

/// `k` Gaussian blobs of `per` points in `[0,1]^d`, listed blob by blob.
/// Centers are uniform in `[0.1, 0.9]^d`; coordinates are clipped.
pub fn blobs(rng: &mut ChaCha8Rng, k: usize, per: usize, d: usize, sd: f64) -> DataMatrix<f64> {
    let noise = Normal::new(0.0f64, sd).unwrap();
    let mut pts = Array2::zeros((k * per, d));
    for c in 0..k {
        let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
        for p in 0..per {
            for (j, &mu) in center.iter().enumerate() {
                pts[[c * per + p, j]] = (mu + noise.sample(rng)).clamp(0.0, 1.0);
            }
        }
    }
    DataMatrix::new(pts).unwrap()
}

/// 60×60 image, left half 0.2 and right half 0.8, with its mask.
pub fn two_tone() -> (ImageGrid<f64>, Vec<usize>) {
    let px: Vec<f64> = (0..3600).map(|i| if i % 60 < 30 { 0.2 } else { 0.8 }).collect();
    let truth = (0..3600).map(|i| usize::from(i % 60 >= 30)).collect();
    (ImageGrid::new(60, 60, px).unwrap(), truth)
}

/// Iris features min-max scaled into `[0,1]`, with 0-based species labels.
pub fn iris() -> (DataMatrix<f64>, Vec<usize>) {
    let format = TableFormat {
        label_column: Some(LabelColumn::Last),
        ..TableFormat::default()
    };
    let bytes = std::fs::read(data_dir().join("iris.csv")).unwrap();
    let t = parse_table(&bytes, &format).unwrap();
    let truth = compact_truth(t.labels.as_ref().unwrap());
    (DataMatrix::new(minmax_normalize(&t.points)).unwrap(), truth)
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn rel_fro(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff: f64 = (a - b).iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

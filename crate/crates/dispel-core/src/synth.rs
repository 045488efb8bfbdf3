//! Seeded synthetic dataset generators for tests, examples, and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Optional rounding applied to generated feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantize {
    None,
    /// Round to this many decimal places.
    Decimals(u32),
    /// Round to multiples of `2^-bits`. Dyadic grids keep the shift
    /// arithmetic exact in `f64`, which identity-style tests rely on.
    Dyadic(u32),
}

impl Quantize {
    fn apply(self, v: f64) -> f64 {
        match self {
            Quantize::None => v,
            Quantize::Decimals(d) => {
                let scale = 10f64.powi(d as i32);
                (v * scale).round() / scale
            }
            Quantize::Dyadic(bits) => {
                let scale = (1u64 << bits) as f64;
                (v * scale).round() / scale
            }
        }
    }
}

/// Gaussian class blobs with per-class means and spreads.
#[derive(Debug, Clone)]
pub struct BlobSpec {
    pub name: String,
    /// One mean vector per class; all must share a dimension.
    pub class_means: Vec<Vec<f64>>,
    pub class_sizes: Vec<usize>,
    /// Isotropic standard deviation per class.
    pub class_stds: Vec<f64>,
    pub seed: u64,
    pub quantize: Quantize,
}

/// Draw a dataset of Gaussian blobs; class `c` receives label `c + 1`.
/// Rows are grouped by class in label order.
pub fn gaussian_blobs(spec: &BlobSpec) -> Result<Dataset> {
    let nc = spec.class_means.len();
    if nc < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {nc}")));
    }
    if spec.class_sizes.len() != nc || spec.class_stds.len() != nc {
        return Err(Error::Config(
            "class_means, class_sizes, and class_stds must have equal lengths".into(),
        ));
    }
    let m = spec.class_means[0].len();
    if m == 0 || spec.class_means.iter().any(|mu| mu.len() != m) {
        return Err(Error::Config(
            "class means must share a nonzero dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, mu) in spec.class_means.iter().enumerate() {
        let std = spec.class_stds[c];
        let normal = Normal::new(0.0, std.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Config(format!("bad class std {std}: {e}")))?;
        for _ in 0..spec.class_sizes[c] {
            let row: Vec<f64> = mu
                .iter()
                .map(|&center| spec.quantize.apply(center + normal.sample(&mut rng)))
                .collect();
            rows.push(row);
            labels.push(c as u32 + 1);
        }
    }
    Dataset::from_parts(spec.name.clone(), Mat::from_rows(&rows)?, labels)
}

/// A random small blob dataset: 2-4 classes, 2-5 features, 8-16 samples per
/// class, means in a +-8 box, spreads in [0.3, 2.0]. Feature values land on
/// a dyadic grid so shift identities stay exact.
pub fn random_blobs(seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = rng.random_range(2..=4usize);
    let m = rng.random_range(2..=5usize);
    let mut spec = BlobSpec {
        name: format!("random-blobs-{seed}"),
        class_means: Vec::with_capacity(nc),
        class_sizes: Vec::with_capacity(nc),
        class_stds: Vec::with_capacity(nc),
        seed: rng.random(),
        quantize: Quantize::Dyadic(10),
    };
    for _ in 0..nc {
        spec.class_means
            .push((0..m).map(|_| rng.random_range(-8.0..8.0)).collect());
        spec.class_sizes.push(rng.random_range(8..=16));
        spec.class_stds.push(rng.random_range(0.3..2.0));
    }
    gaussian_blobs(&spec)
}

/// Two well-separated classes with a little third-dimension noise; the
/// noise-study experiments run on this shape.
pub fn separable_blobs(n_per_class: usize, gap: f64, seed: u64) -> Result<Dataset> {
    gaussian_blobs(&BlobSpec {
        name: format!("separable-{n_per_class}x2-gap{gap}"),
        class_means: vec![vec![0.0, 0.0, 0.0], vec![gap, gap, 0.0]],
        class_sizes: vec![n_per_class, n_per_class],
        class_stds: vec![1.0, 1.0],
        seed,
        quantize: Quantize::Decimals(4),
    })
}

/// Two classes whose means differ only along the all-ones direction, the
/// configuration where positive shifts monotonically widen the gap.
pub fn label_aligned_blobs(n_per_class: usize, offset: f64, seed: u64) -> Result<Dataset> {
    gaussian_blobs(&BlobSpec {
        name: format!("label-aligned-{n_per_class}x2"),
        class_means: vec![vec![offset, offset], vec![0.0, 0.0]],
        class_sizes: vec![n_per_class, n_per_class],
        class_stds: vec![0.8, 0.8],
        seed,
        quantize: Quantize::Decimals(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_have_requested_shape() {
        let d = separable_blobs(25, 8.0, 1).unwrap();
        assert_eq!(d.n_samples(), 50);
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.class_counts(), vec![25, 25]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_blobs(42).unwrap();
        let b = random_blobs(42).unwrap();
        assert_eq!(a, b);
        let c = random_blobs(43).unwrap();
        assert_ne!(a.features().as_slice(), c.features().as_slice());
    }

    #[test]
    fn dyadic_quantization_lands_on_grid() {
        let d = random_blobs(7).unwrap();
        for v in d.features().as_slice() {
            let scaled = v * 1024.0;
            assert_eq!(scaled, scaled.round());
        }
    }

    #[test]
    fn rejects_mismatched_spec() {
        let err = gaussian_blobs(&BlobSpec {
            name: "bad".into(),
            class_means: vec![vec![0.0], vec![1.0]],
            class_sizes: vec![5],
            class_stds: vec![1.0, 1.0],
            seed: 0,
            quantize: Quantize::None,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
    }
}

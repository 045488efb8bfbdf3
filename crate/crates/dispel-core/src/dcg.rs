//! The class-dispelling transform and its separability analysis.
//!
//! The transform subtracts `alpha * label` from every feature of every
//! sample. Each class translates rigidly along the all-ones direction by an
//! amount proportional to its label, so within-class distances, covariance,
//! and principal directions are untouched while class means move apart as
//! `|alpha|` grows. Repeating a unit subtraction `alpha` times equals one
//! subtraction of `alpha * label`, so the closed form here is exact, not an
//! approximation.
//!
//! Small `alpha` can transiently pull a pair of classes together; the set of
//! such values is the "problem maker range" detected by [`scan_lpmr`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{euclidean, Mat};

/// How a loop count was chosen, carried alongside the value for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaOrigin {
    Fixed,
    Grid,
    HillClimb,
    Sga,
}

/// A loop count plus the provenance of how it was chosen.
///
/// `alpha = 0` is the identity transform; negative values mirror the class
/// motion without changing within-class geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcgParams {
    pub alpha: i64,
    pub origin: AlphaOrigin,
}

impl DcgParams {
    pub fn fixed(alpha: i64) -> Self {
        DcgParams {
            alpha,
            origin: AlphaOrigin::Fixed,
        }
    }
}

/// Pairwise distances between class means.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityScore {
    /// Minimum off-diagonal entry of `per_pair`.
    pub min_pair_distance: f64,
    /// Symmetric zero-diagonal matrix over the classes present, ordered as
    /// in `class_labels`.
    pub per_pair: Mat,
    /// Ascending labels of the classes present in the input.
    pub class_labels: Vec<u32>,
}

/// Shift every feature of every sample by `-alpha * label`.
///
/// The input is untouched; the returned matrix has the same shape. With
/// `alpha = 0` the output is bit-identical to the input.
pub fn apply_dcg(features: &Mat, labels: &[u32], alpha: i64) -> Result<Mat> {
    if features.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let a = alpha as f64;
    let mut out = features.clone();
    for (i, &label) in labels.iter().enumerate() {
        let shift = a * f64::from(label);
        for v in out.row_mut(i) {
            *v -= shift;
        }
    }
    Ok(out)
}

/// Mean feature vector of each class present, keyed by label.
pub fn class_means(features: &Mat, labels: &[u32]) -> Result<BTreeMap<u32, Vec<f64>>> {
    if features.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let m = features.ncols();
    let mut sums: BTreeMap<u32, (Vec<f64>, usize)> = BTreeMap::new();
    for (row, &label) in features.iter_rows().zip(labels) {
        let entry = sums.entry(label).or_insert_with(|| (vec![0.0; m], 0));
        for (s, v) in entry.0.iter_mut().zip(row) {
            *s += v;
        }
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(label, (mut sum, count))| {
            for s in &mut sum {
                *s /= count as f64;
            }
            (label, sum)
        })
        .collect())
}

/// Minimum pairwise Euclidean distance between class means, with the full
/// pairwise matrix. Within-class scatter is invariant under the transform,
/// so this between-class geometry is the quantity the loop count moves.
pub fn separability(features: &Mat, labels: &[u32]) -> Result<SeparabilityScore> {
    let means = class_means(features, labels)?;
    if means.len() < 2 {
        return Err(Error::Degenerate(format!(
            "separability needs at least 2 classes, found {}",
            means.len()
        )));
    }
    let class_labels: Vec<u32> = means.keys().copied().collect();
    let k = class_labels.len();
    let mut per_pair = Mat::zeros(k, k);
    let mut min = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            let d = euclidean(&means[&class_labels[a]], &means[&class_labels[b]]);
            per_pair[(a, b)] = d;
            per_pair[(b, a)] = d;
            if d < min {
                min = d;
            }
        }
    }
    Ok(SeparabilityScore {
        min_pair_distance: min,
        per_pair,
        class_labels,
    })
}

/// Loop counts in `range` whose separability falls strictly below the
/// untouched (`alpha = 0`) baseline, ascending.
pub fn scan_lpmr(
    features: &Mat,
    labels: &[u32],
    range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<i64>> {
    if range.is_empty() {
        return Err(Error::Range(format!(
            "alpha range [{}, {}] is empty",
            range.start(),
            range.end()
        )));
    }
    let baseline = separability(features, labels)?.min_pair_distance;
    let mut out = Vec::new();
    for alpha in range {
        let shifted = apply_dcg(features, labels, alpha)?;
        if separability(&shifted, labels)?.min_pair_distance < baseline {
            out.push(alpha);
        }
    }
    Ok(out)
}

/// Loop count beyond which every pairwise class-mean distance is strictly
/// increasing: `ceil(max pairwise mean distance / min label gap) + 1`.
///
/// Each pairwise distance is a convex quadratic in the loop count whose
/// vertex is bounded by that ratio, so all pairs grow to the right of it.
pub fn dispersion_threshold(features: &Mat, labels: &[u32]) -> Result<i64> {
    let score = separability(features, labels)?;
    let k = score.class_labels.len();
    let mut max_dist = 0.0f64;
    for a in 0..k {
        for b in (a + 1)..k {
            max_dist = max_dist.max(score.per_pair[(a, b)]);
        }
    }
    let mut min_gap = u32::MAX;
    for a in 0..k {
        for b in (a + 1)..k {
            min_gap = min_gap.min(score.class_labels[b].abs_diff(score.class_labels[a]));
        }
    }
    Ok((max_dist / f64::from(min_gap.max(1))).ceil() as i64 + 1)
}

/// Inputs for the projected-range bound check on a loop count.
///
/// `w_row` is one row of a projection matrix, `class_minima` holds the
/// per-class feature-wise minimum vectors, and `centers` the per-class
/// scalar reference values. The bound keeps the squared normalized
/// projection of the shifted minimum inside `(theta_min, theta_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBoundParams {
    w_row: Vec<f64>,
    sigma: f64,
    theta_min: f64,
    theta_max: f64,
    class_minima: BTreeMap<u32, Vec<f64>>,
    centers: BTreeMap<u32, f64>,
}

impl AlphaBoundParams {
    pub fn new(
        w_row: Vec<f64>,
        sigma: f64,
        theta_min: f64,
        theta_max: f64,
        class_minima: BTreeMap<u32, Vec<f64>>,
        centers: BTreeMap<u32, f64>,
    ) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::Config(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if theta_min.is_nan() || theta_max.is_nan() || theta_min >= theta_max {
            return Err(Error::Config(format!(
                "theta_min ({theta_min}) must be below theta_max ({theta_max})"
            )));
        }
        let m = w_row.len();
        for (label, v) in &class_minima {
            if v.len() != m {
                return Err(Error::Shape(format!(
                    "class {label} minimum vector has {} entries, projection row has {m}",
                    v.len()
                )));
            }
        }
        Ok(AlphaBoundParams {
            w_row,
            sigma,
            theta_min,
            theta_max,
            class_minima,
            centers,
        })
    }
}

/// True when the squared normalized projection of the shifted class minimum
/// stays strictly inside `(theta_min, theta_max)` for this loop count.
pub fn validate_alpha_bound(p: &AlphaBoundParams, alpha: i64, label: u32) -> Result<bool> {
    let minimum = p
        .class_minima
        .get(&label)
        .ok_or_else(|| Error::Lookup(format!("no class minimum recorded for label {label}")))?;
    let center = p
        .centers
        .get(&label)
        .ok_or_else(|| Error::Lookup(format!("no center recorded for label {label}")))?;
    let shift = alpha as f64 * f64::from(label);
    let projected: f64 = p
        .w_row
        .iter()
        .zip(minimum)
        .map(|(w, m)| w * (m - shift))
        .sum();
    let value = (projected - center).powi(2) / (p.sigma * p.sigma);
    Ok(p.theta_min < value && value < p.theta_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_covariance;
    use proptest::prelude::*;

    #[test]
    fn alpha_zero_is_identity() {
        let x = Mat::from_rows(&[vec![1.5, -2.0], vec![0.25, 4.0]]).unwrap();
        let out = apply_dcg(&x, &[1, 2], 0).unwrap();
        assert_eq!(out.as_slice(), x.as_slice());
    }

    #[test]
    fn direct_arithmetic_example() {
        let x = Mat::from_rows(&[vec![1.0, 2.0], vec![4.0, 6.0]]).unwrap();
        let out = apply_dcg(&x, &[1, 2], 2).unwrap();
        assert_eq!(out.row(0), &[-1.0, 0.0]);
        assert_eq!(out.row(1), &[0.0, 2.0]);
    }

    #[test]
    fn scalar_pair_disperses_at_large_alpha() {
        // Two scalar points 5 (label 1) and 7 (label 2).
        let x = Mat::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let at = |alpha: i64| {
            let out = apply_dcg(&x, &[1, 2], alpha).unwrap();
            (out[(0, 0)], out[(1, 0)])
        };
        let (p1, p2) = at(10);
        assert_eq!((p1, p2), (-5.0, -13.0));
        assert_eq!((p1 - p2).abs(), 8.0);
        let (q1, q2) = at(3);
        assert_eq!((q1 - q2).abs(), 1.0); // below the baseline gap of 2
    }

    #[test]
    fn label_feature_mismatch_is_shape_error() {
        let x = Mat::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let err = apply_dcg(&x, &[1], 1).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "got {err:?}");
    }

    #[test]
    fn separability_three_four_five() {
        let x = Mat::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![3.0, 4.0],
            vec![3.0, 4.0],
        ])
        .unwrap();
        let s = separability(&x, &[1, 1, 2, 2]).unwrap();
        assert_eq!(s.min_pair_distance, 5.0);
        assert_eq!(s.per_pair[(0, 1)], 5.0);
        assert_eq!(s.per_pair[(1, 0)], 5.0);
        assert_eq!(s.per_pair[(0, 0)], 0.0);
    }

    #[test]
    fn separability_identical_means_is_zero() {
        let x = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let s = separability(&x, &[1, 2]).unwrap();
        assert_eq!(s.min_pair_distance, 0.0);
    }

    #[test]
    fn separability_single_class_is_degenerate() {
        let x = Mat::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let err = separability(&x, &[1, 1]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "got {err:?}");
    }

    #[test]
    fn separability_after_dcg_matches_mean_shift_formula() {
        // Means move to mu_c - alpha * c * ones; verify against recomputation.
        let x = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 1.0, 4.0],
            vec![10.0, -3.0, 0.5],
            vec![12.0, -5.0, 1.5],
        ])
        .unwrap();
        let labels = [1u32, 1, 3, 3];
        for alpha in [-4i64, -1, 0, 2, 7] {
            let shifted = apply_dcg(&x, &labels, alpha).unwrap();
            let got = separability(&shifted, &labels).unwrap().min_pair_distance;

            let means = class_means(&x, &labels).unwrap();
            let (ma, mb) = (&means[&1], &means[&3]);
            let t = alpha as f64;
            let expect: f64 = ma
                .iter()
                .zip(mb)
                .map(|(a, b)| {
                    let d = (a - t * 1.0) - (b - t * 3.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            assert!(
                (got - expect).abs() < 1e-12,
                "alpha={alpha}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn lpmr_scalar_instance() {
        // Distances |alpha - 2| for alphas 1..=4 against baseline 2.
        let x = Mat::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let lpmr = scan_lpmr(&x, &[1, 2], 1..=4).unwrap();
        assert_eq!(lpmr, vec![1, 2, 3]);
    }

    #[test]
    fn lpmr_zero_only_range_is_empty() {
        let x = Mat::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let lpmr = scan_lpmr(&x, &[1, 2], 0..=0).unwrap();
        assert!(lpmr.is_empty());
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn lpmr_empty_range_is_error() {
        let x = Mat::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let err = scan_lpmr(&x, &[1, 2], 3..=1).unwrap_err();
        assert!(matches!(err, Error::Range(_)), "got {err:?}");
    }

    #[test]
    fn lpmr_absent_for_aligned_positive_offset() {
        // Means differ by +c along the all-ones direction with the lower
        // label ahead, so positive alphas only widen the gap.
        let c = 2.0;
        let x = Mat::from_rows(&[
            vec![c, c],
            vec![c + 0.2, c - 0.2],
            vec![0.0, 0.0],
            vec![0.2, -0.2],
        ])
        .unwrap();
        let labels = [1u32, 1, 2, 2];
        let lpmr = scan_lpmr(&x, &labels, 1..=10).unwrap();
        assert!(lpmr.is_empty(), "got {lpmr:?}");
    }

    #[test]
    fn bound_zero_projection_accepts_everything() {
        let p = AlphaBoundParams::new(
            vec![0.0, 0.0],
            1.0,
            -1.0,
            1.0,
            BTreeMap::from([(1, vec![3.0, 4.0])]),
            BTreeMap::from([(1, 0.0)]),
        )
        .unwrap();
        for alpha in -50..=50 {
            assert!(validate_alpha_bound(&p, alpha, 1).unwrap());
        }
    }

    #[test]
    fn bound_is_strict_at_zero() {
        let p = AlphaBoundParams::new(
            vec![0.0],
            1.0,
            0.0,
            1.0,
            BTreeMap::from([(1, vec![5.0])]),
            BTreeMap::from([(1, 0.0)]),
        )
        .unwrap();
        assert!(!validate_alpha_bound(&p, 3, 1).unwrap());
    }

    #[test]
    fn bound_one_feature_hand_example() {
        // w=2, m=3, label=1, C=0, sigma=1, theta in (0, 100).
        let p = AlphaBoundParams::new(
            vec![2.0],
            1.0,
            0.0,
            100.0,
            BTreeMap::from([(1, vec![3.0])]),
            BTreeMap::from([(1, 0.0)]),
        )
        .unwrap();
        assert!(validate_alpha_bound(&p, 2, 1).unwrap()); // (2*(3-2))^2 = 4
        assert!(!validate_alpha_bound(&p, -3, 1).unwrap()); // (2*6)^2 = 144
    }

    #[test]
    fn bound_missing_class_is_lookup_error() {
        let p = AlphaBoundParams::new(
            vec![1.0],
            1.0,
            -1.0,
            1.0,
            BTreeMap::from([(1, vec![0.0])]),
            BTreeMap::from([(1, 0.0)]),
        )
        .unwrap();
        let err = validate_alpha_bound(&p, 0, 2).unwrap_err();
        assert!(matches!(err, Error::Lookup(_)), "got {err:?}");
    }

    #[test]
    fn bound_rejects_bad_parameters() {
        assert!(
            AlphaBoundParams::new(vec![1.0], 0.0, -1.0, 1.0, BTreeMap::new(), BTreeMap::new())
                .is_err()
        );
        assert!(
            AlphaBoundParams::new(vec![1.0], 1.0, 2.0, 1.0, BTreeMap::new(), BTreeMap::new())
                .is_err()
        );
    }

    #[test]
    fn dispersion_threshold_bounds_every_vertex() {
        let x = Mat::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![9.0, 5.0],
            vec![11.0, 7.0],
            vec![-4.0, 2.0],
            vec![-6.0, 4.0],
        ])
        .unwrap();
        let labels = [1u32, 1, 2, 2, 4, 4];
        let t = dispersion_threshold(&x, &labels).unwrap();
        let sep = |alpha: i64| {
            let shifted = apply_dcg(&x, &labels, alpha).unwrap();
            separability(&shifted, &labels).unwrap().min_pair_distance
        };
        let mut prev = sep(t);
        for alpha in (t + 1)..=(t + 15) {
            let cur = sep(alpha);
            assert!(cur > prev, "not increasing at alpha={alpha}");
            prev = cur;
        }
    }

    /// Strategy: features on a coarse dyadic grid (multiples of 1/1024) keep
    /// the transform arithmetic exact, so identity-style properties can be
    /// asserted bitwise.
    fn dyadic_matrix() -> impl Strategy<Value = (Mat, Vec<u32>)> {
        (2usize..6, 1usize..4).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(
                    proptest::collection::vec(
                        (-20480i32..20480).prop_map(|v| v as f64 / 1024.0),
                        m,
                    ),
                    n,
                ),
                proptest::collection::vec(1u32..5, n),
            )
                .prop_map(|(rows, labels)| (Mat::from_rows(&rows).unwrap(), labels))
        })
    }

    proptest! {
        #[test]
        fn within_class_distances_preserved((x, labels) in dyadic_matrix(), alpha in -60i64..60) {
            let out = apply_dcg(&x, &labels, alpha).unwrap();
            for i in 0..x.nrows() {
                for j in (i + 1)..x.nrows() {
                    if labels[i] == labels[j] {
                        let before = euclidean(x.row(i), x.row(j));
                        let after = euclidean(out.row(i), out.row(j));
                        prop_assert!((before - after).abs() <= 1e-9);
                    }
                }
            }
        }

        #[test]
        fn per_class_covariance_preserved((x, labels) in dyadic_matrix(), alpha in -60i64..60) {
            let out = apply_dcg(&x, &labels, alpha).unwrap();
            for label in 1u32..5 {
                let idx: Vec<usize> = (0..x.nrows()).filter(|&i| labels[i] == label).collect();
                if idx.len() < 2 {
                    continue;
                }
                let before = sample_covariance(&x.select_rows(&idx)).unwrap();
                let after = sample_covariance(&out.select_rows(&idx)).unwrap();
                let mut diff = 0.0;
                for (a, b) in before.as_slice().iter().zip(after.as_slice()) {
                    diff += (a - b) * (a - b);
                }
                prop_assert!(diff.sqrt() <= 1e-9);
            }
        }

        #[test]
        fn label_scaling_identity((x, labels) in dyadic_matrix(), alpha in -40i64..40, beta in 1u32..5) {
            let scaled: Vec<u32> = labels.iter().map(|l| l * beta).collect();
            let lhs = apply_dcg(&x, &scaled, alpha).unwrap();
            let rhs = apply_dcg(&x, &labels, alpha * i64::from(beta)).unwrap();
            prop_assert_eq!(lhs.as_slice(), rhs.as_slice());
        }

        #[test]
        fn sign_symmetry_identity((x, labels) in dyadic_matrix(), alpha in -60i64..60) {
            let neg = apply_dcg(&x, &labels, -alpha).unwrap();
            let pos = apply_dcg(&x, &labels, alpha).unwrap();
            for i in 0..x.nrows() {
                for (k, v) in neg.row(i).iter().enumerate() {
                    let reflected = 2.0 * x.row(i)[k] - pos.row(i)[k];
                    prop_assert_eq!(*v, reflected);
                }
            }
        }
    }
}

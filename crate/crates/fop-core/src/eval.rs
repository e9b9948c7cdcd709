//! Posterior maps and pixel-level precision-recall evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::BinaryImage;
use crate::{Error, Result};

/// Per-pixel estimate of `p(x(i,j) = 1 | y)`.
#[derive(Clone, PartialEq, Debug)]
pub struct PosteriorMap {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
    samples: u64,
}

impl PosteriorMap {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>, samples: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage);
        }
        if probs.len() != rows * cols {
            return Err(Error::BadLength {
                expected: rows * cols,
                got: probs.len(),
            });
        }
        for (idx, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::BadPixel {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            probs,
            samples,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.cols + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of MCMC samples averaged into the estimate (0 for maps that
    /// come from a deterministic transform).
    pub fn samples(&self) -> u64 {
        self.samples
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Threshold sweep plus the trapezoidal area under precision over recall.
#[derive(Clone, PartialEq, Debug)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub average_precision: f64,
}

/// `count` evenly spaced thresholds spanning `[0, 1]` inclusive.
pub fn even_thresholds(count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.5];
    }
    (0..count).map(|i| i as f64 / (count - 1) as f64).collect()
}

/// Pixel-level precision-recall over a whole dataset.
///
/// A pixel is predicted positive at threshold `t` when its posterior is
/// `>= t`.  Counts aggregate over all images, so the result is invariant
/// to dataset order.  Empty predictions score precision 1.
pub fn pr_curve(
    predictions: &[PosteriorMap],
    truths: &[BinaryImage],
    thresholds: &[f64],
) -> Result<PrCurve> {
    if predictions.is_empty() || thresholds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != truths.len() {
        return Err(Error::BadLength {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    for (pred, truth) in predictions.iter().zip(truths) {
        if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
            return Err(Error::DimensionMismatch {
                expected: (truth.rows(), truth.cols()),
                got: (pred.rows(), pred.cols()),
            });
        }
    }
    let mut sorted: Vec<f64> = thresholds.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));

    let mut points = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let (mut tp, mut fp, mut fne) = (0u64, 0u64, 0u64);
        for (pred, truth) in predictions.iter().zip(truths) {
            for (idx, &p) in pred.probs().iter().enumerate() {
                let hit = p >= t;
                let on = truth.bits()[idx] != 0;
                match (hit, on) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fne += 1,
                    (false, false) => {}
                }
            }
        }
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fne == 0 {
            1.0
        } else {
            tp as f64 / (tp + fne) as f64
        };
        points.push(PrPoint {
            threshold: t,
            precision,
            recall,
        });
    }

    // Trapezoids between successive thresholds (recall is non-increasing),
    // closed by a constant-precision segment down to recall zero.
    let mut ap = 0.0;
    for pair in points.windows(2) {
        ap += (pair[0].recall - pair[1].recall) * 0.5 * (pair[0].precision + pair[1].precision);
    }
    if let Some(last) = points.last() {
        ap += last.recall * last.precision;
    }
    Ok(PrCurve {
        points,
        average_precision: ap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth_checker(rows: usize, cols: usize) -> BinaryImage {
        BinaryImage::from_fn(rows, cols, |i, j| (i + j) % 2 == 0).unwrap()
    }

    fn map_from_truth(truth: &BinaryImage) -> PosteriorMap {
        let probs = truth.bits().iter().map(|&b| b as f64).collect();
        PosteriorMap::new(truth.rows(), truth.cols(), probs, 0).unwrap()
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let truth = truth_checker(6, 6);
        let pred = map_from_truth(&truth);
        let curve = pr_curve(&[pred], &[truth], &even_thresholds(101)).unwrap();
        assert!((curve.average_precision - 1.0).abs() < 1e-12);
        let mid = &curve.points[50];
        assert_eq!(mid.threshold, 0.5);
        assert_eq!(mid.precision, 1.0);
        assert_eq!(mid.recall, 1.0);
    }

    #[test]
    fn constant_half_predictor_has_base_rate_precision() {
        let truth = truth_checker(6, 6); // half the pixels on
        let pred = PosteriorMap::new(6, 6, vec![0.5; 36], 0).unwrap();
        let curve = pr_curve(&[pred], &[truth], &even_thresholds(11)).unwrap();
        for pt in &curve.points {
            if pt.threshold <= 0.5 {
                assert!((pt.precision - 0.5).abs() < 1e-12);
                assert_eq!(pt.recall, 1.0);
            } else {
                assert_eq!(pt.precision, 1.0); // empty prediction convention
                assert_eq!(pt.recall, 0.0);
            }
        }
    }

    #[test]
    fn recall_is_monotone_in_threshold() {
        let truth = truth_checker(8, 8);
        let probs: Vec<f64> = (0..64).map(|i| (i as f64) / 63.0).collect();
        let pred = PosteriorMap::new(8, 8, probs, 0).unwrap();
        let curve = pr_curve(&[pred], &[truth], &even_thresholds(21)).unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].recall <= pair[0].recall + 1e-12);
        }
        assert!(curve.average_precision >= 0.0 && curve.average_precision <= 1.0);
    }

    #[test]
    fn dataset_order_does_not_matter() {
        let t1 = truth_checker(5, 7);
        let t2 = BinaryImage::from_fn(5, 7, |i, j| i * j % 3 == 1).unwrap();
        let p1 = map_from_truth(&t1);
        let p2 = PosteriorMap::new(5, 7, vec![0.3; 35], 0).unwrap();
        let a = pr_curve(
            &[p1.clone(), p2.clone()],
            &[t1.clone(), t2.clone()],
            &even_thresholds(11),
        )
        .unwrap();
        let b = pr_curve(&[p2, p1], &[t2, t1], &even_thresholds(11)).unwrap();
        assert_eq!(a.average_precision, b.average_precision);
    }

    #[test]
    fn noise_degrades_average_precision() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let truth = truth_checker(16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut noisy = |level: f64| {
            let probs: Vec<f64> = truth
                .bits()
                .iter()
                .map(|&b| {
                    let base = b as f64;
                    (base + rng.gen_range(-level..=level)).clamp(0.0, 1.0)
                })
                .collect();
            PosteriorMap::new(16, 16, probs, 0).unwrap()
        };
        let mut last = f64::INFINITY;
        for level in [0.1, 0.6, 1.0] {
            let preds: Vec<PosteriorMap> = (0..8).map(|_| noisy(level)).collect();
            let truths: Vec<BinaryImage> = (0..8).map(|_| truth.clone()).collect();
            let ap = pr_curve(&preds, &truths, &even_thresholds(51))
                .unwrap()
                .average_precision;
            assert!(ap <= last + 0.02, "AP rose with noise: {ap} after {last}");
            last = ap;
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let truth = truth_checker(4, 4);
        let pred = PosteriorMap::new(4, 5, vec![0.0; 20], 0).unwrap();
        assert!(pr_curve(&[pred], &[truth.clone()], &even_thresholds(3)).is_err());
        assert!(pr_curve(&[], &[], &even_thresholds(3)).is_err());
        assert!(PosteriorMap::new(2, 2, vec![0.0, 1.5, 0.2, 0.1], 0).is_err());
    }
}

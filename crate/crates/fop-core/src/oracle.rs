//! Exhaustive enumeration on small grids.
//!
//! Every quantity here is recomputed from scratch for every one of the
//! `2^(n*m)` states, deliberately bypassing the incremental machinery the
//! samplers use, so the two can be checked against each other.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::{BinaryImage, GrayImage};
use crate::model::{energy_data_costs, energy_fop_costs, FoPModel};
use crate::pattern::PatternCodec;
use crate::pyramid::{BinaryPyramid, GrayPyramid};
use crate::{Error, Result};

/// Largest grid (in pixels) the oracle will enumerate.
pub const MAX_ORACLE_PIXELS: usize = 22;

#[inline]
fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + libm::log1p(libm::exp(b - a))
    } else {
        b + libm::log1p(libm::exp(a - b))
    }
}

/// Exact posterior summaries from full enumeration.
pub struct OracleResult {
    pub log_partition: f64,
    /// Row-major `p(x(i,j) = 1 | y)`.
    pub marginals: Vec<f64>,
}

fn image_from_mask(rows: usize, cols: usize, mask: u64) -> BinaryImage {
    BinaryImage::from_fn(rows, cols, |i, j| (mask >> (i * cols + j)) & 1 == 1).unwrap()
}

fn state_energy(
    model: &FoPModel,
    costs: &crate::model::CostModel,
    rows: usize,
    cols: usize,
    mask: u64,
    py: Option<&GrayPyramid>,
) -> f64 {
    let img = image_from_mask(rows, cols, mask);
    let px = BinaryPyramid::build(&img, model.levels()).expect("levels checked by caller");
    let mut e = energy_fop_costs(costs, &px);
    if let Some(py) = py {
        e += energy_data_costs(costs, &px, py);
    }
    e
}

fn check_size(rows: usize, cols: usize) -> Result<()> {
    let pixels = rows * cols;
    if pixels > MAX_ORACLE_PIXELS {
        return Err(Error::TooLargeToEnumerate {
            pixels,
            max: MAX_ORACLE_PIXELS,
        });
    }
    Ok(())
}

/// Sums over all `2^(rows*cols)` hidden images: log partition function and
/// per-pixel posterior marginals.
///
/// `y = None` evaluates the prior (pattern energy only).
pub fn enumerate(
    model: &FoPModel,
    codec: &PatternCodec,
    rows: usize,
    cols: usize,
    y: Option<&GrayImage>,
) -> Result<OracleResult> {
    check_size(rows, cols)?;
    if let Some(y) = y {
        if y.rows() != rows || y.cols() != cols {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                got: (y.rows(), y.cols()),
            });
        }
    }
    let py = y.map(|y| GrayPyramid::build(y, model.levels())).transpose()?;
    let costs = model.cost_model(codec);
    let states = 1u64 << (rows * cols);

    let mut log_z = f64::NEG_INFINITY;
    for mask in 0..states {
        log_z = lse2(log_z, -state_energy(model, &costs, rows, cols, mask, py.as_ref()));
    }

    let mut marginals = vec![0.0f64; rows * cols];
    for mask in 0..states {
        let p = libm::exp(-state_energy(model, &costs, rows, cols, mask, py.as_ref()) - log_z);
        let mut bits = mask;
        while bits != 0 {
            let idx = bits.trailing_zeros() as usize;
            marginals[idx] += p;
            bits &= bits - 1;
        }
    }
    Ok(OracleResult {
        log_partition: log_z,
        marginals,
    })
}

/// Exact conditional over an arbitrary pixel subset, holding the rest of
/// `base` fixed.
///
/// Entry `c` of the result is the probability of the configuration where
/// pixel `pixels[i]` takes bit `i` of `c`.
pub fn conditional(
    model: &FoPModel,
    codec: &PatternCodec,
    base: &BinaryImage,
    y: Option<&GrayImage>,
    pixels: &[(usize, usize)],
) -> Result<Vec<f64>> {
    if pixels.len() > MAX_ORACLE_PIXELS {
        return Err(Error::TooLargeToEnumerate {
            pixels: pixels.len(),
            max: MAX_ORACLE_PIXELS,
        });
    }
    for &(i, j) in pixels {
        if i >= base.rows() || j >= base.cols() {
            return Err(Error::OutOfRange { row: i, col: j });
        }
    }
    if let Some(y) = y {
        if y.rows() != base.rows() || y.cols() != base.cols() {
            return Err(Error::DimensionMismatch {
                expected: (base.rows(), base.cols()),
                got: (y.rows(), y.cols()),
            });
        }
    }
    let py = y.map(|y| GrayPyramid::build(y, model.levels())).transpose()?;
    let costs = model.cost_model(codec);

    let configs = 1usize << pixels.len();
    let mut log_w = vec![0.0f64; configs];
    let mut img = base.clone();
    for (c, slot) in log_w.iter_mut().enumerate() {
        for (bit, &(i, j)) in pixels.iter().enumerate() {
            img.set(i, j, (c >> bit) & 1 == 1);
        }
        let px = BinaryPyramid::build(&img, model.levels())?;
        let mut e = energy_fop_costs(&costs, &px);
        if let Some(py) = &py {
            e += energy_data_costs(&costs, &px, py);
        }
        *slot = -e;
    }
    let z = crate::num::logsumexp(&log_w);
    Ok(log_w.into_iter().map(|w| libm::exp(w - z)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_uniform() {
        let model = FoPModel::zeros(2, 4, true);
        let codec = PatternCodec::new();
        let r = enumerate(&model, &codec, 3, 3, None).unwrap();
        assert!((r.log_partition - 9.0 * core::f64::consts::LN_2).abs() < 1e-9);
        for &m in &r.marginals {
            assert!((m - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn single_pixel_closed_form() {
        // 1x1 grid: marginal = exp(-e1) / (exp(-e0) + exp(-e1)).
        let codec = PatternCodec::new();
        let layout = ModelLayout { levels: 1, gray_levels: 2, invariant: true };
        let mut w = vec![0.0; layout.weight_len()];
        let on_class = codec.class_of(crate::pattern::PatternCode::new(16).unwrap());
        let off_class = codec.class_of(crate::pattern::PatternCode::new(0).unwrap());
        w[layout.pattern_index(0, on_class)] = 1.3; // e1
        w[layout.pattern_index(0, off_class)] = 0.4; // e0
        let model = FoPModel::from_weights(layout, &w).unwrap();
        let r = enumerate(&model, &codec, 1, 1, None).unwrap();
        let expect = libm::exp(-1.3) / (libm::exp(-0.4) + libm::exp(-1.3));
        assert!((r.marginals[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn posterior_unchanged_by_constant_potential_shift() {
        let codec = PatternCodec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let layout = ModelLayout { levels: 2, gray_levels: 4, invariant: true };
        let w: Vec<f64> = (0..layout.weight_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = FoPModel::from_weights(layout, &w).unwrap();
        let mut w2 = w.clone();
        for c in 0..layout.pattern_len() {
            w2[layout.pattern_index(0, c)] += 2.5;
            w2[layout.pattern_index(1, c)] -= 1.0;
        }
        let shifted = FoPModel::from_weights(layout, &w2).unwrap();

        let y = GrayImage::from_pixels(4, 4, 4, (0..16).map(|i| (i % 4) as u16).collect()).unwrap();
        let a = enumerate(&model, &codec, 4, 4, Some(&y)).unwrap();
        let b = enumerate(&shifted, &codec, 4, 4, Some(&y)).unwrap();
        for (ma, mb) in a.marginals.iter().zip(&b.marginals) {
            assert!((ma - mb).abs() < 1e-9);
        }
    }

    #[test]
    fn conditional_normalizes_and_respects_forcing() {
        let codec = PatternCodec::new();
        let layout = ModelLayout { levels: 1, gray_levels: 2, invariant: true };
        let mut w = vec![0.0; layout.weight_len()];
        w[layout.data_index(0, 1)] = 30.0; // x=1 on y=1 essentially forbidden
        let model = FoPModel::from_weights(layout, &w).unwrap();
        let y = GrayImage::from_pixels(2, 2, 2, vec![1, 0, 0, 0]).unwrap();
        let base = BinaryImage::zeros(2, 2).unwrap();
        let probs = conditional(&model, &codec, &base, Some(&y), &[(0, 0), (0, 1)]).unwrap();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Configurations with pixel (0,0) on carry ~exp(-30).
        assert!(probs[1] < 1e-10 && probs[3] < 1e-10);
    }

    #[test]
    fn size_cap_is_enforced() {
        let model = FoPModel::zeros(1, 2, true);
        let codec = PatternCodec::new();
        assert!(matches!(
            enumerate(&model, &codec, 5, 5, None),
            Err(Error::TooLargeToEnumerate { pixels: 25, .. })
        ));
    }
}

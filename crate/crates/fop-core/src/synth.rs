//! Synthetic data: noisy observations of a binary image, and random shape
//! generators that stand in for real contour maps and masks in end-to-end
//! tests.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::BinaryImage;
use crate::image::GrayImage;
use crate::rng;
use crate::{Error, Result};

/// Gaussian observation model: `y ~ N(mu_x, sigma^2)` per pixel.
#[derive(Clone, Copy, Debug)]
pub struct NoiseParams {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
}

impl NoiseParams {
    /// Contour-detection preset.
    pub fn contour() -> Self {
        Self {
            mu0: 150.0,
            mu1: 100.0,
            sigma: 40.0,
        }
    }

    /// Segmentation (leaf-mask) preset; masks tolerate more noise.
    pub fn leaf() -> Self {
        Self {
            mu0: 150.0,
            mu1: 100.0,
            sigma: 100.0,
        }
    }
}

/// Draws an observation image: independent per-pixel Gaussians with the
/// class mean chosen by `x`, rounded to the nearest integer and clamped
/// into `0..gray_levels`.
pub fn synth_observe(
    x: &BinaryImage,
    params: NoiseParams,
    gray_levels: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GrayImage> {
    if gray_levels < 2 {
        return Err(Error::BadGrayLevels(gray_levels));
    }
    if !(params.sigma >= 0.0) || !params.mu0.is_finite() || !params.mu1.is_finite() {
        return Err(Error::NonFinite);
    }
    let n0 = Normal::new(params.mu0, params.sigma).map_err(|_| Error::NonFinite)?;
    let n1 = Normal::new(params.mu1, params.sigma).map_err(|_| Error::NonFinite)?;
    let max = (gray_levels - 1) as f64;
    let mut out = GrayImage::zeros(x.rows(), x.cols(), gray_levels)?;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let v = if x.get(i, j) {
                n1.sample(rng)
            } else {
                n0.sample(rng)
            };
            let v = libm::round(v).clamp(0.0, max);
            out.set(i, j, v as u16);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ShapeKind {
    /// Thin structures: open polylines plus closed outlines.
    Contours,
    /// One solid 8-connected blob per image.
    Blobs,
}

/// Generates `count` random binary images of side `size`.
///
/// Image `i` is drawn from stream `i` of the seed, so datasets are
/// reproducible and insensitive to the requested count.
pub fn synth_shapes(kind: ShapeKind, count: usize, size: usize, seed: u64) -> Result<Vec<BinaryImage>> {
    if size < 8 {
        return Err(Error::EmptyImage);
    }
    (0..count)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            match kind {
                ShapeKind::Contours => contour_map(size, &mut rng),
                ShapeKind::Blobs => blob_mask(size, &mut rng),
            }
        })
        .collect()
}

fn draw_line(img: &mut BinaryImage, from: (i64, i64), to: (i64, i64)) {
    let (mut i, mut j) = from;
    let (i1, j1) = to;
    let di = (i1 - i).abs();
    let dj = (j1 - j).abs();
    let si = if i < i1 { 1 } else { -1 };
    let sj = if j < j1 { 1 } else { -1 };
    let mut err = di - dj;
    loop {
        if i >= 0 && j >= 0 && (i as usize) < img.rows() && (j as usize) < img.cols() {
            img.set(i as usize, j as usize, true);
        }
        if i == i1 && j == j1 {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dj {
            err -= dj;
            i += si;
        }
        if e2 < di {
            err += di;
            j += sj;
        }
    }
}

fn draw_ring(img: &mut BinaryImage, center: (f64, f64), radius: f64) {
    let steps = (8.0 * radius) as usize + 8;
    for t in 0..steps {
        let a = core::f64::consts::TAU * t as f64 / steps as f64;
        let i = libm::round(center.0 + radius * libm::sin(a)) as i64;
        let j = libm::round(center.1 + radius * libm::cos(a)) as i64;
        if i >= 0 && j >= 0 && (i as usize) < img.rows() && (j as usize) < img.cols() {
            img.set(i as usize, j as usize, true);
        }
    }
}

fn contour_map(size: usize, rng: &mut ChaCha8Rng) -> Result<BinaryImage> {
    let mut img = BinaryImage::zeros(size, size)?;
    // Estimated pixels are charged before drawing a primitive, so the
    // on-fraction stays below 0.15 by construction.
    let cap = ((size * size) as f64 * 0.135) as usize;

    // Closed outlines at mixed radii give the coarse scales something to
    // look at; open polylines supply the fine structure.
    let rings = rng.gen_range(1..=2);
    for _ in 0..rings {
        let r = rng.gen_range(size as f64 / 10.0..size as f64 / 3.5);
        let estimate = (core::f64::consts::TAU * r) as usize + 8;
        if img.on_count() + estimate > cap {
            continue;
        }
        let ci = rng.gen_range(r..size as f64 - r);
        let cj = rng.gen_range(r..size as f64 - r);
        draw_ring(&mut img, (ci, cj), r);
    }

    let strokes = rng.gen_range(2..=4);
    'stroke: for _ in 0..strokes {
        let segments = rng.gen_range(1..=3);
        let mut prev = (
            rng.gen_range(0..size as i64),
            rng.gen_range(0..size as i64),
        );
        for _ in 0..segments {
            let next = (
                rng.gen_range(0..size as i64),
                rng.gen_range(0..size as i64),
            );
            let estimate = (next.0 - prev.0).abs().max((next.1 - prev.1).abs()) as usize + 1;
            if img.on_count() + estimate > cap {
                break 'stroke;
            }
            draw_line(&mut img, prev, next);
            prev = next;
        }
    }

    if img.on_count() == 0 {
        let mid = (size / 2) as i64;
        draw_line(&mut img, (mid, mid / 2), (mid, mid / 2 + (size / 4).max(1) as i64));
    }
    Ok(img)
}

fn blob_mask(size: usize, rng: &mut ChaCha8Rng) -> Result<BinaryImage> {
    let mut img = BinaryImage::zeros(size, size)?;
    let radius = rng.gen_range(size as f64 / 8.0..size as f64 / 5.0);
    let steps = rng.gen_range(3..=7);
    let mut ci = rng.gen_range(size as f64 * 0.3..size as f64 * 0.7);
    let mut cj = rng.gen_range(size as f64 * 0.3..size as f64 * 0.7);
    for _ in 0..steps {
        stamp_disk(&mut img, (ci, cj), radius);
        // Step strictly less than the radius keeps consecutive disks
        // overlapping, so the union stays one component.
        let a = rng.gen_range(0.0..core::f64::consts::TAU);
        let d = rng.gen_range(0.0..radius * 0.9);
        ci = (ci + d * libm::sin(a)).clamp(radius, size as f64 - 1.0 - radius);
        cj = (cj + d * libm::cos(a)).clamp(radius, size as f64 - 1.0 - radius);
    }
    Ok(img)
}

fn stamp_disk(img: &mut BinaryImage, center: (f64, f64), radius: f64) {
    let r2 = radius * radius;
    let lo_i = (center.0 - radius).max(0.0) as usize;
    let hi_i = ((center.0 + radius) as usize).min(img.rows() - 1);
    let lo_j = (center.1 - radius).max(0.0) as usize;
    let hi_j = ((center.1 + radius) as usize).min(img.cols() - 1);
    for i in lo_i..=hi_i {
        for j in lo_j..=hi_j {
            let (di, dj) = (i as f64 - center.0, j as f64 - center.1);
            if di * di + dj * dj <= r2 {
                img.set(i, j, true);
            }
        }
    }
}

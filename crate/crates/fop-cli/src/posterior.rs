//! Posterior maps as 16-bit grayscale: value = round(p * 65535).

use anyhow::Result;
use fop_core::eval::PosteriorMap;
use fop_core::image::GrayImage;

pub fn to_gray(map: &PosteriorMap) -> GrayImage {
    let pixels = map
        .probs()
        .iter()
        .map(|&p| (p * 65535.0).round() as u16)
        .collect();
    GrayImage::from_pixels(map.rows(), map.cols(), 65536, pixels).expect("probabilities in range")
}

pub fn from_gray(img: &GrayImage) -> Result<PosteriorMap> {
    let max = (img.gray_levels() - 1) as f64;
    let probs = img.pixels().iter().map(|&v| v as f64 / max).collect();
    Ok(PosteriorMap::new(img.rows(), img.cols(), probs, 0)?)
}

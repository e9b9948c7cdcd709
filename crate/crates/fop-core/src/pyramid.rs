//! Image pyramids: OR-coarsening for binary images, floor-average for gray.
//!
//! Level k lives on a `ceil(n/2^k) x ceil(m/2^k)` grid; a parent pixel is
//! computed from its at-most-four children, skipping children that fall
//! outside odd-sized grids.  OR-coarsening maps connected objects to
//! connected objects, which is what makes coarse 3x3 patterns informative.

use alloc::vec::Vec;

use crate::image::{BinaryImage, GrayImage};
use crate::{Error, Result};

#[inline]
fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Largest useful pyramid depth: one more halving than needed to reach 1x1.
pub fn max_levels(rows: usize, cols: usize) -> usize {
    let mut size = rows.max(cols);
    let mut levels = 1;
    while size > 1 {
        size = half(size);
        levels += 1;
    }
    levels
}

/// One OR-coarsening step: a parent is on iff any in-range child is on.
pub fn coarsen_or(img: &BinaryImage) -> BinaryImage {
    let (rows, cols) = (half(img.rows()), half(img.cols()));
    BinaryImage::from_fn(rows, cols, |i, j| {
        let mut on = false;
        for a in 0..2 {
            for b in 0..2 {
                let (ci, cj) = (2 * i + a, 2 * j + b);
                if ci < img.rows() && cj < img.cols() {
                    on |= img.get(ci, cj);
                }
            }
        }
        on
    })
    .expect("parent grid is nonempty")
}

/// One average-coarsening step: floor of the mean over in-range children.
pub fn coarsen_avg(img: &GrayImage) -> GrayImage {
    let (rows, cols) = (half(img.rows()), half(img.cols()));
    let mut out = GrayImage::zeros(rows, cols, img.gray_levels()).expect("parent grid is nonempty");
    for i in 0..rows {
        for j in 0..cols {
            let mut sum = 0u32;
            let mut count = 0u32;
            for a in 0..2 {
                for b in 0..2 {
                    let (ci, cj) = (2 * i + a, 2 * j + b);
                    if ci < img.rows() && cj < img.cols() {
                        sum += img.get(ci, cj) as u32;
                        count += 1;
                    }
                }
            }
            out.set(i, j, (sum / count) as u16);
        }
    }
    out
}

fn check_levels(levels: usize, rows: usize, cols: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::TooManyLevels { requested: 0, max: max_levels(rows, cols) });
    }
    let max = max_levels(rows, cols);
    if levels > max {
        return Err(Error::TooManyLevels { requested: levels, max });
    }
    Ok(())
}

/// OR-coarsened stack of a binary image; level 0 is the image itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryPyramid {
    levels: Vec<BinaryImage>,
}

impl BinaryPyramid {
    pub fn build(img: &BinaryImage, levels: usize) -> Result<Self> {
        check_levels(levels, img.rows(), img.cols())?;
        let mut stack = Vec::with_capacity(levels);
        stack.push(img.clone());
        for k in 1..levels {
            let next = coarsen_or(&stack[k - 1]);
            stack.push(next);
        }
        Ok(Self { levels: stack })
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn level(&self, k: usize) -> &BinaryImage {
        &self.levels[k]
    }

    #[inline]
    pub fn base(&self) -> &BinaryImage {
        &self.levels[0]
    }

    #[inline]
    pub(crate) fn level_mut(&mut self, k: usize) -> &mut BinaryImage {
        &mut self.levels[k]
    }

    /// Checks every parent against its children; used by tests and debug paths.
    pub fn is_consistent(&self) -> bool {
        (1..self.levels()).all(|k| coarsen_or(self.level(k - 1)) == self.levels[k])
    }
}

/// Average-coarsened stack of a gray image; level 0 is the image itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GrayPyramid {
    levels: Vec<GrayImage>,
}

impl GrayPyramid {
    pub fn build(img: &GrayImage, levels: usize) -> Result<Self> {
        check_levels(levels, img.rows(), img.cols())?;
        let mut stack = Vec::with_capacity(levels);
        stack.push(img.clone());
        for k in 1..levels {
            let next = coarsen_avg(&stack[k - 1]);
            stack.push(next);
        }
        Ok(Self { levels: stack })
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn level(&self, k: usize) -> &GrayImage {
        &self.levels[k]
    }

    #[inline]
    pub fn base(&self) -> &GrayImage {
        &self.levels[0]
    }

    pub fn gray_levels(&self) -> usize {
        self.levels[0].gray_levels()
    }
}

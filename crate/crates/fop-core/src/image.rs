//! Binary and grayscale image containers.
//!
//! Both types are plain row-major grids.  Windows that read past the border
//! treat outside pixels as 0, which [`BinaryImage::get_padded`] encodes once
//! for every caller.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Binary image on an `rows x cols` grid, one byte per pixel, values 0 or 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryImage {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage);
        }
        Ok(Self {
            rows,
            cols,
            bits: vec![0; rows * cols],
        })
    }

    /// Builds from a row-major 0/1 buffer.
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage);
        }
        if bits.len() != rows * cols {
            return Err(Error::BadLength {
                expected: rows * cols,
                got: bits.len(),
            });
        }
        for (idx, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::BadPixel {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut img = Self::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    img.bits[i * cols + j] = 1;
                }
            }
        }
        Ok(img)
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
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        self.bits[i * self.cols + j] != 0
    }

    /// Reads with zero padding outside the grid.
    #[inline]
    pub fn get_padded(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.rows || j as usize >= self.cols {
            false
        } else {
            self.bits[i as usize * self.cols + j as usize] != 0
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.cols + j] = v as u8;
    }

    #[inline]
    pub(crate) fn toggle(&mut self, i: usize, j: usize) {
        self.bits[i * self.cols + j] ^= 1;
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn on_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn transposed(&self) -> BinaryImage {
        let mut out = Self {
            rows: self.cols,
            cols: self.rows,
            bits: vec![0; self.bits.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.bits[j * self.rows + i] = self.bits[i * self.cols + j];
            }
        }
        out
    }
}

/// Grayscale image with pixel values in `0..gray_levels`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    gray_levels: usize,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn zeros(rows: usize, cols: usize, gray_levels: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage);
        }
        if gray_levels == 0 || gray_levels > 1 << 16 {
            return Err(Error::BadGrayLevels(gray_levels));
        }
        Ok(Self {
            rows,
            cols,
            gray_levels,
            pixels: vec![0; rows * cols],
        })
    }

    pub fn from_pixels(rows: usize, cols: usize, gray_levels: usize, pixels: Vec<u16>) -> Result<Self> {
        let mut img = Self::zeros(rows, cols, gray_levels)?;
        if pixels.len() != rows * cols {
            return Err(Error::BadLength {
                expected: rows * cols,
                got: pixels.len(),
            });
        }
        for (idx, &p) in pixels.iter().enumerate() {
            if (p as usize) >= gray_levels {
                return Err(Error::BadPixel {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        img.pixels = pixels;
        Ok(img)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of representable gray values (`M`); pixels lie in `0..M`.
    #[inline]
    pub fn gray_levels(&self) -> usize {
        self.gray_levels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        debug_assert!(i < self.rows && j < self.cols);
        self.pixels[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u16) {
        debug_assert!((v as usize) < self.gray_levels);
        self.pixels[i * self.cols + j] = v;
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn transposed(&self) -> GrayImage {
        let mut out = Self {
            rows: self.cols,
            cols: self.rows,
            gray_levels: self.gray_levels,
            pixels: vec![0; self.pixels.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.pixels[j * self.rows + i] = self.pixels[i * self.cols + j];
            }
        }
        out
    }
}

/// Labels 8-connected components of the on-pixels.
///
/// Returns a row-major label map (0 for off-pixels, 1-based component ids)
/// and the component count.
pub fn label_components_8(img: &BinaryImage) -> (Vec<u32>, u32) {
    let (rows, cols) = (img.rows(), img.cols());
    let mut labels = vec![0u32; rows * cols];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..rows * cols {
        if img.bits[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (i, j) = (idx / cols, idx % cols);
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni as usize >= rows || nj as usize >= cols {
                        continue;
                    }
                    let nidx = ni as usize * cols + nj as usize;
                    if img.bits[nidx] != 0 && labels[nidx] == 0 {
                        labels[nidx] = next;
                        queue.push_back(nidx);
                    }
                }
            }
        }
    }
    (labels, next)
}

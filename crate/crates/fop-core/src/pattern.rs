//! 3x3 binary window codes and their dihedral symmetry classes.
//!
//! A window is encoded row-major into 9 bits: bit `3*(dr+1) + (dc+1)` holds
//! the pixel at offset `(dr, dc)` from the center, so bit 4 is the center,
//! code 0 is the all-off window and code 511 the all-on window.  Grouping
//! the 512 codes by the 8 dihedral transforms (4 rotations times an
//! optional mirror) yields 102 classes.

use alloc::vec::Vec;

use crate::image::BinaryImage;

pub const PATTERN_COUNT: usize = 512;
pub const CLASS_COUNT: usize = 102;

/// 9-bit code of one 3x3 binary window.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct PatternCode(u16);

impl PatternCode {
    pub fn new(code: u16) -> Option<Self> {
        (code < PATTERN_COUNT as u16).then_some(Self(code))
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }
}

/// Window code centered at `(i, j)`; pixels outside the image read as 0.
pub fn pattern_at(img: &BinaryImage, i: usize, j: usize) -> PatternCode {
    let mut code = 0u16;
    let mut bit = 0;
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            if img.get_padded(i as isize + dr, j as isize + dc) {
                code |= 1 << bit;
            }
            bit += 1;
        }
    }
    PatternCode(code)
}

#[inline]
fn cell(code: u16, r: usize, c: usize) -> u16 {
    (code >> (3 * r + c)) & 1
}

fn remap(code: u16, f: impl Fn(usize, usize) -> (usize, usize)) -> u16 {
    let mut out = 0u16;
    for r in 0..3 {
        for c in 0..3 {
            let (sr, sc) = f(r, c);
            out |= cell(code, sr, sc) << (3 * r + c);
        }
    }
    out
}

/// 90-degree clockwise rotation.
pub(crate) fn rotate90(code: u16) -> u16 {
    remap(code, |r, c| (2 - c, r))
}

/// Mirror across the vertical axis.
pub(crate) fn mirror(code: u16) -> u16 {
    remap(code, |r, c| (r, 2 - c))
}

/// Reflection across the main diagonal; row-major becomes column-major.
pub(crate) fn transpose_code(code: u16) -> u16 {
    remap(code, |r, c| (c, r))
}

/// The 8 dihedral images of a code (with repeats for symmetric codes).
pub fn dihedral_orbit(code: u16) -> [u16; 8] {
    let mut orbit = [0u16; 8];
    let mut cur = code;
    for k in 0..4 {
        orbit[k] = cur;
        orbit[k + 4] = mirror(cur);
        cur = rotate90(cur);
    }
    orbit
}

/// Bijection between window codes and symmetry class ids.
///
/// Class ids are the ranks of the canonical (minimum) orbit codes in
/// ascending order, so the numbering is stable across runs and platforms.
#[derive(Clone, Debug)]
pub struct PatternCodec {
    class_of: Vec<u16>,
    class_repr: Vec<u16>,
}

impl PatternCodec {
    pub fn new() -> Self {
        let mut canonical = [0u16; PATTERN_COUNT];
        for code in 0..PATTERN_COUNT as u16 {
            canonical[code as usize] = *dihedral_orbit(code).iter().min().unwrap();
        }
        let mut class_repr: Vec<u16> = canonical.to_vec();
        class_repr.sort_unstable();
        class_repr.dedup();
        let class_of = canonical
            .iter()
            .map(|c| class_repr.binary_search(c).unwrap() as u16)
            .collect();
        Self { class_of, class_repr }
    }

    #[inline]
    pub fn class_of(&self, code: PatternCode) -> usize {
        self.class_of[code.value() as usize] as usize
    }

    pub fn class_count(&self) -> usize {
        self.class_repr.len()
    }

    /// Canonical (minimum) code of the class containing `code`.
    pub fn canonical(&self, code: PatternCode) -> PatternCode {
        PatternCode(self.class_repr[self.class_of(code)])
    }

    /// Canonical code of each class, ascending.
    pub fn class_representatives(&self) -> &[u16] {
        &self.class_repr
    }
}

impl Default for PatternCodec {
    fn default() -> Self {
        Self::new()
    }
}

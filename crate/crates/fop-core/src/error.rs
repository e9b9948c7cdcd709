use core::fmt;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An image dimension was zero.
    EmptyImage,
    /// A pixel value was outside its declared range.
    BadPixel { row: usize, col: usize },
    /// A buffer length did not match `rows * cols`.
    BadLength { expected: usize, got: usize },
    /// Two grids that must share geometry do not.
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Pyramid level counts disagree.
    LevelMismatch { expected: usize, got: usize },
    /// Requested more pyramid levels than the image supports.
    TooManyLevels { requested: usize, max: usize },
    /// A coordinate fell outside the grid.
    OutOfRange { row: usize, col: usize },
    /// A parameter table had the wrong length or a non-finite entry.
    BadTable { expected: usize, got: usize },
    /// Gray-level count outside `1..=65536`.
    BadGrayLevels(usize),
    /// A Gibbs block exceeded the enumeration cap.
    BlockTooLarge { size: usize, max: usize },
    /// A pixel appeared twice in a block.
    DuplicatePixel { row: usize, col: usize },
    /// A band was taller than the sampler supports.
    BandTooTall { height: usize, max: usize },
    /// A band does not fit inside the image.
    BadBand,
    /// The proposal model must have exactly one scale.
    NotSingleScale { levels: usize },
    /// The grid is too large for exhaustive enumeration.
    TooLargeToEnumerate { pixels: usize, max: usize },
    /// Parameters became non-finite during an update.
    NonFinite,
    /// An operation needs at least one input item.
    EmptyInput,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::EmptyImage => write!(f, "image must have at least one row and one column"),
            Error::BadPixel { row, col } => {
                write!(f, "pixel value out of range at ({row}, {col})")
            }
            Error::BadLength { expected, got } => {
                write!(f, "buffer length {got} does not match grid size {expected}")
            }
            Error::DimensionMismatch { expected, got } => write!(
                f,
                "grid size mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::LevelMismatch { expected, got } => {
                write!(f, "pyramid has {got} levels, model expects {expected}")
            }
            Error::TooManyLevels { requested, max } => {
                write!(f, "{requested} pyramid levels requested, image supports at most {max}")
            }
            Error::OutOfRange { row, col } => write!(f, "coordinate ({row}, {col}) out of range"),
            Error::BadTable { expected, got } => {
                write!(f, "parameter table must hold {expected} finite values, got {got}")
            }
            Error::BadGrayLevels(m) => write!(f, "gray-level count {m} outside 1..=65536"),
            Error::BlockTooLarge { size, max } => {
                write!(f, "block of {size} pixels exceeds the Gibbs cap of {max}")
            }
            Error::DuplicatePixel { row, col } => {
                write!(f, "pixel ({row}, {col}) listed more than once in the block")
            }
            Error::BandTooTall { height, max } => {
                write!(f, "band height {height} exceeds the sampler cap of {max}")
            }
            Error::BadBand => write!(f, "band does not fit inside the image"),
            Error::NotSingleScale { levels } => {
                write!(f, "proposal model must have exactly 1 scale, got {levels}")
            }
            Error::TooLargeToEnumerate { pixels, max } => {
                write!(f, "{pixels} pixels is too large to enumerate (cap {max})")
            }
            Error::NonFinite => write!(f, "parameters are no longer finite"),
            Error::EmptyInput => write!(f, "input must not be empty"),
        }
    }
}

impl core::error::Error for Error {}

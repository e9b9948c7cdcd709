//! Markov chains over hidden binary images.
//!
//! A [`ChainState`] owns the current image, its maintained pyramid, the
//! chain's RNG and a running energy total.  Two update moves are provided:
//!
//! - [`ChainState::gibbs_block`]: exact resampling of a small pixel block,
//!   enumerating all configurations in Gray-code order so each visited
//!   configuration costs one single-flip energy delta.
//! - [`ChainState::mh_band_step`]: Metropolis-Hastings resampling of a whole
//!   band.  Candidates come from the exact band sampler of a single-scale
//!   proposal model `q`; the acceptance ratio corrects to the multiscale
//!   target `p`.  One forward table serves all proposals of the step, and a
//!   rejected proposal is rolled back from the edit journal.
//!
//! When `p` and `q` are the same single-scale model the acceptance ratio is
//! exactly one, so the band step degenerates to exact block Gibbs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::band::{Band, ForwardTable, MAX_BAND_HEIGHT};
use crate::edit;
use crate::image::BinaryImage;
use crate::model::{energy_data_costs, energy_fop_costs, CostModel, FoPModel};
use crate::num::sample_log_weights;
use crate::pattern::PatternCodec;
use crate::pyramid::{BinaryPyramid, GrayPyramid};
use crate::{Error, Result};

/// Largest pixel block `gibbs_block` will enumerate (`2^size` states).
pub const MAX_GIBBS_BLOCK: usize = 20;

/// Band scheduling for one sweep: band height, proposals per band, and the
/// stride between band starts (overlapping bands when `stride < height`).
#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    pub height: usize,
    pub proposals: usize,
    pub stride: usize,
}

impl Schedule {
    pub fn new(height: usize, proposals: usize) -> Self {
        Self {
            height,
            proposals,
            stride: height.div_ceil(2),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::new(3, 8)
    }
}

/// Acceptance counters for one band step or one sweep phase.
#[derive(Clone, Copy, Debug, Default)]
pub struct BandStats {
    pub proposed: usize,
    pub accepted: usize,
}

impl BandStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn absorb(&mut self, other: BandStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Per-sweep diagnostics: acceptance and energy after each axis pass.
#[derive(Clone, Copy, Debug)]
pub struct SweepStats {
    pub sweep: u64,
    pub horizontal: BandStats,
    pub energy_after_horizontal: f64,
    pub vertical: BandStats,
    pub energy_after_vertical: f64,
}

/// One MCMC chain: current image, maintained pyramid, RNG and energy total.
pub struct ChainState {
    px: BinaryPyramid,
    energy: f64,
    sweeps: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    /// Starts a chain at `x` for target model `p` (its `CostModel`).
    pub fn new(
        x: &BinaryImage,
        p: &CostModel,
        py: Option<&GrayPyramid>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let px = BinaryPyramid::build(x, p.levels())?;
        if let Some(py) = py {
            if py.levels() < p.levels() {
                return Err(Error::LevelMismatch {
                    expected: p.levels(),
                    got: py.levels(),
                });
            }
            let (bx, by) = (px.level(0), py.level(0));
            if bx.rows() != by.rows() || bx.cols() != by.cols() {
                return Err(Error::DimensionMismatch {
                    expected: (bx.rows(), bx.cols()),
                    got: (by.rows(), by.cols()),
                });
            }
        }
        let mut chain = Self {
            px,
            energy: 0.0,
            sweeps: 0,
            rng,
        };
        chain.refresh_energy(p, py);
        Ok(chain)
    }

    #[inline]
    pub fn image(&self) -> &BinaryImage {
        self.px.base()
    }

    #[inline]
    pub fn pyramid(&self) -> &BinaryPyramid {
        &self.px
    }

    /// Running `E(x, y)` under the target model, maintained by deltas.
    #[inline]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    #[inline]
    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Recomputes the energy total from scratch (after a parameter update).
    pub fn refresh_energy(&mut self, p: &CostModel, py: Option<&GrayPyramid>) {
        self.energy = energy_fop_costs(p, &self.px)
            + py.map_or(0.0, |py| energy_data_costs(p, &self.px, py));
    }

    /// Resamples `block` exactly from its conditional under `p`.
    ///
    /// All `2^|block|` configurations are visited in Gray-code order, each
    /// reached by a single staged flip, so the enumeration costs
    /// `O(levels * 2^|block|)`.
    pub fn gibbs_block(
        &mut self,
        p: &CostModel,
        py: Option<&GrayPyramid>,
        block: &[(usize, usize)],
    ) -> Result<()> {
        if block.len() > MAX_GIBBS_BLOCK {
            return Err(Error::BlockTooLarge {
                size: block.len(),
                max: MAX_GIBBS_BLOCK,
            });
        }
        let mut seen: Vec<(usize, usize)> = block.to_vec();
        seen.sort_unstable();
        for win in seen.windows(2) {
            if win[0] == win[1] {
                return Err(Error::DuplicatePixel {
                    row: win[0].0,
                    col: win[0].1,
                });
            }
        }
        if block.is_empty() {
            return Ok(());
        }

        let rel_energy = gray_block_energies(&mut self.px, p, py, block)?;
        let log_w: Vec<f64> = rel_energy.iter().map(|&e| -e).collect();
        let choice = sample_log_weights(&mut self.rng, &log_w);
        let flips: Vec<(usize, usize)> = (0..block.len())
            .filter(|&b| (choice >> b) & 1 == 1)
            .map(|b| block[b])
            .collect();
        let staged = edit::stage_flips(&mut self.px, py, &[p], &flips)?;
        self.energy += staged.deltas[0];
        Ok(())
    }

    /// One band step: builds the proposal's forward table once, then runs
    /// `proposals` accept/reject rounds against the multiscale target.
    pub fn mh_band_step(
        &mut self,
        p: &CostModel,
        q: &CostModel,
        py: Option<&GrayPyramid>,
        band: Band,
        proposals: usize,
    ) -> Result<BandStats> {
        if p.levels() > self.px.levels() {
            return Err(Error::LevelMismatch {
                expected: p.levels(),
                got: self.px.levels(),
            });
        }
        let table = ForwardTable::build(q, self.px.base(), py.map(|py| py.base()), band)?;
        let mut stats = BandStats::default();
        let mut flips: Vec<(usize, usize)> = Vec::new();
        for _ in 0..proposals {
            stats.proposed += 1;
            let candidate = table.sample(&mut self.rng);
            flips.clear();
            for (lane, state) in candidate.iter().enumerate() {
                for t in 0..table.height() {
                    let (i, j) = band.pixel(lane, t);
                    let want = (state.0 >> t) & 1 == 1;
                    if self.px.base().get(i, j) != want {
                        flips.push((i, j));
                    }
                }
            }
            if flips.is_empty() {
                // Proposal equals the current state; the ratio is exactly 1.
                stats.accepted += 1;
                continue;
            }
            let staged = edit::stage_flips(&mut self.px, py, &[p, q], &flips)?;
            let log_ratio = staged.deltas[1] - staged.deltas[0];
            let accept = log_ratio >= 0.0 || self.rng.gen::<f64>() < libm::exp(log_ratio);
            if accept {
                self.energy += staged.deltas[0];
                stats.accepted += 1;
            } else {
                edit::toggle(&mut self.px, &staged.plan);
            }
        }
        Ok(stats)
    }

    /// One full sweep: overlapping horizontal bands, then vertical bands.
    pub fn sweep(
        &mut self,
        p: &CostModel,
        q: &CostModel,
        py: Option<&GrayPyramid>,
        schedule: &Schedule,
    ) -> Result<SweepStats> {
        let (rows, cols) = (self.px.base().rows(), self.px.base().cols());
        let mut horizontal = BandStats::default();
        let h = schedule.height.min(rows).min(MAX_BAND_HEIGHT);
        for start in band_starts(rows, h, schedule.stride) {
            horizontal.absorb(self.mh_band_step(
                p,
                q,
                py,
                Band::horizontal(start, h),
                schedule.proposals,
            )?);
        }
        let energy_after_horizontal = self.energy;

        let mut vertical = BandStats::default();
        let w = schedule.height.min(cols).min(MAX_BAND_HEIGHT);
        for start in band_starts(cols, w, schedule.stride) {
            vertical.absorb(self.mh_band_step(
                p,
                q,
                py,
                Band::vertical(start, w),
                schedule.proposals,
            )?);
        }
        self.sweeps += 1;
        Ok(SweepStats {
            sweep: self.sweeps,
            horizontal,
            energy_after_horizontal,
            vertical,
            energy_after_vertical: self.energy,
        })
    }
}

/// Energy of every block configuration relative to the current state,
/// indexed by flip mask (bit `b` flips `block[b]`).
///
/// Walks the configurations in Gray-code order so every entry costs one
/// single-flip delta; the pyramid is restored before returning.
fn gray_block_energies(
    px: &mut BinaryPyramid,
    p: &CostModel,
    py: Option<&GrayPyramid>,
    block: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let configs = 1usize << block.len();
    let mut rel_energy = vec![0.0f64; configs];
    let mut walked = 0.0f64;
    for step in 1..configs {
        let gray = step ^ (step >> 1);
        let bit = step.trailing_zeros() as usize;
        let staged = edit::stage_flips(px, py, &[p], &[block[bit]])?;
        walked += staged.deltas[0];
        rel_energy[gray] = walked;
    }
    // Return to the starting configuration.
    let last_gray = (configs - 1) ^ ((configs - 1) >> 1);
    let undo: Vec<(usize, usize)> = (0..block.len())
        .filter(|&b| (last_gray >> b) & 1 == 1)
        .map(|b| block[b])
        .collect();
    edit::stage_flips(px, py, &[p], &undo)?;
    Ok(rel_energy)
}

/// Starts of overlapping bands covering `0..extent` with the given stride;
/// the final band is clamped so every pixel is covered.
fn band_starts(extent: usize, height: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let max_start = extent - height;
    let mut starts = Vec::new();
    let mut r = 0;
    loop {
        let s = r.min(max_start);
        starts.push(s);
        if s == max_start {
            break;
        }
        r += stride;
    }
    starts
}

/// Draws from the prior `p(x) ~ exp(-E_fop(x))` by running the band chain
/// without a data term, starting from the all-zero image.
pub fn sample_prior(
    model: &FoPModel,
    codec: &PatternCodec,
    rows: usize,
    cols: usize,
    sweeps: usize,
    schedule: &Schedule,
    rng: ChaCha8Rng,
) -> Result<BinaryImage> {
    let p = model.cost_model(codec);
    let q = model.level_zero_slice().cost_model(codec);
    let start = BinaryImage::zeros(rows, cols)?;
    let mut chain = ChainState::new(&start, &p, None, rng)?;
    for _ in 0..sweeps {
        chain.sweep(&p, &q, None, schedule)?;
    }
    Ok(chain.image().clone())
}

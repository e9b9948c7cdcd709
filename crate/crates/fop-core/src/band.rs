//! Exact band sampling for single-scale models.
//!
//! A band is a strip of `h` full rows (or columns).  Conditioned on the
//! rest of the image, the joint distribution of the band pixels under a
//! single-scale model is a 2nd-order Markov chain over per-column states
//! (one state packs the h band bits of one column).  Window costs for the
//! rows touching the band are charged to the factor of their center
//! column, which couples columns `(j-1, j, j+1)`; grouping adjacent
//! columns into ordered pairs makes the chain 1st-order, so a forward pass
//! over pair states followed by backward sampling draws exactly from the
//! conditional in `O(m * 2^(3h))` time and `O(m * 2^(2h))` memory.
//!
//! The forward pass runs in a rescaled plain domain: weights are shifted
//! by an analytic lower bound on the factor energies and renormalized per
//! column, which keeps everything finite without a log-sum-exp in the
//! inner loop.  The accumulated scales reproduce the exact log normalizer.
//!
//! Forward weights depend only on the band context, so one table serves
//! any number of proposal draws.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::image::{BinaryImage, GrayImage};
use crate::model::CostModel;
use crate::num::sample_log_weights;
use crate::pattern::PATTERN_COUNT;
use crate::{Error, Result};

/// Tallest band the sampler enumerates (state space `2^h` per column).
pub const MAX_BAND_HEIGHT: usize = 8;

/// Joint configuration of the `h` band pixels in one column; bit `t` holds
/// the pixel at offset `t` from the band start.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ColumnState(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A strip of `height` consecutive rows (horizontal) or columns (vertical).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Band {
    pub orientation: Orientation,
    pub start: usize,
    pub height: usize,
}

impl Band {
    pub fn horizontal(start: usize, height: usize) -> Self {
        Self {
            orientation: Orientation::Horizontal,
            start,
            height,
        }
    }

    pub fn vertical(start: usize, height: usize) -> Self {
        Self {
            orientation: Orientation::Vertical,
            start,
            height,
        }
    }

    /// Lanes run along the band: image columns for a horizontal band,
    /// image rows for a vertical one.
    pub fn lanes(&self, rows: usize, cols: usize) -> usize {
        match self.orientation {
            Orientation::Horizontal => cols,
            Orientation::Vertical => rows,
        }
    }

    /// Image coordinates of band bit `offset` in lane `lane`.
    #[inline]
    pub fn pixel(&self, lane: usize, offset: usize) -> (usize, usize) {
        match self.orientation {
            Orientation::Horizontal => (self.start + offset, lane),
            Orientation::Vertical => (lane, self.start + offset),
        }
    }

    fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.height == 0 {
            return Err(Error::BadBand);
        }
        if self.height > MAX_BAND_HEIGHT {
            return Err(Error::BandTooTall {
                height: self.height,
                max: MAX_BAND_HEIGHT,
            });
        }
        let across = match self.orientation {
            Orientation::Horizontal => rows,
            Orientation::Vertical => cols,
        };
        if self.start + self.height > across {
            return Err(Error::BadBand);
        }
        Ok(())
    }
}

#[inline]
fn assemble_code(a: u16, b: u16, c: u16) -> u16 {
    (a & 1)
        | (b & 1) << 1
        | (c & 1) << 2
        | ((a >> 1) & 1) << 3
        | ((b >> 1) & 1) << 4
        | ((c >> 1) & 1) << 5
        | ((a >> 2) & 1) << 6
        | ((b >> 2) & 1) << 7
        | ((c >> 2) & 1) << 8
}

/// Forward weights of the band chain plus everything backward sampling
/// needs to re-evaluate factors: fixed-context column bits, per-column
/// data costs and the window cost table.
pub struct ForwardTable {
    band: Band,
    height: usize,
    lanes: usize,
    states: usize,
    /// `log_alpha[j*S*S + prev*S + cur]`, normalized within each column.
    log_alpha: Vec<f64>,
    /// Fixed context bits per column: rows `start-2 .. start+h+1`, band rows zeroed.
    ext_base: Vec<u64>,
    /// Per-column data cost of each column state.
    data: Vec<Vec<f64>>,
    /// Cost of the window assembled from three 3-bit column slices.
    win_cost: Vec<f64>,
    /// `exp(min_win - win_cost)`, so transition weights are plain products.
    exp_win: Vec<f64>,
    s_min: usize,
    s_max: usize,
    log_z: f64,
}

impl ForwardTable {
    /// Runs the forward pass for band `band` of `x` under the single-scale
    /// model `q`, conditioning on all pixels outside the band.
    ///
    /// `y` supplies the observation costs; `None` drops the data term
    /// (prior sampling).
    pub fn build(q: &CostModel, x: &BinaryImage, y: Option<&GrayImage>, band: Band) -> Result<Self> {
        if q.levels() != 1 {
            return Err(Error::NotSingleScale { levels: q.levels() });
        }
        if let Some(y) = y {
            if y.rows() != x.rows() || y.cols() != x.cols() {
                return Err(Error::DimensionMismatch {
                    expected: (x.rows(), x.cols()),
                    got: (y.rows(), y.cols()),
                });
            }
            if y.gray_levels() > q.gray_levels() {
                return Err(Error::BadGrayLevels(y.gray_levels()));
            }
        }
        band.validate(x.rows(), x.cols())?;

        // Work on a horizontal band; transpose everything for vertical ones.
        let (wx, wy, code_costs) = match band.orientation {
            Orientation::Horizontal => (x.clone(), y.cloned(), q.code_costs(0).to_vec()),
            Orientation::Vertical => (
                x.transposed(),
                y.map(|y| y.transposed()),
                q.transposed_code_costs(0),
            ),
        };
        let (n, m) = (wx.rows(), wx.cols());
        let (r0, h) = (band.start, band.height);
        let states = 1usize << h;

        let mut win_cost = vec![0.0f64; PATTERN_COUNT];
        for (idx, slot) in win_cost.iter_mut().enumerate() {
            let (a, b, c) = ((idx >> 6) as u16, ((idx >> 3) & 7) as u16, (idx & 7) as u16);
            *slot = code_costs[assemble_code(a, b, c) as usize];
        }

        // Context bits per column for rows start-2 .. start+h+1.
        let mut ext_base = vec![0u64; m];
        for (j, base) in ext_base.iter_mut().enumerate() {
            for t in 0..h + 4 {
                let row = r0 as isize - 2 + t as isize;
                if row < 0 || row as usize >= n {
                    continue;
                }
                let row = row as usize;
                if (r0..r0 + h).contains(&row) {
                    continue; // band bit, injected per state
                }
                if wx.get(row, j) {
                    *base |= 1 << t;
                }
            }
        }

        // Per-column data costs as subset sums over the band bits.
        let mut data = Vec::with_capacity(m);
        for j in 0..m {
            let mut table = vec![0.0f64; states];
            if let Some(wy) = &wy {
                let row_cost: Vec<f64> = (0..h)
                    .map(|t| q.data_cost(0, wy.get(r0 + t, j)))
                    .collect();
                for z in 1..states {
                    let low = z.trailing_zeros() as usize;
                    table[z] = table[z & (z - 1)] + row_cost[low];
                }
            }
            data.push(table);
        }

        // Window centers with at least one band row: rows start-1 ..= start+h,
        // clipped to the image.
        let s_min = if r0 == 0 { 1 } else { 0 };
        let s_max = if r0 + h < n { h + 1 } else { h };
        let s_count = s_max - s_min + 1;

        let min_win = win_cost.iter().copied().fold(f64::INFINITY, f64::min);
        let shift_win = s_count as f64 * min_win;
        let exp_win: Vec<f64> = win_cost.iter().map(|&w| libm::exp(min_win - w)).collect();

        let mut table = Self {
            band,
            height: h,
            lanes: m,
            states,
            log_alpha: vec![f64::NEG_INFINITY; m * states * states],
            ext_base,
            data,
            win_cost,
            exp_win,
            s_min,
            s_max,
            log_z: 0.0,
        };
        table.forward(shift_win);
        Ok(table)
    }

    #[inline]
    fn ext(&self, j: isize, z: usize) -> u64 {
        if j < 0 || j as usize >= self.lanes {
            0
        } else {
            self.ext_base[j as usize] | (z as u64) << 2
        }
    }

    /// Sum of window costs charged to column `j` for states
    /// `(z_{j-1}, z_j, z_{j+1}) = (za, zb, zc)`.
    fn psi(&self, j: usize, za: usize, zb: usize, zc: usize) -> f64 {
        let ea = self.ext(j as isize - 1, za);
        let eb = self.ext(j as isize, zb);
        let ec = self.ext(j as isize + 1, zc);
        let mut sum = 0.0;
        for s in self.s_min..=self.s_max {
            let idx = ((ea >> s) & 7) << 6 | ((eb >> s) & 7) << 3 | ((ec >> s) & 7);
            sum += self.win_cost[idx as usize];
        }
        sum
    }

    fn log_f(&self, j: usize, za: usize, zb: usize, zc: usize) -> f64 {
        -(self.psi(j, za, zb, zc) + self.data[j][zb])
    }

    fn forward(&mut self, shift_win: f64) {
        let (m, s) = (self.lanes, self.states);
        let s_range = self.s_min..=self.s_max;
        let s_count = s_range.clone().count();

        // Normalized plain-domain weights for the current column's pairs.
        let mut cur = vec![0.0f64; s * s];
        for zb in 0..s {
            cur[zb] = 1.0 / s as f64; // prev state is the virtual zero column
        }
        let mut scale = libm::log(s as f64);

        // Pre-sliced 3-bit windows of every state in the current column roles.
        let mut a_slices = vec![0u16; s * s_count];
        let mut b_slices = vec![0u16; s * s_count];
        let mut c_slices = vec![0u16; s * s_count];

        let mut next = vec![0.0f64; s * s];
        for j in 0..m {
            // Record alpha for column j in log form.
            let out = &mut self.log_alpha[j * s * s..(j + 1) * s * s];
            for (slot, &w) in out.iter_mut().zip(cur.iter()) {
                *slot = if w > 0.0 { libm::log(w) } else { f64::NEG_INFINITY };
            }

            let min_d = self.data[j]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
                .min(0.0);
            let exp_d: Vec<f64> = self.data[j]
                .iter()
                .map(|&d| libm::exp(min_d - d))
                .collect();

            for z in 0..s {
                for (si, sbit) in s_range.clone().enumerate() {
                    a_slices[z * s_count + si] = ((self.ext(j as isize - 1, z) >> sbit) & 7) as u16;
                    b_slices[z * s_count + si] = ((self.ext(j as isize, z) >> sbit) & 7) as u16;
                    c_slices[z * s_count + si] = ((self.ext(j as isize + 1, z) >> sbit) & 7) as u16;
                }
            }

            let last = j + 1 == m;
            if last {
                // Fold the final factor (virtual all-zero column j+1 = m).
                let mut total = 0.0f64;
                for za in 0..s {
                    let ab = &a_slices[za * s_count..(za + 1) * s_count];
                    for zb in 0..s {
                        let w0 = cur[za * s + zb];
                        if w0 == 0.0 {
                            continue;
                        }
                        let bb = &b_slices[zb * s_count..(zb + 1) * s_count];
                        // Column m is virtual: ext() returned 0 for every
                        // state, so any slice row works; use state 0.
                        let cc = &c_slices[0..s_count];
                        let mut f = 1.0;
                        for si in 0..s_count {
                            let idx = (ab[si] << 6 | bb[si] << 3 | cc[si]) as usize;
                            f *= self.exp_win[idx];
                        }
                        total += w0 * exp_d[zb] * f;
                    }
                }
                self.log_z = scale - shift_win - min_d + libm::log(total);
            } else {
                next.iter_mut().for_each(|v| *v = 0.0);
                for za in 0..s {
                    let ab = &a_slices[za * s_count..(za + 1) * s_count];
                    for zb in 0..s {
                        let w0 = cur[za * s + zb];
                        if w0 == 0.0 {
                            continue;
                        }
                        let base = w0 * exp_d[zb];
                        let bb = &b_slices[zb * s_count..(zb + 1) * s_count];
                        let mut ab_idx = [0u16; MAX_BAND_HEIGHT + 2];
                        for si in 0..s_count {
                            ab_idx[si] = ab[si] << 6 | bb[si] << 3;
                        }
                        for zc in 0..s {
                            let cc = &c_slices[zc * s_count..(zc + 1) * s_count];
                            let mut f = base;
                            for si in 0..s_count {
                                f *= self.exp_win[(ab_idx[si] | cc[si]) as usize];
                            }
                            next[zb * s + zc] += f;
                        }
                    }
                }
                let total: f64 = next.iter().sum();
                debug_assert!(total > 0.0);
                for v in &mut next {
                    *v /= total;
                }
                scale += libm::log(total) - shift_win - min_d;
                core::mem::swap(&mut cur, &mut next);
            }
        }
    }

    #[inline]
    pub fn band(&self) -> Band {
        self.band
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Lanes along the band (columns of a horizontal band).
    #[inline]
    pub fn lanes(&self) -> usize {
        self.lanes
    }

    /// Exact log normalizer of the band conditional, i.e. the log sum of
    /// `exp(-E)` over all `2^(h*m)` band configurations, restricted to the
    /// energy terms that depend on the band.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    /// Draws one exact sample from the band conditional.
    ///
    /// The table is read-only: repeated calls produce independent samples
    /// from the same conditional.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<ColumnState> {
        let (m, s) = (self.lanes, self.states);
        let mut z = vec![0usize; m];
        if m == 1 {
            let weights: Vec<f64> = (0..s)
                .map(|zb| self.log_alpha[zb] + self.log_f(0, 0, zb, 0))
                .collect();
            z[0] = sample_log_weights(rng, &weights);
        } else {
            let mut weights = vec![f64::NEG_INFINITY; s * s];
            let last = m - 1;
            for za in 0..s {
                for zb in 0..s {
                    let la = self.log_alpha[last * s * s + za * s + zb];
                    if la > f64::NEG_INFINITY {
                        weights[za * s + zb] = la + self.log_f(last, za, zb, 0);
                    }
                }
            }
            let idx = sample_log_weights(rng, &weights);
            z[m - 2] = idx / s;
            z[m - 1] = idx % s;

            let mut step_weights = vec![f64::NEG_INFINITY; s];
            for j in (1..=m - 2).rev() {
                for (za, slot) in step_weights.iter_mut().enumerate() {
                    let la = self.log_alpha[j * s * s + za * s + z[j]];
                    *slot = if la > f64::NEG_INFINITY {
                        la + self.log_f(j, za, z[j], z[j + 1])
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                z[j - 1] = sample_log_weights(rng, &step_weights);
            }
        }
        z.into_iter().map(|v| ColumnState(v as u32)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FoPModel, ModelLayout};
    use crate::pattern::PatternCodec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_q(m: usize) -> CostModel {
        FoPModel::zeros(1, m, true).cost_model(&PatternCodec::new())
    }

    #[test]
    fn zero_model_partition_counts_states() {
        let x = BinaryImage::zeros(3, 5).unwrap();
        let t = ForwardTable::build(&zero_q(4), &x, None, Band::horizontal(0, 3)).unwrap();
        let expect = 15.0 * core::f64::consts::LN_2;
        assert!((t.log_partition() - expect).abs() < 1e-9);
    }

    #[test]
    fn zero_model_samples_are_uniform_bits() {
        let x = BinaryImage::zeros(2, 4).unwrap();
        let t = ForwardTable::build(&zero_q(4), &x, None, Band::horizontal(0, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ones = 0usize;
        let draws = 20_000;
        for _ in 0..draws {
            for c in t.sample(&mut rng) {
                ones += c.0.count_ones() as usize;
            }
        }
        let total_bits = draws * 8;
        let frac = ones as f64 / total_bits as f64;
        // 3 sigma for a fair coin over draws*8 bits.
        let sigma = 0.5 / (total_bits as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma + 1e-3, "on fraction {frac}");
    }

    #[test]
    fn single_lane_band_matches_direct_enumeration() {
        // 3x1 image, h = 3: the table must reproduce brute force over 8 states.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layout = ModelLayout { levels: 1, gray_levels: 4, invariant: true };
        let w: Vec<f64> = (0..layout.weight_len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let model = FoPModel::from_weights(layout, &w).unwrap();
        let codec = PatternCodec::new();
        let q = model.cost_model(&codec);

        let x = BinaryImage::zeros(3, 1).unwrap();
        let y = GrayImage::from_pixels(3, 1, 4, vec![0, 3, 1]).unwrap();
        let t = ForwardTable::build(&q, &x, Some(&y), Band::horizontal(0, 3)).unwrap();

        // Brute force: energy of each of the 8 column configurations.
        let mut log_weights = [0.0f64; 8];
        for (z, lw) in log_weights.iter_mut().enumerate() {
            let img = BinaryImage::from_fn(3, 1, |i, _| (z >> i) & 1 == 1).unwrap();
            let px = crate::pyramid::BinaryPyramid::build(&img, 1).unwrap();
            let py = crate::pyramid::GrayPyramid::build(&y, 1).unwrap();
            let e = crate::model::energy_total(&model, &codec, &px, &py).unwrap();
            *lw = -e;
        }
        let z_exact = crate::num::logsumexp(&log_weights);
        assert!((t.log_partition() - z_exact).abs() < 1e-10 * z_exact.abs().max(1.0));

        let mut counts = [0usize; 8];
        let draws = 40_000;
        for _ in 0..draws {
            let s = t.sample(&mut rng);
            counts[s[0].0 as usize] += 1;
        }
        let mut tv = 0.0;
        for z in 0..8 {
            let p = libm::exp(log_weights[z] - z_exact);
            tv += (counts[z] as f64 / draws as f64 - p).abs();
        }
        assert!(tv / 2.0 < 0.02, "TV {tv}");
    }

    #[test]
    fn forcing_data_term_pins_the_sample() {
        let mut w = vec![0.0; ModelLayout { levels: 1, gray_levels: 2, invariant: true }.weight_len()];
        let layout = ModelLayout { levels: 1, gray_levels: 2, invariant: true };
        w[layout.data_index(0, 0)] = -50.0; // reward x=1 on y=0
        w[layout.data_index(0, 1)] = 50.0; // forbid x=1 on y=1
        let model = FoPModel::from_weights(layout, &w).unwrap();
        let q = model.cost_model(&PatternCodec::new());

        let y = GrayImage::from_pixels(3, 4, 2, (0..12).map(|i| (i % 2) as u16).collect()).unwrap();
        let x = BinaryImage::zeros(3, 4).unwrap();
        let t = ForwardTable::build(&q, &x, Some(&y), Band::horizontal(0, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = t.sample(&mut rng);
            for (lane, c) in s.iter().enumerate() {
                for bit in 0..3 {
                    let want = y.get(bit, lane) == 0;
                    assert_eq!((c.0 >> bit) & 1 == 1, want);
                }
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layout = ModelLayout { levels: 1, gray_levels: 4, invariant: true };
        let w: Vec<f64> = (0..layout.weight_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = FoPModel::from_weights(layout, &w)
            .unwrap()
            .cost_model(&PatternCodec::new());
        let x = BinaryImage::from_fn(5, 6, |i, j| (i + j) % 3 == 0).unwrap();
        let t = ForwardTable::build(&q, &x, None, Band::horizontal(1, 3)).unwrap();

        let a: Vec<_> = {
            let mut r = ChaCha8Rng::seed_from_u64(99);
            (0..10).map(|_| t.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = ChaCha8Rng::seed_from_u64(99);
            (0..10).map(|_| t.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_geometry() {
        let x = BinaryImage::zeros(4, 4).unwrap();
        let q2 = FoPModel::zeros(2, 4, true).cost_model(&PatternCodec::new());
        assert!(matches!(
            ForwardTable::build(&q2, &x, None, Band::horizontal(0, 2)),
            Err(Error::NotSingleScale { levels: 2 })
        ));
        assert!(matches!(
            ForwardTable::build(&zero_q(4), &x, None, Band::horizontal(3, 2)),
            Err(Error::BadBand)
        ));
        assert!(matches!(
            ForwardTable::build(&zero_q(4), &x, None, Band::horizontal(0, 9)),
            Err(Error::BandTooTall { height: 9, max: 8 })
        ));
    }
}

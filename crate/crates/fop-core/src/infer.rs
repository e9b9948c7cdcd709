//! Posterior marginal estimation by MCMC.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::chain::{ChainState, Schedule, SweepStats};
use crate::eval::PosteriorMap;
use crate::image::{BinaryImage, GrayImage};
use crate::model::FoPModel;
use crate::pattern::PatternCodec;
use crate::pyramid::GrayPyramid;
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct InferConfig {
    /// Sweeps discarded before any sample is recorded.
    pub burn_in: usize,
    /// Post-burn-in sweeps; every `thin`-th one is averaged.
    pub samples: usize,
    pub thin: usize,
    pub schedule: Schedule,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self {
            burn_in: 20,
            samples: 80,
            thin: 1,
            schedule: Schedule::default(),
        }
    }
}

/// Estimates `p(x(i,j) = 1 | y)` by averaging thinned post-burn-in states
/// of the band-sampler chain, and returns the per-sweep diagnostics.
///
/// The proposal defaults to the level-0 slice of `model`; chains start at
/// the all-zero image.
pub fn infer_marginals_traced(
    model: &FoPModel,
    codec: &PatternCodec,
    proposal: Option<&FoPModel>,
    y: &GrayImage,
    cfg: &InferConfig,
    rng: ChaCha8Rng,
) -> Result<(PosteriorMap, Vec<SweepStats>)> {
    let p = model.cost_model(codec);
    let q = match proposal {
        Some(q) => q.cost_model(codec),
        None => model.level_zero_slice().cost_model(codec),
    };
    let py = GrayPyramid::build(y, model.levels())?;
    let start = BinaryImage::zeros(y.rows(), y.cols())?;
    let mut chain = ChainState::new(&start, &p, Some(&py), rng)?;

    let mut trace = Vec::with_capacity(cfg.burn_in + cfg.samples);
    for _ in 0..cfg.burn_in {
        trace.push(chain.sweep(&p, &q, Some(&py), &cfg.schedule)?);
    }
    let thin = cfg.thin.max(1);
    let mut acc = vec![0.0f64; y.rows() * y.cols()];
    let mut recorded = 0u64;
    for s in 0..cfg.samples {
        trace.push(chain.sweep(&p, &q, Some(&py), &cfg.schedule)?);
        if s % thin == 0 {
            for (a, &b) in acc.iter_mut().zip(chain.image().bits()) {
                *a += b as f64;
            }
            recorded += 1;
        }
    }
    if recorded > 0 {
        for a in &mut acc {
            *a /= recorded as f64;
        }
    }
    let map = PosteriorMap::new(y.rows(), y.cols(), acc, recorded)?;
    Ok((map, trace))
}

/// [`infer_marginals_traced`] without the diagnostics.
pub fn infer_marginals(
    model: &FoPModel,
    codec: &PatternCodec,
    proposal: Option<&FoPModel>,
    y: &GrayImage,
    cfg: &InferConfig,
    rng: ChaCha8Rng,
) -> Result<PosteriorMap> {
    infer_marginals_traced(model, codec, proposal, y, cfg, rng).map(|(map, _)| map)
}

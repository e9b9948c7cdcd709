//! Parallel drivers around the core training and inference loops.
//!
//! Chains advance in parallel across examples/images; every reduction
//! happens in example-index order, so results are byte-identical for any
//! `--jobs` setting (including 1).

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use fop_core::chain::{BandStats, SweepStats};
use fop_core::eval::PosteriorMap;
use fop_core::image::GrayImage;
use fop_core::infer::{infer_marginals_traced, InferConfig};
use fop_core::learn::{train, Example, StepStats, TrainConfig, TrainMode, Trainer};
use fop_core::model::FoPModel;
use fop_core::pattern::PatternCodec;
use fop_core::rng;
use rayon::prelude::*;

use crate::modelfile;

pub struct TraceRow {
    pub stats: StepStats,
    pub wall_ms: u128,
}

pub struct TrainOutcome {
    pub model: FoPModel,
    pub trace: Vec<TraceRow>,
}

/// Checkpointing policy for long runs.
pub struct Checkpoints<'a> {
    pub base: &'a Path,
    pub every: usize,
    pub lambda: f64,
}

/// Persistent-chain SGD with parallel chain advancement.
pub fn train_parallel(
    model0: FoPModel,
    data: &[Example],
    proposal: Option<FoPModel>,
    cfg: TrainConfig,
    start_step: usize,
    checkpoints: Option<Checkpoints<'_>>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::with_start_step(model0, data, proposal, cfg, start_step)?;
    let mut trace = Vec::with_capacity(cfg.steps.saturating_sub(start_step));
    for step in start_step..cfg.steps {
        let t0 = Instant::now();
        let ctx = trainer.begin_step();
        let mut batch = ctx.batch().to_vec();
        batch.sort_unstable();
        let stats: Result<Vec<BandStats>, fop_core::Error> = trainer
            .examples_mut()
            .par_iter_mut()
            .enumerate()
            .filter(|(i, _)| batch.binary_search(i).is_ok())
            .map(|(_, ex)| ctx.advance(ex))
            .collect();
        let row = trainer.finish_step(&ctx, &stats?)?;
        trace.push(TraceRow {
            stats: row,
            wall_ms: t0.elapsed().as_millis(),
        });
        if let Some(ck) = &checkpoints {
            let done = step + 1;
            if ck.every > 0 && done % ck.every == 0 && done < cfg.steps {
                let path = ck.base.with_extension(format!("step{done}.fop"));
                modelfile::save_model(&path, trainer.model(), Some(ck.lambda), Some(done as u64))?;
            }
        }
    }
    Ok(TrainOutcome {
        model: trainer.into_model(),
        trace,
    })
}

/// Exact-gradient descent (sequential; enumerable instances are tiny).
pub fn train_exact(
    model0: FoPModel,
    data: &[Example],
    cfg: TrainConfig,
) -> Result<TrainOutcome> {
    let t0 = Instant::now();
    let (model, stats) = train(model0, data, None, cfg, TrainMode::Exact)?;
    let wall = t0.elapsed().as_millis() / stats.len().max(1) as u128;
    Ok(TrainOutcome {
        model,
        trace: stats
            .into_iter()
            .map(|stats| TraceRow {
                stats,
                wall_ms: wall,
            })
            .collect(),
    })
}

pub struct InferenceItem {
    pub name: String,
    pub map: PosteriorMap,
    pub trace: Vec<SweepStats>,
}

/// Runs one independent chain per image; image `i` uses RNG stream `i` of
/// the master seed.
pub fn infer_parallel(
    model: &FoPModel,
    proposal: Option<&FoPModel>,
    images: &[(String, GrayImage)],
    cfg: &InferConfig,
    seed: u64,
) -> Result<Vec<InferenceItem>> {
    let codec = PatternCodec::new();
    let items: Result<Vec<InferenceItem>, fop_core::Error> = images
        .par_iter()
        .enumerate()
        .map(|(idx, (name, y))| {
            let (map, trace) =
                infer_marginals_traced(model, &codec, proposal, y, cfg, rng::stream(seed, idx as u64))?;
            Ok(InferenceItem {
                name: name.clone(),
                map,
                trace,
            })
        })
        .collect();
    Ok(items?)
}

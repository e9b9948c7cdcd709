//! Regularized maximum-likelihood training.
//!
//! The objective is `O(w) = lambda/2 ||w||^2 + sum_i L(x_i, y_i)` with
//! `L = -log p(x_i | y_i)`; it is convex in `w` because the energy is
//! linear in the parameters.  The gradient replaces the intractable model
//! expectation `E[phi(x, y_i)]` with a single sample `phi(x_i', y_i)` drawn
//! from one persistent Markov chain per training example; chains survive
//! across steps and are advanced a few sweeps under the latest parameters
//! before every update.
//!
//! For instances small enough to enumerate, [`exact_gradient`] and
//! [`exact_objective`] compute the true quantities; [`train`] in exact mode
//! is plain gradient descent on them.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{BandStats, ChainState, Schedule};
use crate::image::{BinaryImage, GrayImage};
use crate::model::{energy_data_costs, energy_fop_costs, features, CostModel, FoPModel};
use crate::oracle::MAX_ORACLE_PIXELS;
use crate::pattern::PatternCodec;
use crate::pyramid::{BinaryPyramid, GrayPyramid};
use crate::rng;
use crate::{Error, Result};

/// One training pair; dimensions must match.
#[derive(Clone, Debug)]
pub struct Example {
    mask: BinaryImage,
    observation: GrayImage,
}

impl Example {
    pub fn new(mask: BinaryImage, observation: GrayImage) -> Result<Self> {
        if mask.rows() != observation.rows() || mask.cols() != observation.cols() {
            return Err(Error::DimensionMismatch {
                expected: (mask.rows(), mask.cols()),
                got: (observation.rows(), observation.cols()),
            });
        }
        Ok(Self { mask, observation })
    }

    pub fn mask(&self) -> &BinaryImage {
        &self.mask
    }

    pub fn observation(&self) -> &GrayImage {
        &self.observation
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// L2 regularization weight (must be >= 0).
    pub lambda: f64,
    /// Per-example learning rate: the update is `w -= eta/N * gradient`.
    /// Exact-gradient mode uses `eta` as the literal step size.
    pub eta: f64,
    pub steps: usize,
    pub sweeps_per_step: usize,
    pub schedule: Schedule,
    pub seed: u64,
    /// Examples per step; `None` uses the full sum of Eq-style updates.
    pub minibatch: Option<usize>,
    /// Fraction of steps after which eta is multiplied by 0.1.
    pub decay_at: f64,
    /// If set, the returned model averages the trailing fraction of steps.
    pub polyak_tail: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            eta: 1e-4,
            steps: 200,
            sweeps_per_step: 1,
            schedule: Schedule::default(),
            seed: 0,
            minibatch: None,
            decay_at: 0.75,
            polyak_tail: None,
        }
    }
}

/// Per-step trace record.
#[derive(Clone, Copy, Debug)]
pub struct StepStats {
    pub step: usize,
    /// Exact objective in exact mode; contrastive estimate
    /// `lambda/2 ||w||^2 + sum_i E(x_i,y_i) - E(x_i',y_i)` in SGD mode.
    pub objective: f64,
    pub grad_norm: f64,
    pub accept_rate: f64,
}

/// A training example with its persistent chain.
pub struct TrainExample {
    chain: ChainState,
    py: GrayPyramid,
}

/// Immutable context for advancing chains during one step.
pub struct StepContext {
    p: CostModel,
    q: CostModel,
    sweeps: usize,
    schedule: Schedule,
    batch: Vec<usize>,
    eta_step: f64,
}

impl StepContext {
    /// Advances one example's chain `sweeps_per_step` sweeps under the
    /// current parameters.  Safe to call from parallel workers; results do
    /// not depend on scheduling because each chain owns its RNG stream.
    pub fn advance(&self, example: &mut TrainExample) -> Result<BandStats> {
        example.chain.refresh_energy(&self.p, Some(&example.py));
        let mut stats = BandStats::default();
        for _ in 0..self.sweeps {
            let s = example
                .chain
                .sweep(&self.p, &self.q, Some(&example.py), &self.schedule)?;
            stats.proposed += s.horizontal.proposed + s.vertical.proposed;
            stats.accepted += s.horizontal.accepted + s.vertical.accepted;
        }
        Ok(stats)
    }

    pub fn batch(&self) -> &[usize] {
        &self.batch
    }
}

/// Persistent-chain SGD state: current model plus one chain per example.
pub struct Trainer {
    model: FoPModel,
    codec: PatternCodec,
    cfg: TrainConfig,
    proposal: Option<FoPModel>,
    examples: Vec<TrainExample>,
    data_phi: Vec<Vec<f64>>,
    step: usize,
    polyak_sum: Vec<f64>,
    polyak_count: usize,
}

impl Trainer {
    pub fn new(
        model: FoPModel,
        data: &[Example],
        proposal: Option<FoPModel>,
        cfg: TrainConfig,
    ) -> Result<Self> {
        Self::with_start_step(model, data, proposal, cfg, 0)
    }

    /// Resumes at `start_step`; chain RNG streams are derived from the seed
    /// and the start step, so two resumes from the same checkpoint agree.
    pub fn with_start_step(
        model: FoPModel,
        data: &[Example],
        proposal: Option<FoPModel>,
        cfg: TrainConfig,
        start_step: usize,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if cfg.lambda < 0.0 || cfg.eta <= 0.0 {
            return Err(Error::NonFinite);
        }
        if let Some(q) = &proposal {
            if q.levels() != 1 {
                return Err(Error::NotSingleScale { levels: q.levels() });
            }
            if q.gray_levels() != model.gray_levels() {
                return Err(Error::BadGrayLevels(q.gray_levels()));
            }
        }
        let codec = PatternCodec::new();
        let p = model.cost_model(&codec);
        let seed = cfg
            .seed
            .wrapping_add((start_step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut examples = Vec::with_capacity(data.len());
        let mut data_phi = Vec::with_capacity(data.len());
        for (i, ex) in data.iter().enumerate() {
            if ex.observation.gray_levels() > model.gray_levels() {
                return Err(Error::BadGrayLevels(ex.observation.gray_levels()));
            }
            let py = GrayPyramid::build(&ex.observation, model.levels())?;
            // Chains warm-start at the ground truth.
            let chain = ChainState::new(&ex.mask, &p, Some(&py), rng::stream(seed, i as u64))?;
            let px = BinaryPyramid::build(&ex.mask, model.levels())?;
            data_phi.push(features(model.layout(), &codec, &px, &py)?.values().to_vec());
            examples.push(TrainExample { chain, py });
        }
        let weight_len = model.layout().weight_len();
        Ok(Self {
            model,
            codec,
            cfg,
            proposal,
            examples,
            data_phi,
            step: start_step,
            polyak_sum: vec![0.0; weight_len],
            polyak_count: 0,
        })
    }

    pub fn model(&self) -> &FoPModel {
        &self.model
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn examples_mut(&mut self) -> &mut [TrainExample] {
        &mut self.examples
    }

    fn eta_at(&self, step: usize) -> f64 {
        let decay_point = (self.cfg.steps as f64 * self.cfg.decay_at) as usize;
        if step >= decay_point && self.cfg.steps > 0 {
            self.cfg.eta * 0.1
        } else {
            self.cfg.eta
        }
    }

    /// Snapshot of the current parameters for this step's chain advances.
    pub fn begin_step(&self) -> StepContext {
        let p = self.model.cost_model(&self.codec);
        let q = self
            .proposal
            .as_ref()
            .map(|m| m.cost_model(&self.codec))
            .unwrap_or_else(|| self.model.level_zero_slice().cost_model(&self.codec));
        let n = self.examples.len();
        let batch = match self.cfg.minibatch {
            Some(b) if b < n => {
                let b = b.max(1);
                (0..b).map(|t| (self.step * b + t) % n).collect()
            }
            _ => (0..n).collect(),
        };
        StepContext {
            p,
            q,
            sweeps: self.cfg.sweeps_per_step.max(1),
            schedule: self.cfg.schedule,
            batch,
            eta_step: self.eta_at(self.step),
        }
    }

    /// Applies the parameter update from the freshly advanced chains.
    pub fn finish_step(&mut self, ctx: &StepContext, advance: &[BandStats]) -> Result<StepStats> {
        let n = self.examples.len() as f64;
        let scale = n / ctx.batch.len() as f64;
        let w = self.model.to_weights();
        let layout = self.model.layout();

        let mut grad: Vec<f64> = w.iter().map(|&v| self.cfg.lambda * v).collect();
        let mut contrast = 0.0;
        for &i in &ctx.batch {
            let ex = &self.examples[i];
            let phi_model = features(layout, &self.codec, ex.chain.pyramid(), &ex.py)?;
            for ((g, &d), &m) in grad
                .iter_mut()
                .zip(&self.data_phi[i])
                .zip(phi_model.values())
            {
                *g += scale * (d - m);
            }
            let e_data: f64 = self.data_phi[i]
                .iter()
                .zip(&w)
                .map(|(a, b)| a * b)
                .sum();
            let e_model = phi_model.dot(&w);
            contrast += scale * (e_data - e_model);
        }
        let grad_norm = libm::sqrt(grad.iter().map(|g| g * g).sum());
        let objective = 0.5 * self.cfg.lambda * w.iter().map(|v| v * v).sum::<f64>() + contrast;

        let eta = ctx.eta_step / n;
        let new_w: Vec<f64> = w.iter().zip(&grad).map(|(w, g)| w - eta * g).collect();
        if new_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.model = FoPModel::from_weights(layout, &new_w)?;
        self.step += 1;

        if let Some(tail) = self.cfg.polyak_tail {
            let start = (self.cfg.steps as f64 * (1.0 - tail)) as usize;
            if self.step > start {
                for (acc, &v) in self.polyak_sum.iter_mut().zip(&new_w) {
                    *acc += v;
                }
                self.polyak_count += 1;
            }
        }

        let mut acc = BandStats::default();
        for s in advance {
            acc.proposed += s.proposed;
            acc.accepted += s.accepted;
        }
        Ok(StepStats {
            step: self.step,
            objective,
            grad_norm,
            accept_rate: acc.rate(),
        })
    }

    /// One sequential SGD step (advance every batch chain, then update).
    pub fn step(&mut self) -> Result<StepStats> {
        let ctx = self.begin_step();
        let mut stats = Vec::with_capacity(ctx.batch.len());
        for &i in &ctx.batch {
            stats.push(ctx.advance(&mut self.examples[i])?);
        }
        self.finish_step(&ctx, &stats)
    }

    /// Final model, Polyak-averaged over the configured tail if enabled.
    pub fn into_model(self) -> FoPModel {
        if self.polyak_count > 0 {
            let avg: Vec<f64> = self
                .polyak_sum
                .iter()
                .map(|v| v / self.polyak_count as f64)
                .collect();
            FoPModel::from_weights(self.model.layout(), &avg).expect("average of finite weights")
        } else {
            self.model
        }
    }
}

fn check_enumerable(data: &[Example]) -> Result<()> {
    for ex in data {
        let pixels = ex.mask.rows() * ex.mask.cols();
        if pixels > MAX_ORACLE_PIXELS {
            return Err(Error::TooLargeToEnumerate {
                pixels,
                max: MAX_ORACLE_PIXELS,
            });
        }
    }
    Ok(())
}

/// Exact gradient of the regularized negative log-likelihood, by
/// exhaustive enumeration of each example's state space.
pub fn exact_gradient(
    model: &FoPModel,
    codec: &PatternCodec,
    data: &[Example],
    lambda: f64,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_enumerable(data)?;
    let layout = model.layout();
    let costs = model.cost_model(codec);
    let mut grad: Vec<f64> = model.to_weights().iter().map(|&v| lambda * v).collect();
    for ex in data {
        let (rows, cols) = (ex.mask.rows(), ex.mask.cols());
        let py = GrayPyramid::build(&ex.observation, model.levels())?;
        let px = BinaryPyramid::build(&ex.mask, model.levels())?;
        let phi_data = features(layout, codec, &px, &py)?;
        for (g, &d) in grad.iter_mut().zip(phi_data.values()) {
            *g += d;
        }

        // E[phi] under p(x | y): two passes, log partition then weights.
        let states = 1u64 << (rows * cols);
        let mut energies = Vec::with_capacity(states as usize);
        for mask in 0..states {
            let img = BinaryImage::from_fn(rows, cols, |i, j| (mask >> (i * cols + j)) & 1 == 1)?;
            let pxm = BinaryPyramid::build(&img, model.levels())?;
            energies.push(-(energy_fop_costs(&costs, &pxm) + energy_data_costs(&costs, &pxm, &py)));
        }
        let log_z = crate::num::logsumexp(&energies);
        for mask in 0..states {
            let img = BinaryImage::from_fn(rows, cols, |i, j| (mask >> (i * cols + j)) & 1 == 1)?;
            let pxm = BinaryPyramid::build(&img, model.levels())?;
            let p = libm::exp(energies[mask as usize] - log_z);
            let phi = features(layout, codec, &pxm, &py)?;
            for (g, &v) in grad.iter_mut().zip(phi.values()) {
                *g -= p * v;
            }
        }
    }
    Ok(grad)
}

/// Exact regularized negative log-likelihood.
pub fn exact_objective(
    model: &FoPModel,
    codec: &PatternCodec,
    data: &[Example],
    lambda: f64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_enumerable(data)?;
    let w = model.to_weights();
    let mut obj = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    for ex in data {
        let py = GrayPyramid::build(&ex.observation, model.levels())?;
        let px = BinaryPyramid::build(&ex.mask, model.levels())?;
        let phi = features(model.layout(), codec, &px, &py)?;
        let oracle = crate::oracle::enumerate(
            model,
            codec,
            ex.mask.rows(),
            ex.mask.cols(),
            Some(&ex.observation),
        )?;
        obj += phi.dot(&w) + oracle.log_partition;
    }
    Ok(obj)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TrainMode {
    /// Persistent-chain stochastic gradient descent.
    Sgd,
    /// Full gradient descent on the exact objective (enumerable data only).
    Exact,
}

/// Runs the configured number of steps and returns the final model with
/// the per-step trace.
pub fn train(
    model: FoPModel,
    data: &[Example],
    proposal: Option<FoPModel>,
    cfg: TrainConfig,
    mode: TrainMode,
) -> Result<(FoPModel, Vec<StepStats>)> {
    match mode {
        TrainMode::Sgd => {
            let mut trainer = Trainer::new(model, data, proposal, cfg)?;
            let mut trace = Vec::with_capacity(cfg.steps);
            for _ in 0..cfg.steps {
                trace.push(trainer.step()?);
            }
            Ok((trainer.into_model(), trace))
        }
        TrainMode::Exact => {
            let codec = PatternCodec::new();
            let mut current = model;
            let mut trace = Vec::with_capacity(cfg.steps);
            for step in 0..cfg.steps {
                let grad = exact_gradient(&current, &codec, data, cfg.lambda)?;
                let eta = if step >= (cfg.steps as f64 * cfg.decay_at) as usize {
                    cfg.eta * 0.1
                } else {
                    cfg.eta
                };
                let w: Vec<f64> = current
                    .to_weights()
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| w - eta * g)
                    .collect();
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                current = FoPModel::from_weights(current.layout(), &w)?;
                trace.push(StepStats {
                    step: step + 1,
                    objective: exact_objective(&current, &codec, data, cfg.lambda)?,
                    grad_norm: libm::sqrt(grad.iter().map(|g| g * g).sum()),
                    accept_rate: 1.0,
                });
            }
            Ok((current, trace))
        }
    }
}

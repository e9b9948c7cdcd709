//! Subcommand implementations.
//!
//! Every command resolves its full configuration (defaults included),
//! derives all randomness from one master seed, and records a metadata
//! file next to its outputs, so reruns with the same flags are
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fop_core::chain::{sample_prior, Schedule};
use fop_core::image::GrayImage;
use fop_core::infer::InferConfig;
use fop_core::learn::{Example, TrainConfig};
use fop_core::model::FoPModel;
use fop_core::oracle;
use fop_core::pattern::PatternCodec;
use fop_core::pyramid::{BinaryPyramid, GrayPyramid};
use fop_core::rng;
use fop_core::synth::{synth_observe, synth_shapes, NoiseParams, ShapeKind};

use crate::driver::{self, Checkpoints};
use crate::manifest::{self, DatasetEntry};
use crate::meta::{self, RunMetadata};
use crate::modelfile;
use crate::pnm::{self, PnmImage};
use crate::posterior;
use crate::report;

/// Flag combinations the parser cannot reject on its own; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

/// A result that failed a numerical acceptance check; exits with 4.
#[derive(Debug)]
pub struct NumericError(pub String);

impl fmt::Display for NumericError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NumericError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "fop",
    version,
    about = "Multiscale field-of-patterns models over binary images",
    after_help = "The master seed comes from --seed, else the FOP_SEED environment variable, else 0."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Write every level of an image's coarsening pyramid
    Coarsen(CoarsenArgs),
    /// Generate a synthetic dataset: masks, noisy observations, manifest
    Synth(SynthArgs),
    /// Train a model by regularized maximum likelihood
    Train(TrainArgs),
    /// Estimate per-pixel posterior marginals
    Infer(InferArgs),
    /// Precision-recall evaluation of posterior maps against masks
    Eval(EvalArgs),
    /// Draw a sample from a model's prior over binary images
    SamplePrior(SamplePriorArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coarsen(args) => run_coarsen(args),
        Command::Synth(args) => run_synth(args),
        Command::Train(args) => run_train(args),
        Command::Infer(args) => run_infer(args),
        Command::Eval(args) => run_eval(args),
        Command::SamplePrior(args) => run_sample_prior(args),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FOP_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| usage(format!("FOP_SEED is not a valid seed: `{text}`"))),
        Err(_) => Ok(0),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building thread pool")?;
            pool.install(f)
        }
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn finish_metadata(
    dir: &Path,
    seed: u64,
    model_hash: Option<String>,
    config: BTreeMap<String, String>,
    started: Instant,
) -> Result<()> {
    let meta = RunMetadata {
        command_line: command_line(),
        seed,
        rng_algorithm: rng::RNG_ALGORITHM,
        model_hash,
        config_digest: meta::config_digest(&config),
        wall_ms: started.elapsed().as_millis(),
        config,
    };
    meta::write_run_metadata(dir, &meta)
}

// ---------------------------------------------------------------- coarsen

#[derive(Args)]
pub struct CoarsenArgs {
    /// Input image: PBM uses OR-coarsening, PGM uses floor-average
    #[arg(long)]
    pub input: PathBuf,
    /// Pyramid depth, including the input itself
    #[arg(long)]
    pub levels: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn run_coarsen(args: CoarsenArgs) -> Result<()> {
    let started = Instant::now();
    fs::create_dir_all(&args.out_dir)?;
    let mut config = BTreeMap::new();
    config.insert("input".into(), args.input.display().to_string());
    config.insert("levels".into(), args.levels.to_string());

    match pnm::read_pnm(&args.input)? {
        PnmImage::Binary(img) => {
            let pyramid = BinaryPyramid::build(&img, args.levels)?;
            for k in 0..pyramid.levels() {
                pnm::write_pbm(&args.out_dir.join(format!("level_{k}.pbm")), pyramid.level(k))?;
            }
        }
        PnmImage::Gray(img) => {
            let pyramid = GrayPyramid::build(&img, args.levels)?;
            for k in 0..pyramid.levels() {
                pnm::write_pgm(&args.out_dir.join(format!("level_{k}.pgm")), pyramid.level(k))?;
            }
        }
    }
    finish_metadata(&args.out_dir, 0, None, config, started)
}

// ------------------------------------------------------------------ synth

#[derive(Clone, Copy, ValueEnum)]
pub enum KindArg {
    Contours,
    Blobs,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PresetArg {
    /// mu0 150, mu1 100, sigma 40
    Contour,
    /// mu0 150, mu1 100, sigma 100
    Leaf,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub count: usize,
    /// Side length of the square images
    #[arg(long)]
    pub size: usize,
    /// Noise preset; individual --mu0/--mu1/--sigma-y flags override it
    #[arg(long, value_enum, default_value_t = PresetArg::Contour)]
    pub preset: PresetArg,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub sigma_y: Option<f64>,
    #[arg(long, default_value_t = 256)]
    pub gray_levels: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Observation RNG streams live far above the mask streams.
const OBS_STREAM_BASE: u64 = 1 << 32;

fn run_synth(args: SynthArgs) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let base = match args.preset {
        PresetArg::Contour => NoiseParams::contour(),
        PresetArg::Leaf => NoiseParams::leaf(),
    };
    let params = NoiseParams {
        mu0: args.mu0.unwrap_or(base.mu0),
        mu1: args.mu1.unwrap_or(base.mu1),
        sigma: args.sigma_y.unwrap_or(base.sigma),
    };
    let kind = match args.kind {
        KindArg::Contours => ShapeKind::Contours,
        KindArg::Blobs => ShapeKind::Blobs,
    };

    fs::create_dir_all(&args.out_dir)?;
    let masks = synth_shapes(kind, args.count, args.size, seed)?;
    let mut rows = Vec::with_capacity(masks.len());
    for (i, mask) in masks.iter().enumerate() {
        let mut obs_rng = rng::stream(seed, OBS_STREAM_BASE + i as u64);
        let obs = synth_observe(mask, params, args.gray_levels, &mut obs_rng)?;
        let name = format!("img{i:03}");
        let mask_file = format!("{name}_mask.pbm");
        let obs_file = format!("{name}_obs.pgm");
        pnm::write_pbm(&args.out_dir.join(&mask_file), mask)?;
        pnm::write_pgm(&args.out_dir.join(&obs_file), &obs)?;
        rows.push((PathBuf::from(mask_file), PathBuf::from(obs_file), name));
    }
    manifest::write_manifest(&args.out_dir.join("manifest.txt"), &rows)?;

    let mut config = BTreeMap::new();
    config.insert("kind".into(), format!("{:?}", kind));
    config.insert("count".into(), args.count.to_string());
    config.insert("size".into(), args.size.to_string());
    config.insert("mu0".into(), params.mu0.to_string());
    config.insert("mu1".into(), params.mu1.to_string());
    config.insert("sigma_y".into(), params.sigma.to_string());
    config.insert("gray_levels".into(), args.gray_levels.to_string());
    config.insert("seed".into(), seed.to_string());
    finish_metadata(&args.out_dir, seed, None, config, started)
}

// ------------------------------------------------------------------ train

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// 102 symmetry-tied pattern costs per scale
    Invariant,
    /// 512 untied pattern costs per scale
    Raw,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pyramid scales in the model (the two-stage recipe trains 1 then 4)
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub band_height: usize,
    /// Proposals per band visit
    #[arg(long, default_value_t = 8)]
    pub proposals: usize,
    /// Band stride; default is ceil(band_height / 2)
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Per-example learning rate
    #[arg(long, default_value_t = 1e-4)]
    pub eta: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub sweeps_per_step: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Single-scale proposal model (multiscale training only); defaults to
    /// the level-0 slice of the model being trained
    #[arg(long)]
    pub proposal_model: Option<PathBuf>,
    /// Warm-start: copy this model's scales into the zero-initialized
    /// parameter vector (it must have at most --levels scales)
    #[arg(long)]
    pub init_model: Option<PathBuf>,
    /// Exact-gradient descent by enumeration (tiny images only)
    #[arg(long)]
    pub exact: bool,
    /// Examples per step (default: all)
    #[arg(long)]
    pub minibatch: Option<usize>,
    /// Average the trailing fraction of iterates into the final model
    #[arg(long)]
    pub polyak_tail: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Invariant)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 256)]
    pub gray_levels: usize,
    /// Save a checkpoint every N steps (0 disables)
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Continue from a checkpoint produced by --checkpoint-every
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn run_train(args: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let invariant = args.mode == ModeArg::Invariant;
    let entries = manifest::load_manifest(&args.manifest)?;
    let data: Vec<Example> = entries
        .into_iter()
        .map(|e| Example::new(e.mask, e.observation).map_err(Into::into))
        .collect::<Result<_>>()?;

    if args.levels == 0 {
        return Err(usage("--levels must be at least 1"));
    }
    if args.exact && args.proposal_model.is_some() {
        return Err(usage("--exact does not sample, so --proposal-model is meaningless"));
    }
    if args.levels == 1 && args.proposal_model.is_some() {
        return Err(usage("single-scale training needs no --proposal-model"));
    }

    let proposal = match &args.proposal_model {
        None => None,
        Some(path) => {
            let loaded = modelfile::load_model(path)?;
            if loaded.model.invariant() != invariant {
                return Err(usage(format!(
                    "proposal model {} is {} mode but training runs in {} mode",
                    path.display(),
                    if loaded.model.invariant() { "invariant" } else { "raw" },
                    if invariant { "invariant" } else { "raw" },
                )));
            }
            Some(loaded.model)
        }
    };

    if args.resume.is_some() && args.init_model.is_some() {
        return Err(usage("--resume and --init-model are mutually exclusive"));
    }
    let (model0, start_step) = match &args.resume {
        None => {
            let mut model0 = FoPModel::zeros(args.levels, args.gray_levels, invariant);
            if let Some(path) = &args.init_model {
                let init = modelfile::load_model(path)?.model;
                if init.invariant() != invariant
                    || init.gray_levels() != args.gray_levels
                    || init.levels() > args.levels
                {
                    return Err(usage(format!(
                        "--init-model {} does not embed into the requested layout",
                        path.display()
                    )));
                }
                let layout = model0.layout();
                let mut w = model0.to_weights();
                let init_w = init.to_weights();
                let block = layout.block_len();
                w[..init.levels() * block].copy_from_slice(&init_w);
                model0 = FoPModel::from_weights(layout, &w)?;
            }
            (model0, 0)
        }
        Some(path) => {
            let ck = modelfile::load_model(path)?;
            let step = ck
                .step
                .ok_or_else(|| usage(format!("{} has no step header; not a checkpoint", path.display())))?;
            if ck.model.levels() != args.levels
                || ck.model.gray_levels() != args.gray_levels
                || ck.model.invariant() != invariant
            {
                return Err(usage(format!(
                    "checkpoint {} disagrees with the requested layout",
                    path.display()
                )));
            }
            (ck.model, step as usize)
        }
    };

    let schedule = Schedule::new(args.band_height, args.proposals)
        .with_stride(args.stride.unwrap_or(args.band_height.div_ceil(2)));
    let cfg = TrainConfig {
        lambda: args.lambda,
        eta: args.eta,
        steps: args.steps,
        sweeps_per_step: args.sweeps_per_step,
        schedule,
        seed,
        minibatch: args.minibatch,
        decay_at: 0.75,
        polyak_tail: args.polyak_tail,
    };

    let outcome = with_jobs(args.jobs, || {
        if args.exact {
            driver::train_exact(model0, &data, cfg)
        } else {
            driver::train_parallel(
                model0,
                &data,
                proposal,
                cfg,
                start_step,
                (args.checkpoint_every > 0).then_some(Checkpoints {
                    base: &args.out,
                    every: args.checkpoint_every,
                    lambda: args.lambda,
                }),
            )
        }
    })?;

    modelfile::save_model(&args.out, &outcome.model, Some(args.lambda), None)?;
    let trace_path = args.out.with_extension("trace.csv");
    report::write_train_trace(&trace_path, &outcome.trace)?;

    let mut config = BTreeMap::new();
    config.insert("manifest".into(), args.manifest.display().to_string());
    config.insert("levels".into(), args.levels.to_string());
    config.insert("mode".into(), if invariant { "invariant" } else { "raw" }.into());
    config.insert("gray_levels".into(), args.gray_levels.to_string());
    config.insert("band_height".into(), schedule.height.to_string());
    config.insert("proposals".into(), schedule.proposals.to_string());
    config.insert("stride".into(), schedule.stride.to_string());
    config.insert("lambda".into(), args.lambda.to_string());
    config.insert("eta".into(), args.eta.to_string());
    config.insert("steps".into(), args.steps.to_string());
    config.insert("sweeps_per_step".into(), args.sweeps_per_step.to_string());
    config.insert("seed".into(), seed.to_string());
    config.insert("exact".into(), args.exact.to_string());
    config.insert(
        "proposal_model".into(),
        args.proposal_model
            .as_ref()
            .map_or("level-0 slice".into(), |p| p.display().to_string()),
    );
    config.insert(
        "init_model".into(),
        args.init_model
            .as_ref()
            .map_or("zeros".into(), |p| p.display().to_string()),
    );
    let meta = RunMetadata {
        command_line: command_line(),
        seed,
        rng_algorithm: rng::RNG_ALGORITHM,
        model_hash: Some(meta::file_sha256(&args.out)?),
        config_digest: meta::config_digest(&config),
        wall_ms: started.elapsed().as_millis(),
        config,
    };
    let meta_path = args.out.with_extension("run.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(())
}

// ------------------------------------------------------------------ infer

#[derive(Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset manifest (masks are ignored during inference)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Single observation image instead of a manifest
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub burn_in: usize,
    /// Post-burn-in sweeps
    #[arg(long, default_value_t = 80)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 3)]
    pub band_height: usize,
    #[arg(long, default_value_t = 8)]
    pub proposals: usize,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub proposal_model: Option<PathBuf>,
    /// Also write each posterior as a CSV grid
    #[arg(long)]
    pub csv: bool,
    /// Cross-check marginals against exhaustive enumeration (tiny images)
    #[arg(long, hide = true)]
    pub grid_test: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn run_infer(args: InferArgs) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let loaded = modelfile::load_model(&args.model)?;
    let model = loaded.model;
    let proposal = args
        .proposal_model
        .as_ref()
        .map(|p| modelfile::load_model(p).map(|l| l.model))
        .transpose()?;
    if let Some(q) = &proposal {
        if q.invariant() != model.invariant() {
            return Err(usage("proposal and model must share the tying mode"));
        }
    }

    let images: Vec<(String, GrayImage)> = match (&args.manifest, &args.input) {
        (Some(_), Some(_)) => return Err(usage("--manifest and --input are mutually exclusive")),
        (None, None) => return Err(usage("one of --manifest or --input is required")),
        (Some(path), None) => manifest::load_manifest(path)?
            .into_iter()
            .map(|e| (e.name, e.observation))
            .collect(),
        (None, Some(path)) => {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            vec![(name, pnm::read_pgm(path)?)]
        }
    };

    let cfg = InferConfig {
        burn_in: args.burn_in,
        samples: args.sweeps,
        thin: args.thin,
        schedule: Schedule::new(args.band_height, args.proposals)
            .with_stride(args.stride.unwrap_or(args.band_height.div_ceil(2))),
    };

    fs::create_dir_all(&args.out_dir)?;
    let items = with_jobs(args.jobs, || {
        driver::infer_parallel(&model, proposal.as_ref(), &images, &cfg, seed)
    })?;

    let codec = PatternCodec::new();
    for (item, (_, y)) in items.iter().zip(&images) {
        pnm::write_pgm(
            &args.out_dir.join(format!("{}_posterior.pgm", item.name)),
            &posterior::to_gray(&item.map),
        )?;
        report::write_sweep_trace(
            &args.out_dir.join(format!("{}_trace.csv", item.name)),
            &item.trace,
        )?;
        if args.csv {
            report::write_posterior_csv(
                &args.out_dir.join(format!("{}_posterior.csv", item.name)),
                &item.map,
            )?;
        }
        if args.grid_test {
            let exact = oracle::enumerate(&model, &codec, y.rows(), y.cols(), Some(y))?;
            let mut max_err = 0.0f64;
            for (p, e) in item.map.probs().iter().zip(&exact.marginals) {
                max_err = max_err.max((p - e).abs());
            }
            println!("grid-test {}: max abs err {max_err:.6}", item.name);
            if max_err > 0.02 {
                return Err(NumericError(format!(
                    "{}: marginals deviate from enumeration by {max_err:.6} (limit 0.02)",
                    item.name
                ))
                .into());
            }
        }
    }

    let mut config = BTreeMap::new();
    config.insert("model".into(), args.model.display().to_string());
    config.insert("burn_in".into(), args.burn_in.to_string());
    config.insert("sweeps".into(), args.sweeps.to_string());
    config.insert("thin".into(), args.thin.to_string());
    config.insert("band_height".into(), cfg.schedule.height.to_string());
    config.insert("proposals".into(), cfg.schedule.proposals.to_string());
    config.insert("stride".into(), cfg.schedule.stride.to_string());
    config.insert("seed".into(), seed.to_string());
    finish_metadata(
        &args.out_dir,
        seed,
        Some(meta::file_sha256(&args.model)?),
        config,
        started,
    )
}

// ------------------------------------------------------------------- eval

#[derive(Args)]
pub struct EvalArgs {
    /// Directory of `<name>_posterior.pgm` maps; repeat to compare models
    #[arg(long, required = true)]
    pub posterior_dir: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output CSV; with several posterior dirs, one CSV per dir is written
    /// as `<stem>_<dirname>.csv`
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 101)]
    pub thresholds: usize,
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let started = Instant::now();
    let entries = manifest::load_manifest(&args.manifest)?;
    let thresholds = fop_core::eval::even_thresholds(args.thresholds);
    let truths: Vec<_> = entries.iter().map(|e| e.mask.clone()).collect();

    let multi = args.posterior_dir.len() > 1;
    for dir in &args.posterior_dir {
        let preds = load_posteriors(dir, &entries)?;
        let curve = fop_core::eval::pr_curve(&preds, &truths, &thresholds)?;
        let out = if multi {
            let stem = args.out.file_stem().unwrap_or_default().to_string_lossy();
            let dirname = dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dir".into());
            args.out.with_file_name(format!("{stem}_{dirname}.csv"))
        } else {
            args.out.clone()
        };
        report::write_pr_csv(&out, &curve)?;
        println!("AP {} = {:.6}", dir.display(), curve.average_precision);
    }

    let mut config = BTreeMap::new();
    config.insert("manifest".into(), args.manifest.display().to_string());
    config.insert("thresholds".into(), args.thresholds.to_string());
    config.insert(
        "posterior_dirs".into(),
        args.posterior_dir
            .iter()
            .map(|d| d.display().to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    let meta = RunMetadata {
        command_line: command_line(),
        seed: 0,
        rng_algorithm: rng::RNG_ALGORITHM,
        model_hash: None,
        config_digest: meta::config_digest(&config),
        wall_ms: started.elapsed().as_millis(),
        config,
    };
    let meta_path = args.out.with_extension("run.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(())
}

fn load_posteriors(dir: &Path, entries: &[DatasetEntry]) -> Result<Vec<fop_core::eval::PosteriorMap>> {
    entries
        .iter()
        .map(|e| {
            let path = dir.join(format!("{}_posterior.pgm", e.name));
            posterior::from_gray(&pnm::read_pgm(&path)?)
        })
        .collect()
}

// ----------------------------------------------------------- sample-prior

#[derive(Args)]
pub struct SamplePriorArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 50)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 3)]
    pub band_height: usize,
    #[arg(long, default_value_t = 8)]
    pub proposals: usize,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output PBM
    #[arg(long)]
    pub out: PathBuf,
}

fn run_sample_prior(args: SamplePriorArgs) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let loaded = modelfile::load_model(&args.model)?;
    let schedule = Schedule::new(args.band_height, args.proposals)
        .with_stride(args.stride.unwrap_or(args.band_height.div_ceil(2)));
    let codec = PatternCodec::new();
    let img = sample_prior(
        &loaded.model,
        &codec,
        args.rows,
        args.cols,
        args.sweeps,
        &schedule,
        rng::stream(seed, 0),
    )?;
    pnm::write_pbm(&args.out, &img)?;

    let mut config = BTreeMap::new();
    config.insert("model".into(), args.model.display().to_string());
    config.insert("rows".into(), args.rows.to_string());
    config.insert("cols".into(), args.cols.to_string());
    config.insert("sweeps".into(), args.sweeps.to_string());
    config.insert("band_height".into(), schedule.height.to_string());
    config.insert("proposals".into(), schedule.proposals.to_string());
    config.insert("stride".into(), schedule.stride.to_string());
    config.insert("seed".into(), seed.to_string());
    let meta = RunMetadata {
        command_line: command_line(),
        seed,
        rng_algorithm: rng::RNG_ALGORITHM,
        model_hash: Some(meta::file_sha256(&args.model)?),
        config_digest: meta::config_digest(&config),
        wall_ms: started.elapsed().as_millis(),
        config,
    };
    let meta_path = args.out.with_extension("run.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    Ok(())
}

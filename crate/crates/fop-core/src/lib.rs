//! Multiscale field-of-patterns (FoP) models for binary images.
//!
//! A FoP model is a conditional random field over a hidden binary image `x`
//! given a grayscale observation `y`.  The energy sums a cost for every 3x3
//! binary pattern observed at every level of an OR-coarsened pyramid of `x`,
//! plus per-pixel observation costs driven by an average-coarsened pyramid
//! of `y`.  Because pattern costs depend on the scale at which a pattern
//! appears, a small parameter vector captures non-local image statistics.
//!
//! The crate provides:
//!
//! - [`image`] / [`pyramid`]: binary and grayscale grids, OR / average
//!   coarsening.
//! - [`pattern`]: the 9-bit window codec and its 102 dihedral symmetry
//!   classes.
//! - [`model`]: parameter tables, energy evaluation, feature counts and the
//!   log-linear identity `E(x,y) = w . phi(x,y)`.
//! - [`band`]: exact sampling of a whole horizontal or vertical band from a
//!   single-scale model via forward-backward dynamic programming over
//!   column states.
//! - [`chain`]: Gray-code block Gibbs and the Metropolis-Hastings band
//!   sampler for multiscale models, with incremental pyramid maintenance.
//! - [`learn`]: maximum-likelihood training with persistent chains, plus an
//!   exact-gradient mode for enumerable instances.
//! - [`oracle`]: brute-force partition function, marginals and conditionals
//!   on small grids, used to validate the samplers.
//! - [`synth`] / [`eval`] / [`infer`]: synthetic data generation, posterior
//!   marginal estimation and precision-recall scoring.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command-line
//! frontend live in the companion `fop-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod band;
pub mod chain;
mod edit;
mod error;
pub mod eval;
pub mod image;
pub mod infer;
pub mod learn;
pub mod model;
mod num;
pub mod oracle;
pub mod pattern;
pub mod pyramid;
pub mod rng;
pub mod synth;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;

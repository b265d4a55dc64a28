//! Asynchronous RL training at desk scale: a single-controller executor
//! pipeline with sharded weight synchronization, clipped importance-weighted
//! policy optimization on a tabular autoregressive policy, and a
//! memory-constrained step-time planner.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`cost_model`]: cluster constants, per-GPU memory footprints, batch
//!   processing-time curves, and the synchronous/asynchronous step-time
//!   formulas.
//! - [`planner`]: constrained step-time minimization for both execution
//!   modes, decoupled optima, and the speedup report with its inequality
//!   chain.
//! - [`policy`]: a tiny bounded-context softmax policy with exact
//!   log-probabilities, gradients, per-prefix KL, and resumable generation.
//! - [`rl_algo`]: clipped importance-weighted policy gradients, the
//!   double-sided clipping comparator, group-mean baselines, exact
//!   enumeration oracles, and parameter updates.
//! - [`executors`]: the executor contract plus generator, trainer, and
//!   reward-calculator implementations with checkpointing.
//! - [`channels`]: broadcast/scatter/gather data channels, the sharded
//!   direct-transfer weights channel, and transfer-time models.
//! - [`controller`]: the single-controller event loop in synchronous,
//!   asynchronous, and timing modes.
//! - [`harness`]: experiment configs, file formats, and the three bundled
//!   experiments (plan sweep, timing, train compare).

pub mod channels;
pub mod controller;
pub mod cost_model;
pub mod executors;
pub mod harness;
pub mod planner;
pub mod policy;
pub mod rl_algo;
pub mod util;

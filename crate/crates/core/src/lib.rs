//! Sequential multi-hypothesis testing on information cascades modeled as
//! unions of Markov chains over a propagation tree.
//!
//! The crate is `no_std` with `alloc`; file formats, parallel Monte Carlo
//! and the command line live in the companion harness crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cascade;
pub mod error;
pub mod fit;
pub mod gnn;
pub mod kernels;
pub mod math;
pub mod metrics;
pub mod msprt;

pub use cascade::{
    sample_trace, sample_trace_with, trial_seed, EdgeFeatures, FeatureModel, FrontierPolicy, InformationTrace, Parent,
    TraceEvent, TraceSampler,
};
pub use error::{Error, Result};
pub use fit::{fit_offline, pairing_theta, ClassifierSpec, EdgeClassifier, FitResult, FitSpec, PriorMode};
pub use gnn::{
    estimate_xi, run_gnn_sdr, run_gnn_with, GinWeights, NodeScorer, Scorer, TabularScorer, XiConfig, XiEstimate,
};
pub use kernels::{tail_constants, DivergenceReport, HypothesisModel, ModelSet, TailConstants};
pub use msprt::{
    run_baseline_naive, run_baseline_single_chain, run_sdr, PosteriorState, Rule, SdrConfig, SdrOutcome,
    SequentialTest, StopTime,
};

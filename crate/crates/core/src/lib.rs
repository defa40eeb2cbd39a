//! Benchmark condensation by inter-model disagreement.
//!
//! A large evaluation set is reduced to a few anchor samples on which a pool
//! of source models disagrees the most; a new model's full-benchmark accuracy
//! is then predicted from its outputs on those anchors.
//!
//! Modules follow the pipeline: [`store`] (manifests and tensors),
//! [`scoring`] (per-sample disagreement), [`selection`] (anchor subsets),
//! [`signatures`] (model signatures and PCA), [`predictors`], and [`eval`]
//! (splits, metrics, sweeps). [`synth`] generates populations with known
//! ground truth.

pub mod cli;
pub mod error;
pub mod eval;
pub mod par;
pub mod predictors;
pub mod provenance;
pub mod scoring;
pub mod selection;
pub mod signatures;
pub mod store;
pub mod synth;

pub use error::{Error, Result};

//! Federated training of sparse autoencoders over multivariate time series.
//!
//! A simulated parameter server fuses per-client autoencoder models with an
//! L1-regularized consensus rule solved by ADMM, producing exactly sparse
//! global models. A masked fine-tuning stage then recovers accuracy while
//! keeping the pruned support frozen. The fused models are used for
//! time-series anomaly detection and missing-value imputation.
//!
//! The crate is `no_std` (with `alloc`); all IO, configuration and CLI
//! plumbing lives in the companion `fedcomp-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod fusion;
pub mod model;
pub mod orchestrator;
pub mod param;
pub mod series;
pub mod synth;

pub use error::Error;
pub use param::{LayerSpec, ParameterVector, SparsityMask};

pub type Result<T> = core::result::Result<T, Error>;

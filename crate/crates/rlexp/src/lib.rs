//! rlexp: run seed-controlled reinforcement learning experiments on small
//! benchmark tasks and analyze the results with interval statistics that
//! respect how few runs RL studies usually have.
//!
//! The crate is organized around a strict reproducibility contract: every
//! random draw in a run comes from a stream derived from
//! `(base_seed, run_index, label)`, so any record file can be regenerated
//! bit for bit from its own header, at any parallelism level.

pub mod agents;
pub mod cli;
pub mod compare;
pub mod config;
pub mod envs;
pub mod error;
pub mod harness;
pub mod hyperstudy;
pub mod metrics;
pub mod seed;
pub mod stats;

pub use agents::{Agent, Algorithm, CutoffMode, HyperConfig};
pub use error::{Error, Result};
pub use harness::{EvalMode, ExperimentSpec, PairingMode, RunRecord, SeedPlan};
pub use seed::{derive_stream, fold_seed, RngStream, StreamLabel};

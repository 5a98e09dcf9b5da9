//! Influential billboard slot selection.
//!
//! Given trajectory and billboard databases, pick `k` (billboard, time window)
//! slots maximizing the expected number of influenced users. The pipeline
//! drops zero-influence slots, shrinks the ground set with a pruned
//! submodularity graph, then runs incremental greedy on what is left.
//!
//! * [`catalog`]: CSV ingestion, slot ground set, sparse exposure matrix.
//! * [`influence`]: influence function and incremental marginal gains.
//! * [`psg`]: preprocessing and graph-based pruning.
//! * [`select`]: greedy (plain and lazy) and baseline selectors.
//! * [`harness`]: end-to-end runs, sweeps, synthetic data, brute-force oracle.

pub mod catalog;
pub mod error;
pub mod harness;
pub mod influence;
pub mod psg;
pub mod rng;
pub mod select;

pub use catalog::{ExposureMatrix, SlotCatalog, SlotId, Window};
pub use error::{Error, Result};
pub use influence::InfluenceEvaluator;
pub use select::Selection;

//! Online ensemble regression for drifting data streams.
//!
//! The crate bundles four pieces that together form a desk-scale streaming
//! regression lab:
//!
//! * [`elm`] — extreme learning machine primitives: a fixed random hidden
//!   layer, batch least-squares training, and the recursive per-sample
//!   update (OS-ELM).
//! * [`memory`] — the two stream memories (FIFO sliding window and uniform
//!   reservoir) plus distance-based training-set selection.
//! * [`ensemble`] — the dynamic online ensemble (DOER family): weighted
//!   voting, error-driven weight adaptation, spawn/prune lifecycle, and the
//!   long-term-memory variant.
//! * [`datagen`] / [`harness`] — a synthetic drifting-plant generator and a
//!   prequential (predict-then-train) evaluation harness with MAPE,
//!   change-window, and recovery analysis.

pub mod datagen;
pub mod elm;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod memory;
pub mod scaling;
pub mod types;

pub use elm::{Activation, ElmState, HiddenLayer, NodeSelection};
pub use ensemble::{Ensemble, EnsembleConfig, MemoryMode, StepTrace};
pub use error::{Error, Result};
pub use harness::{AlgorithmKind, AlgorithmSpec, EvalReport};
pub use memory::{DistanceWeights, Reservoir, SlidingWindow};
pub use scaling::Standardizer;
pub use types::Sample;

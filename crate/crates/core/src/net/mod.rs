//! The local map network and its differentiation engine.
//!
//! A frozen Fourier feature layer feeds two small residual MLP heads: a
//! Tanhshrink-activated signed-distance head and a tanh-activated confidence
//! head. The engine provides exact input gradients of the distance head by a
//! forward-mode dual pass of width D, and parameter gradients of losses that
//! contain those input gradients by a reverse pass over the dual computation.
//! Training runs in f32; tests instantiate the same code at f64 against
//! finite-difference oracles.

mod activation;
mod checkpoint;
mod engine;
mod loss;
mod optimizer;
mod params;
mod scalar;

pub use checkpoint::{load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file};
pub use engine::DualEval;
pub use loss::{huber, huber_deriv, LossBreakdown, LossWeights};
pub use optimizer::{AmsGrad, OptimizerConfig};
pub use params::{HeadParams, HeadTensors, NetConfig, NetGrads, NetParams};
pub use scalar::Scalar;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("non-finite value encountered in {0}; training diverged")]
    NonFinite(&'static str),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

//! Wavelet-enhanced multi-scale mixer for long-term time-series forecasting.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] : tensors, affine layers, activations, Adam, gradient checks
//! * [`signal`] : periodised DWT, linear resampling, FFT amplitude spectra
//! * [`model`] : the network and its explicit backward pass
//! * [`data`] : CSV ingestion, scaling, chronological splits and windowing
//! * [`train`] : losses, metrics, the training loop and naive baselines

pub mod data;
pub mod error;
pub mod model;
pub mod numerics;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
pub use model::{Ablation, Model, ModelConfig, ModelParams};
pub use train::{ForecastReport, TrainConfig};

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

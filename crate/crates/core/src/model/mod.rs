//! The forecasting network: instance normalisation, temporal and wavelet
//! streams, frequency routing, gated cross-attention fusion, cross-scale
//! mixing and the prediction head.

pub mod checkpoint;
mod config;
mod network;
mod params;
mod revin;
mod stages;

pub use config::{Ablation, ModelConfig};
pub use network::{multiscale_pool, ForwardCache, Model};
pub use params::{FusionLayer, ModelParams};
pub use revin::{revin_denormalize, revin_normalize, RevinStats, REVIN_EPS};
pub use stages::{
    aggregate_predict, cross_attend, cross_scale_mix, embed_temporal, embed_wavelet, forward,
    fusion_stack, gated_fuse, route_frequencies, weight_bands,
};

//! Single-window entry points for each pipeline stage.
//!
//! These share kernels with the batched path in `network`, so testing them
//! exercises the same code the trainer runs.

use super::config::ModelConfig;
use super::network::{attention_forward, fuse_forward, Model};
use super::params::{FusionLayer, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::{gelu_scalar, softmax_in_place, Tensor};
use crate::signal::{interp_linear, rfft_amplitude, wavedec, WaveletBasis};

/// Projects each pooled series with its scale-specific layer.
pub fn embed_temporal(h_list: &[Vec<f64>], params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    if h_list.len() != params.temporal_embeds.len() {
        return Err(Error::dim(
            "embed_temporal scales",
            &[params.temporal_embeds.len()],
            &[h_list.len()],
        ));
    }
    h_list
        .iter()
        .zip(&params.temporal_embeds)
        .map(|(h, layer)| {
            if h.len() != layer.in_dim() {
                return Err(Error::dim("embed_temporal", &[layer.in_dim()], &[h.len()]));
            }
            Ok(layer.forward_rows(h, 1))
        })
        .collect()
}

/// `wavedec → interpolate to L → per-band projection`, stacked `[N_bands × D]`.
pub fn embed_wavelet(
    x_norm: &[f64],
    basis: &WaveletBasis,
    levels: usize,
    params: &ModelParams,
) -> Result<Tensor> {
    let pyr = wavedec(x_norm, basis, levels)?;
    if pyr.num_bands() != params.band_embeds.len() {
        return Err(Error::dim(
            "embed_wavelet bands",
            &[params.band_embeds.len()],
            &[pyr.num_bands()],
        ));
    }
    let d = params.band_embeds[0].out_dim();
    let mut out = Vec::with_capacity(pyr.num_bands() * d);
    for (coeffs, layer) in pyr.coeffs.iter().zip(&params.band_embeds) {
        let up = interp_linear(coeffs, x_norm.len())?;
        if up.len() != layer.in_dim() {
            return Err(Error::dim("embed_wavelet", &[layer.in_dim()], &[up.len()]));
        }
        out.extend(layer.forward_rows(&up, 1));
    }
    Tensor::from_vec(&[pyr.num_bands(), d], out)
}

/// Softmax band weights from the MLP over the amplitude spectrum.
pub fn route_frequencies(x_norm: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let amps = rfft_amplitude(x_norm).amps;
    if amps.len() != params.router_in.in_dim() {
        return Err(Error::dim("route_frequencies", &[params.router_in.in_dim()], &[amps.len()]));
    }
    let hidden: Vec<f64> = params
        .router_in
        .forward_rows(&amps, 1)
        .into_iter()
        .map(gelu_scalar)
        .collect();
    let mut w = params.router_out.forward_rows(&hidden, 1);
    softmax_in_place(&mut w);
    Ok(w)
}

/// Scales row `j` of `h_w` by `w[j]`.
pub fn weight_bands(h_w: &Tensor, w: &[f64]) -> Result<Tensor> {
    let rows = h_w.shape().first().copied().unwrap_or(0);
    if h_w.shape().len() != 2 || rows != w.len() {
        return Err(Error::dim("weight_bands", h_w.shape(), &[w.len()]));
    }
    let d = h_w.shape()[1];
    let mut out = h_w.data().to_vec();
    for (row, wj) in out.chunks_exact_mut(d).zip(w) {
        row.iter_mut().for_each(|v| *v *= wj);
    }
    Tensor::from_vec(h_w.shape(), out)
}

fn check_bands(z: &[f64], h: &Tensor, layer: &FusionLayer, heads: usize) -> Result<usize> {
    let d = layer.q_proj.in_dim();
    if heads == 0 || d % heads != 0 {
        return Err(Error::Config(format!("d_model {d} not divisible by {heads} heads")));
    }
    if z.len() != d || h.shape().len() != 2 || h.shape()[1] != d || h.shape()[0] == 0 {
        return Err(Error::dim("cross_attend", &[d], &[z.len(), h.len()]));
    }
    Ok(h.shape()[0])
}

/// Context vector from attending `z` (query) over the weighted bands.
pub fn cross_attend(
    z: &[f64],
    h_weighted: &Tensor,
    layer: &FusionLayer,
    heads: usize,
) -> Result<Vec<f64>> {
    let nb = check_bands(z, h_weighted, layer, heads)?;
    let q = layer.q_proj.forward_rows(z, 1);
    let k = layer.k_proj.forward_rows(h_weighted.data(), nb);
    let v = layer.v_proj.forward_rows(h_weighted.data(), nb);
    let (ctx, _) = attention_forward(&q, &k, &v, 1, nb, heads);
    Ok(layer.o_proj.forward_rows(&ctx, 1))
}

/// Attention, residual layer norm, and sigmoid-gated blend of raw and
/// enhanced features. With `gating == false` the enhanced vector is returned.
pub fn gated_fuse(
    z_t: &[f64],
    h_weighted: &Tensor,
    layer: &FusionLayer,
    heads: usize,
    gating: bool,
) -> Result<Vec<f64>> {
    let nb = check_bands(z_t, h_weighted, layer, heads)?;
    let k = layer.k_proj.forward_rows(h_weighted.data(), nb);
    let v = layer.v_proj.forward_rows(h_weighted.data(), nb);
    Ok(fuse_forward(layer, z_t.to_vec(), &k, &v, 1, nb, heads, gating).0)
}

/// Applies every fusion layer in order to each scale; returns `[S × D]`.
pub fn fusion_stack(
    z_list: &[Vec<f64>],
    h_weighted: &Tensor,
    params: &ModelParams,
    heads: usize,
    gating: bool,
) -> Result<Tensor> {
    if params.fusion.is_empty() {
        return Err(Error::Config("fusion stack needs at least one layer".into()));
    }
    let d = params.fusion[0].q_proj.in_dim();
    let mut out = Vec::with_capacity(z_list.len() * d);
    for z in z_list {
        let mut cur = z.clone();
        for layer in &params.fusion {
            cur = gated_fuse(&cur, h_weighted, layer, heads, gating)?;
        }
        out.extend(cur);
    }
    Tensor::from_vec(&[z_list.len(), d], out)
}

/// Residual MLP along the scale axis, applied per feature channel.
pub fn cross_scale_mix(z_fused: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let s = params.mixer_in.in_dim();
    if z_fused.shape().len() != 2 || z_fused.shape()[0] != s {
        return Err(Error::dim("cross_scale_mix", &[s, z_fused.last_dim()], z_fused.shape()));
    }
    let d = z_fused.shape()[1];
    let zf = z_fused.data();
    let mut transposed = vec![0.0; d * s];
    for si in 0..s {
        for c in 0..d {
            transposed[c * s + si] = zf[si * d + c];
        }
    }
    let hidden: Vec<f64> = params
        .mixer_in
        .forward_rows(&transposed, d)
        .into_iter()
        .map(gelu_scalar)
        .collect();
    let mixed = params.mixer_out.forward_rows(&hidden, d);
    let mut out = zf.to_vec();
    for si in 0..s {
        for c in 0..d {
            out[si * d + c] += mixed[c * s + si];
        }
    }
    Tensor::from_vec(z_fused.shape(), out)
}

/// Mean over scales followed by the two-layer prediction head.
pub fn aggregate_predict(z_mixed: &Tensor, params: &ModelParams) -> Result<Vec<f64>> {
    let d = params.head_in.in_dim();
    if z_mixed.shape().len() != 2 || z_mixed.shape()[1] != d || z_mixed.shape()[0] == 0 {
        return Err(Error::dim("aggregate_predict", &[0, d], z_mixed.shape()));
    }
    let s = z_mixed.shape()[0];
    let mut z_final = vec![0.0; d];
    for row in z_mixed.data().chunks_exact(d) {
        for (a, v) in z_final.iter_mut().zip(row) {
            *a += v;
        }
    }
    z_final.iter_mut().for_each(|v| *v /= s as f64);
    let hidden: Vec<f64> = params
        .head_in
        .forward_rows(&z_final, 1)
        .into_iter()
        .map(gelu_scalar)
        .collect();
    Ok(params.head_out.forward_rows(&hidden, 1))
}

/// Full forecast for one lookback window.
pub fn forward(x: &[f64], config: &ModelConfig, params: &ModelParams) -> Result<Vec<f64>> {
    Model::with_params(config.clone(), params.clone())?.forward(x)
}

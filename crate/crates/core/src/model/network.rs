//! Batched forward pass with an explicit, hand-composed backward pass.
//!
//! Every intermediate is stored row-major with the batch index outermost.
//! Wavelet-band tensors are laid out `B × N_bands × D`.

use super::config::ModelConfig;
use super::params::{FusionLayer, ModelParams};
use super::revin::{revin_normalize, RevinStats};
use crate::error::{Error, Result};
use crate::numerics::{
    dot, gelu_grad, gelu_scalar, layer_norm_backward_rows, layer_norm_rows, sigmoid_scalar,
    softmax_backward_in_place, softmax_in_place, LayerNormCache,
};
use crate::signal::{interp_linear, make_basis, rfft_amplitude, wavedec, WaveletBasis};

/// A configured network: hyperparameters, weights and the wavelet filter bank.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    basis: WaveletBasis,
}

/// Parameter-free per-window inputs derived from the raw lookback.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub x_norm: Vec<f64>,
    pub stats: Vec<RevinStats>,
    /// Per scale, `B × L/2^s`.
    pub pooled: Vec<Vec<f64>>,
    /// Per band, `B × L` interpolated coefficients.
    pub bands: Vec<Vec<f64>>,
    /// `B × (L/2+1)` amplitude spectra.
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ScaleStep {
    pub zin: Vec<f64>,
    pub q: Vec<f64>,
    /// `B × heads × N_bands`
    pub alpha: Vec<f64>,
    pub ctx: Vec<f64>,
    pub ln: LayerNormCache,
    pub zenh: Vec<f64>,
    pub gate_in: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerStep {
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    pub scales: Vec<ScaleStep>,
}

/// Everything the backward pass needs from one batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) batch: usize,
    pub(crate) prep: Prepared,
    pub(crate) z_t: Vec<Vec<f64>>,
    pub(crate) h_w: Vec<f64>,
    pub(crate) router_u: Vec<f64>,
    pub(crate) router_a: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) h_weighted: Vec<f64>,
    pub(crate) layers: Vec<LayerStep>,
    pub(crate) z_fused: Vec<Vec<f64>>,
    pub(crate) mix_x: Vec<f64>,
    pub(crate) mix_u: Vec<f64>,
    pub(crate) mix_a: Vec<f64>,
    pub(crate) z_mixed: Vec<Vec<f64>>,
    pub(crate) z_final: Vec<f64>,
    pub(crate) head_u: Vec<f64>,
    pub(crate) head_a: Vec<f64>,
    pub(crate) y_norm: Vec<f64>,
    pub(crate) y: Vec<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Denormalised forecasts, `B × T`.
    pub fn predictions(&self) -> &[f64] {
        &self.y
    }

    /// Internal normalised inputs, `B × L`.
    pub fn x_norm(&self) -> &[f64] {
        &self.prep.x_norm
    }

    /// Band weights `B × N_bands`; empty when the wavelet stream is ablated.
    pub fn band_weights(&self) -> &[f64] {
        &self.w
    }

    /// Attention weights of `layer`/`scale`, laid out `B × heads × N_bands`.
    pub fn attention(&self, layer: usize, scale: usize) -> Option<&[f64]> {
        self.layers
            .get(layer)
            .and_then(|l| l.scales.get(scale))
            .map(|s| s.alpha.as_slice())
    }

    /// Gate activations of `layer`/`scale`, `B × D`; empty without gating.
    pub fn gates(&self, layer: usize, scale: usize) -> Option<&[f64]> {
        self.layers
            .get(layer)
            .and_then(|l| l.scales.get(scale))
            .map(|s| s.g.as_slice())
    }

    /// Fused scale vectors before mixing, one `B × D` block per scale.
    pub fn z_fused(&self) -> &[Vec<f64>] {
        &self.z_fused
    }

    pub fn z_mixed(&self) -> &[Vec<f64>] {
        &self.z_mixed
    }

    pub fn z_temporal(&self) -> &[Vec<f64>] {
        &self.z_t
    }
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Self::with_params(config, params)
    }

    /// Pairs `params` with `config`, checking every tensor shape.
    pub fn with_params(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let reference = ModelParams::init(&ModelConfig {
            seed: 0,
            ..config.clone()
        })?;
        let want: Vec<_> = reference.named_tensors().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
        let got: Vec<_> = params.named_tensors().iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect();
        if want != got {
            return Err(Error::Config(
                "parameter shapes do not match the model configuration".into(),
            ));
        }
        let basis = make_basis(&config.basis)?;
        Ok(Model {
            config,
            params,
            basis,
        })
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    /// Single-window forecast of length `T`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(&[x])?.y)
    }

    pub(crate) fn prepare(&self, inputs: &[&[f64]]) -> Result<Prepared> {
        let c = &self.config;
        let (l, b) = (c.lookback, inputs.len());
        let mut prep = Prepared {
            x_norm: Vec::with_capacity(b * l),
            stats: Vec::with_capacity(b),
            pooled: (0..c.num_scales).map(|s| Vec::with_capacity(b * c.scale_len(s))).collect(),
            bands: Vec::new(),
            spectrum: Vec::new(),
        };
        let wavelet = !c.ablation.no_wavelet;
        if wavelet {
            prep.bands = (0..c.num_bands()).map(|_| Vec::with_capacity(b * l)).collect();
        }
        for x in inputs {
            if x.len() != l {
                return Err(Error::dim("forward input", &[l], &[x.len()]));
            }
            let (xn, st) = revin_normalize(x);
            for (s, out) in multiscale_pool(&xn, c.num_scales)?.into_iter().enumerate() {
                prep.pooled[s].extend_from_slice(&out);
            }
            if wavelet {
                let pyr = wavedec(&xn, &self.basis, c.dwt_levels)?;
                for (j, coeffs) in pyr.coeffs.iter().enumerate() {
                    prep.bands[j].extend(interp_linear(coeffs, l)?);
                }
                if !c.ablation.no_router {
                    prep.spectrum.extend(rfft_amplitude(&xn).amps);
                }
            }
            prep.x_norm.extend_from_slice(&xn);
            prep.stats.push(st);
        }
        Ok(prep)
    }

    /// Runs the full pipeline on a batch of lookback windows.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Result<ForwardCache> {
        let prep = self.prepare(inputs)?;
        Ok(self.forward_prepared(prep))
    }

    pub(crate) fn forward_prepared(&self, prep: Prepared) -> ForwardCache {
        let c = &self.config;
        let p = &self.params;
        let b = prep.stats.len();
        let (d, nb, s_count) = (c.d_model, c.num_bands(), c.num_scales);

        let z_t: Vec<Vec<f64>> = p
            .temporal_embeds
            .iter()
            .zip(&prep.pooled)
            .map(|(layer, h)| layer.forward_rows(h, b))
            .collect();

        let mut cache = ForwardCache {
            batch: b,
            z_t,
            h_w: Vec::new(),
            router_u: Vec::new(),
            router_a: Vec::new(),
            w: Vec::new(),
            h_weighted: Vec::new(),
            layers: Vec::new(),
            z_fused: Vec::new(),
            mix_x: Vec::new(),
            mix_u: Vec::new(),
            mix_a: Vec::new(),
            z_mixed: Vec::new(),
            z_final: Vec::new(),
            head_u: Vec::new(),
            head_a: Vec::new(),
            y_norm: Vec::new(),
            y: Vec::new(),
            prep,
        };

        if c.ablation.no_wavelet {
            cache.z_fused = cache.z_t.clone();
        } else {
            // multi-band representation, B × N_bands × D
            let mut h_w = vec![0.0; b * nb * d];
            for (j, layer) in p.band_embeds.iter().enumerate() {
                let e = layer.forward_rows(&cache.prep.bands[j], b);
                for bi in 0..b {
                    h_w[(bi * nb + j) * d..][..d].copy_from_slice(&e[bi * d..][..d]);
                }
            }
            let w = if c.ablation.no_router {
                vec![1.0 / nb as f64; b * nb]
            } else {
                let u = p.router_in.forward_rows(&cache.prep.spectrum, b);
                let a: Vec<f64> = u.iter().map(|&v| gelu_scalar(v)).collect();
                let mut logits = p.router_out.forward_rows(&a, b);
                for row in logits.chunks_exact_mut(nb) {
                    softmax_in_place(row);
                }
                cache.router_u = u;
                cache.router_a = a;
                logits
            };
            let mut h_weighted = h_w.clone();
            for (row, &wj) in h_weighted.chunks_exact_mut(d).zip(&w) {
                row.iter_mut().for_each(|v| *v *= wj);
            }

            let mut z = cache.z_t.clone();
            for layer in &p.fusion {
                let k = layer.k_proj.forward_rows(&h_weighted, b * nb);
                let v = layer.v_proj.forward_rows(&h_weighted, b * nb);
                let mut scales = Vec::with_capacity(s_count);
                for zs in z.iter_mut() {
                    let zin = std::mem::take(zs);
                    let (zout, step) =
                        fuse_forward(layer, zin, &k, &v, b, nb, c.num_heads, !c.ablation.no_gating);
                    *zs = zout;
                    scales.push(step);
                }
                cache.layers.push(LayerStep { k, v, scales });
            }
            cache.h_w = h_w;
            cache.w = w;
            cache.h_weighted = h_weighted;
            cache.z_fused = z;
        }

        if c.ablation.no_mixer {
            cache.z_mixed = cache.z_fused.clone();
        } else {
            let rows = b * d;
            let mut x = vec![0.0; rows * s_count];
            for (s, zs) in cache.z_fused.iter().enumerate() {
                for (r, v) in zs.iter().enumerate() {
                    x[r * s_count + s] = *v;
                }
            }
            let u = p.mixer_in.forward_rows(&x, rows);
            let a: Vec<f64> = u.iter().map(|&v| gelu_scalar(v)).collect();
            let o = p.mixer_out.forward_rows(&a, rows);
            cache.z_mixed = cache
                .z_fused
                .iter()
                .enumerate()
                .map(|(s, zs)| zs.iter().enumerate().map(|(r, v)| v + o[r * s_count + s]).collect())
                .collect();
            cache.mix_x = x;
            cache.mix_u = u;
            cache.mix_a = a;
        }

        let mut z_final = vec![0.0; b * d];
        for zs in &cache.z_mixed {
            for (acc, v) in z_final.iter_mut().zip(zs) {
                *acc += v;
            }
        }
        let inv_s = 1.0 / s_count as f64;
        z_final.iter_mut().for_each(|v| *v *= inv_s);

        let head_u = p.head_in.forward_rows(&z_final, b);
        let head_a: Vec<f64> = head_u.iter().map(|&v| gelu_scalar(v)).collect();
        let y_norm = p.head_out.forward_rows(&head_a, b);
        let t = c.horizon;
        let y = y_norm
            .chunks_exact(t)
            .zip(&cache.prep.stats)
            .flat_map(|(row, st)| row.iter().map(move |v| v * st.scale() + st.mu))
            .collect();

        cache.z_final = z_final;
        cache.head_u = head_u;
        cache.head_a = head_a;
        cache.y_norm = y_norm;
        cache.y = y;
        self.check_shapes(&cache);
        cache
    }

    fn check_shapes(&self, cache: &ForwardCache) {
        let c = &self.config;
        let (b, d, nb) = (cache.batch, c.d_model, c.num_bands());
        assert!(cache.z_t.len() == c.num_scales && cache.z_t.iter().all(|z| z.len() == b * d));
        if !c.ablation.no_wavelet {
            assert_eq!(cache.h_w.len(), b * nb * d);
            assert_eq!(cache.h_weighted.len(), b * nb * d);
            assert_eq!(cache.w.len(), b * nb);
        }
        assert!(cache.z_fused.len() == c.num_scales && cache.z_fused.iter().all(|z| z.len() == b * d));
        assert!(cache.z_mixed.len() == c.num_scales && cache.z_mixed.iter().all(|z| z.len() == b * d));
        assert_eq!(cache.y.len(), b * c.horizon);
    }

    /// Gradient of a scalar loss with respect to every parameter, given
    /// `d_pred = ∂loss/∂predictions` (`B × T`, denormalised scale).
    pub fn backward(&self, cache: &ForwardCache, d_pred: &[f64]) -> ModelParams {
        let c = &self.config;
        let p = &self.params;
        let b = cache.batch;
        let (d, nb, s_count, t) = (c.d_model, c.num_bands(), c.num_scales, c.horizon);
        assert_eq!(d_pred.len(), b * t, "upstream gradient extent");
        let mut g = p.zeros_like();

        let mut dy_norm = d_pred.to_vec();
        for (row, st) in dy_norm.chunks_exact_mut(t).zip(&cache.prep.stats) {
            row.iter_mut().for_each(|v| *v *= st.scale());
        }
        let mut da = p
            .head_out
            .backward_rows(&cache.head_a, &dy_norm, b, &mut g.head_out, true)
            .unwrap();
        for (dv, &u) in da.iter_mut().zip(&cache.head_u) {
            *dv *= gelu_grad(u);
        }
        let dz_final = p
            .head_in
            .backward_rows(&cache.z_final, &da, b, &mut g.head_in, true)
            .unwrap();
        let inv_s = 1.0 / s_count as f64;
        let dz_mixed: Vec<f64> = dz_final.iter().map(|v| v * inv_s).collect();

        let mut dz: Vec<Vec<f64>> = vec![dz_mixed.clone(); s_count];
        if !c.ablation.no_mixer {
            let rows = b * d;
            let mut d_o = vec![0.0; rows * s_count];
            for r in 0..rows {
                d_o[r * s_count..][..s_count].fill(dz_mixed[r]);
            }
            let mut d_a = p
                .mixer_out
                .backward_rows(&cache.mix_a, &d_o, rows, &mut g.mixer_out, true)
                .unwrap();
            for (dv, &u) in d_a.iter_mut().zip(&cache.mix_u) {
                *dv *= gelu_grad(u);
            }
            let d_x = p
                .mixer_in
                .backward_rows(&cache.mix_x, &d_a, rows, &mut g.mixer_in, true)
                .unwrap();
            for (s, dzs) in dz.iter_mut().enumerate() {
                for (r, v) in dzs.iter_mut().enumerate() {
                    *v += d_x[r * s_count + s];
                }
            }
        }

        if !c.ablation.no_wavelet {
            let mut d_hw_weighted = vec![0.0; b * nb * d];
            for (li, (layer, step)) in p.fusion.iter().zip(&cache.layers).enumerate().rev() {
                let mut d_k = vec![0.0; b * nb * d];
                let mut d_v = vec![0.0; b * nb * d];
                let gl = &mut g.fusion[li];
                for (dzs, sc) in dz.iter_mut().zip(&step.scales) {
                    *dzs = fuse_backward(
                        layer,
                        sc,
                        &step.k,
                        &step.v,
                        dzs,
                        b,
                        nb,
                        c.num_heads,
                        !c.ablation.no_gating,
                        gl,
                        &mut d_k,
                        &mut d_v,
                    );
                }
                let dk_in = layer
                    .k_proj
                    .backward_rows(&cache.h_weighted, &d_k, b * nb, &mut gl.k_proj, true)
                    .unwrap();
                let dv_in = layer
                    .v_proj
                    .backward_rows(&cache.h_weighted, &d_v, b * nb, &mut gl.v_proj, true)
                    .unwrap();
                for ((acc, x), y) in d_hw_weighted.iter_mut().zip(&dk_in).zip(&dv_in) {
                    *acc += x + y;
                }
            }

            // H'_w = w ⊙ H_w, row-wise
            let mut d_hw = vec![0.0; b * nb * d];
            let mut d_w = vec![0.0; b * nb];
            for (r, ((dst, src), hw)) in d_hw
                .chunks_exact_mut(d)
                .zip(d_hw_weighted.chunks_exact(d))
                .zip(cache.h_w.chunks_exact(d))
                .enumerate()
            {
                let wj = cache.w[r];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x = wj * y;
                }
                d_w[r] = dot(src, hw);
            }

            if !c.ablation.no_router {
                for (row, pw) in d_w.chunks_exact_mut(nb).zip(cache.w.chunks_exact(nb)) {
                    softmax_backward_in_place(pw, row);
                }
                let mut d_ra = p
                    .router_out
                    .backward_rows(&cache.router_a, &d_w, b, &mut g.router_out, true)
                    .unwrap();
                for (dv, &u) in d_ra.iter_mut().zip(&cache.router_u) {
                    *dv *= gelu_grad(u);
                }
                p.router_in
                    .backward_rows(&cache.prep.spectrum, &d_ra, b, &mut g.router_in, false);
            }

            let mut d_band = vec![0.0; b * d];
            for (j, layer) in p.band_embeds.iter().enumerate() {
                for bi in 0..b {
                    d_band[bi * d..][..d].copy_from_slice(&d_hw[(bi * nb + j) * d..][..d]);
                }
                layer.backward_rows(&cache.prep.bands[j], &d_band, b, &mut g.band_embeds[j], false);
            }
        }

        for (s, layer) in p.temporal_embeds.iter().enumerate() {
            layer.backward_rows(&cache.prep.pooled[s], &dz[s], b, &mut g.temporal_embeds[s], false);
        }
        g
    }
}

/// Non-overlapping block means with block size `2^s` for `s = 0..S`.
pub fn multiscale_pool(x_norm: &[f64], num_scales: usize) -> Result<Vec<Vec<f64>>> {
    let l = x_norm.len();
    if num_scales == 0 {
        return Err(Error::Config("num_scales must be ≥ 1".into()));
    }
    let widest = 1usize << (num_scales - 1);
    if widest > l || l % widest != 0 {
        return Err(Error::Config(format!(
            "series length {l} must be divisible by the widest pooling kernel {widest}"
        )));
    }
    Ok((0..num_scales)
        .map(|s| {
            let k = 1usize << s;
            x_norm
                .chunks_exact(k)
                .map(|c| c.iter().sum::<f64>() / k as f64)
                .collect()
        })
        .collect())
}

/// Multi-head attention of one query per sample over `nb` keys per sample.
pub(crate) fn attention_forward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    b: usize,
    nb: usize,
    heads: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = q.len() / b.max(1);
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut ctx = vec![0.0; b * d];
    let mut alpha = vec![0.0; b * heads * nb];
    for bi in 0..b {
        for h in 0..heads {
            let qh = &q[bi * d + h * dk..][..dk];
            let a = &mut alpha[(bi * heads + h) * nb..][..nb];
            for (j, aj) in a.iter_mut().enumerate() {
                *aj = dot(qh, &k[(bi * nb + j) * d + h * dk..][..dk]) * scale;
            }
            softmax_in_place(a);
            let out = &mut ctx[bi * d + h * dk..][..dk];
            for (j, &aj) in a.iter().enumerate() {
                let vj = &v[(bi * nb + j) * d + h * dk..][..dk];
                for (o, x) in out.iter_mut().zip(vj) {
                    *o += aj * x;
                }
            }
        }
    }
    (ctx, alpha)
}

#[allow(clippy::too_many_arguments)]
fn attention_backward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    alpha: &[f64],
    d_ctx: &[f64],
    b: usize,
    nb: usize,
    heads: usize,
    d_k: &mut [f64],
    d_v: &mut [f64],
) -> Vec<f64> {
    let d = q.len() / b.max(1);
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut d_q = vec![0.0; b * d];
    let mut d_score = vec![0.0; nb];
    for bi in 0..b {
        for h in 0..heads {
            let a = &alpha[(bi * heads + h) * nb..][..nb];
            let dc = &d_ctx[bi * d + h * dk..][..dk];
            for j in 0..nb {
                let off = (bi * nb + j) * d + h * dk;
                d_score[j] = dot(dc, &v[off..][..dk]);
                for (g, x) in d_v[off..][..dk].iter_mut().zip(dc) {
                    *g += a[j] * x;
                }
            }
            softmax_backward_in_place(a, &mut d_score);
            let qh = &q[bi * d + h * dk..][..dk];
            let dqh = &mut d_q[bi * d + h * dk..][..dk];
            for (j, &ds) in d_score.iter().enumerate() {
                let ds = ds * scale;
                let off = (bi * nb + j) * d + h * dk;
                for ((gq, gk), (kx, qx)) in dqh
                    .iter_mut()
                    .zip(d_k[off..][..dk].iter_mut())
                    .zip(k[off..][..dk].iter().zip(qh))
                {
                    *gq += ds * kx;
                    *gk += ds * qx;
                }
            }
        }
    }
    d_q
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fuse_forward(
    layer: &FusionLayer,
    zin: Vec<f64>,
    k: &[f64],
    v: &[f64],
    b: usize,
    nb: usize,
    heads: usize,
    gating: bool,
) -> (Vec<f64>, ScaleStep) {
    let d = layer.q_proj.out_dim();
    let q = layer.q_proj.forward_rows(&zin, b);
    let (ctx, alpha) = attention_forward(&q, k, v, b, nb, heads);
    let con = layer.o_proj.forward_rows(&ctx, b);
    let r: Vec<f64> = zin.iter().zip(&con).map(|(a, c)| a + c).collect();
    let (zenh, ln) = layer_norm_rows(&r, b, layer.ln_gamma.data(), layer.ln_beta.data());
    let (zout, gate_in, g) = if gating {
        let mut gate_in = Vec::with_capacity(2 * b * d);
        for bi in 0..b {
            gate_in.extend_from_slice(&zin[bi * d..][..d]);
            gate_in.extend_from_slice(&zenh[bi * d..][..d]);
        }
        let g: Vec<f64> = layer
            .gate
            .forward_rows(&gate_in, b)
            .into_iter()
            .map(sigmoid_scalar)
            .collect();
        let zout = g
            .iter()
            .zip(zenh.iter().zip(&zin))
            .map(|(gi, (e, t))| gi * e + (1.0 - gi) * t)
            .collect();
        (zout, gate_in, g)
    } else {
        (zenh.clone(), Vec::new(), Vec::new())
    };
    (
        zout,
        ScaleStep {
            zin,
            q,
            alpha,
            ctx,
            ln,
            zenh,
            gate_in,
            g,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn fuse_backward(
    layer: &FusionLayer,
    step: &ScaleStep,
    k: &[f64],
    v: &[f64],
    d_out: &[f64],
    b: usize,
    nb: usize,
    heads: usize,
    gating: bool,
    grad: &mut FusionLayer,
    d_k: &mut [f64],
    d_v: &mut [f64],
) -> Vec<f64> {
    let d = layer.q_proj.out_dim();
    let (mut d_zin, mut d_zenh) = if gating {
        let mut d_zin = vec![0.0; b * d];
        let mut d_zenh = vec![0.0; b * d];
        let mut d_logit = vec![0.0; b * d];
        for i in 0..b * d {
            let gi = step.g[i];
            d_zenh[i] = d_out[i] * gi;
            d_zin[i] = d_out[i] * (1.0 - gi);
            d_logit[i] = d_out[i] * (step.zenh[i] - step.zin[i]) * gi * (1.0 - gi);
        }
        let d_gate_in = layer
            .gate
            .backward_rows(&step.gate_in, &d_logit, b, &mut grad.gate, true)
            .unwrap();
        for bi in 0..b {
            let src = &d_gate_in[bi * 2 * d..][..2 * d];
            for i in 0..d {
                d_zin[bi * d + i] += src[i];
                d_zenh[bi * d + i] += src[d + i];
            }
        }
        (d_zin, d_zenh)
    } else {
        (vec![0.0; b * d], d_out.to_vec())
    };
    let d_r = layer_norm_backward_rows(
        &d_zenh,
        &step.ln,
        layer.ln_gamma.data(),
        grad.ln_gamma.data_mut(),
        grad.ln_beta.data_mut(),
    );
    d_zenh.clear();
    for (a, x) in d_zin.iter_mut().zip(&d_r) {
        *a += x;
    }
    let d_ctx = layer
        .o_proj
        .backward_rows(&step.ctx, &d_r, b, &mut grad.o_proj, true)
        .unwrap();
    let d_q = attention_backward(&step.q, k, v, &step.alpha, &d_ctx, b, nb, heads, d_k, d_v);
    let from_q = layer
        .q_proj
        .backward_rows(&step.zin, &d_q, b, &mut grad.q_proj, true)
        .unwrap();
    for (a, x) in d_zin.iter_mut().zip(&from_q) {
        *a += x;
    }
    d_zin
}

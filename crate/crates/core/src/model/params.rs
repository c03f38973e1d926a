use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::{LinearLayer, Tensor};

/// Parameters of one coherent gated fusion layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionLayer {
    pub q_proj: LinearLayer,
    pub k_proj: LinearLayer,
    pub v_proj: LinearLayer,
    pub o_proj: LinearLayer,
    pub ln_gamma: Tensor,
    pub ln_beta: Tensor,
    /// `[z_t ; z_enh]` (2D) → per-feature gate logits (D).
    pub gate: LinearLayer,
}

impl FusionLayer {
    fn new(d: usize, rng: &mut ChaCha8Rng) -> Self {
        FusionLayer {
            q_proj: LinearLayer::new(d, d, rng),
            k_proj: LinearLayer::new(d, d, rng),
            v_proj: LinearLayer::new(d, d, rng),
            o_proj: LinearLayer::new(d, d, rng),
            ln_gamma: Tensor::filled(&[d], 1.0),
            ln_beta: Tensor::zeros(&[d]),
            gate: LinearLayer::new(2 * d, d, rng),
        }
    }
}

/// Every learnable tensor of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// One `L/2^s → D` projection per temporal scale.
    pub temporal_embeds: Vec<LinearLayer>,
    /// One `L → D` projection per wavelet band.
    pub band_embeds: Vec<LinearLayer>,
    pub router_in: LinearLayer,
    pub router_out: LinearLayer,
    pub fusion: Vec<FusionLayer>,
    pub mixer_in: LinearLayer,
    pub mixer_out: LinearLayer,
    pub head_in: LinearLayer,
    pub head_out: LinearLayer,
}

impl ModelParams {
    /// Seeded initialisation; the draw order is fixed so a seed reproduces
    /// identical weights.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d_model;
        let temporal_embeds = (0..config.num_scales)
            .map(|s| LinearLayer::new(config.scale_len(s), d, &mut rng))
            .collect();
        let band_embeds = (0..config.num_bands())
            .map(|_| LinearLayer::new(config.lookback, d, &mut rng))
            .collect();
        let hidden = config.router_hidden_dim();
        let router_in = LinearLayer::new(config.spectrum_len(), hidden, &mut rng);
        let router_out = LinearLayer::new(hidden, config.num_bands(), &mut rng);
        let fusion = (0..config.fusion_layers)
            .map(|_| FusionLayer::new(d, &mut rng))
            .collect();
        let mixer_in = LinearLayer::new(config.num_scales, config.mixer_hidden(), &mut rng);
        let mixer_out = LinearLayer::new(config.mixer_hidden(), config.num_scales, &mut rng);
        let head_in = LinearLayer::new(d, d, &mut rng);
        let head_out = LinearLayer::new(d, config.horizon, &mut rng);
        Ok(ModelParams {
            temporal_embeds,
            band_embeds,
            router_in,
            router_out,
            fusion,
            mixer_in,
            mixer_out,
            head_in,
            head_out,
        })
    }

    /// Same structure, every entry zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data_mut().fill(0.0);
            t.clear_grad();
        }
        z
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        fn push<'a>(out: &mut Vec<(String, &'a Tensor)>, name: &str, l: &'a LinearLayer) {
            out.push((format!("{name}.weight"), &l.weight));
            out.push((format!("{name}.bias"), &l.bias));
        }
        for (i, l) in self.temporal_embeds.iter().enumerate() {
            push(&mut out, &format!("temporal.{i}"), l);
        }
        for (i, l) in self.band_embeds.iter().enumerate() {
            push(&mut out, &format!("band.{i}"), l);
        }
        push(&mut out, "router.0", &self.router_in);
        push(&mut out, "router.1", &self.router_out);
        for (i, f) in self.fusion.iter().enumerate() {
            push(&mut out, &format!("fusion.{i}.q"), &f.q_proj);
            push(&mut out, &format!("fusion.{i}.k"), &f.k_proj);
            push(&mut out, &format!("fusion.{i}.v"), &f.v_proj);
            push(&mut out, &format!("fusion.{i}.o"), &f.o_proj);
            out.push((format!("fusion.{i}.ln.gamma"), &f.ln_gamma));
            out.push((format!("fusion.{i}.ln.beta"), &f.ln_beta));
            push(&mut out, &format!("fusion.{i}.gate"), &f.gate);
        }
        push(&mut out, "mixer.0", &self.mixer_in);
        push(&mut out, "mixer.1", &self.mixer_out);
        push(&mut out, "head.0", &self.head_in);
        push(&mut out, "head.1", &self.head_out);
        out
    }

    /// Mutable view in the same order as [`named_tensors`](Self::named_tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        fn push<'a>(out: &mut Vec<&'a mut Tensor>, l: &'a mut LinearLayer) {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        for l in &mut self.temporal_embeds {
            push(&mut out, l);
        }
        for l in &mut self.band_embeds {
            push(&mut out, l);
        }
        push(&mut out, &mut self.router_in);
        push(&mut out, &mut self.router_out);
        for f in &mut self.fusion {
            push(&mut out, &mut f.q_proj);
            push(&mut out, &mut f.k_proj);
            push(&mut out, &mut f.v_proj);
            push(&mut out, &mut f.o_proj);
            out.push(&mut f.ln_gamma);
            out.push(&mut f.ln_beta);
            push(&mut out, &mut f.gate);
        }
        push(&mut out, &mut self.mixer_in);
        push(&mut out, &mut self.mixer_out);
        push(&mut out, &mut self.head_in);
        push(&mut out, &mut self.head_out);
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.named_tensors()
            .iter()
            .flat_map(|(_, t)| t.data().iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.num_params();
        if flat.len() != total {
            return Err(Error::dim("ModelParams::set_flat", &[total], &[flat.len()]));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &ModelParams) {
        let src = other.named_tensors();
        for (dst, (_, s)) in self.tensors_mut().into_iter().zip(src) {
            for (a, b) in dst.data_mut().iter_mut().zip(s.data()) {
                *a += b;
            }
        }
    }

    /// Copies `grads` into each tensor's gradient slot.
    pub fn load_grads(&mut self, grads: &ModelParams) -> Result<()> {
        let src = grads.named_tensors();
        for (dst, (_, s)) in self.tensors_mut().into_iter().zip(src) {
            dst.set_grad(s.data().to_vec())?;
        }
        Ok(())
    }

    /// Euclidean norm of all entries.
    pub fn l2_norm(&self) -> f64 {
        self.named_tensors()
            .iter()
            .flat_map(|(_, t)| t.data().iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_is_function_of_config() {
        let c = ModelConfig {
            lookback: 16,
            horizon: 4,
            d_model: 8,
            num_scales: 2,
            dwt_levels: 2,
            num_heads: 2,
            fusion_layers: 1,
            ..Default::default()
        };
        let p = ModelParams::init(&c).unwrap();
        let d = 8;
        let temporal = (16 + 8) * d + 2 * d;
        let bands = 3 * (16 * d + d);
        let router = (9 * 3 + 3) + (3 * 3 + 3);
        let fusion = 4 * (d * d + d) + 2 * d + (2 * d * d + d);
        let mixer = (2 * 4 + 4) + (4 * 2 + 2);
        let head = (d * d + d) + (d * 4 + 4);
        assert_eq!(p.num_params(), temporal + bands + router + fusion + mixer + head);
        let other = ModelParams::init(&ModelConfig { seed: 99, ..c.clone() }).unwrap();
        assert_eq!(other.num_params(), p.num_params());
    }

    #[test]
    fn names_and_mut_view_agree() {
        let mut p = ModelParams::init(&ModelConfig::default()).unwrap();
        let shapes: Vec<Vec<usize>> = p.named_tensors().iter().map(|(_, t)| t.shape().to_vec()).collect();
        let names: Vec<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), names.len());
        let mut_shapes: Vec<Vec<usize>> = p.tensors_mut().iter().map(|t| t.shape().to_vec()).collect();
        assert_eq!(shapes, mut_shapes);
    }

    #[test]
    fn flat_roundtrip_and_seed_determinism() {
        let c = ModelConfig::default();
        let a = ModelParams::init(&c).unwrap();
        let b = ModelParams::init(&c).unwrap();
        assert_eq!(a, b);
        let mut z = a.zeros_like();
        z.set_flat(&a.to_flat()).unwrap();
        assert_eq!(z, a);
        let other = ModelParams::init(&ModelConfig { seed: 7, ..c }).unwrap();
        assert_ne!(other, a);
    }
}

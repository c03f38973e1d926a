use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SUPPORTED_BASES;

/// Component switches for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    /// Replace router weights with a uniform distribution over bands.
    pub no_router: bool,
    /// Drop the wavelet stream and the fusion stack entirely.
    pub no_wavelet: bool,
    /// Use the layer-normed residual output directly instead of the gated blend.
    pub no_gating: bool,
    /// Pass fused scale vectors straight to the mean aggregation.
    pub no_mixer: bool,
}

impl Ablation {
    pub const VARIANTS: [&'static str; 5] = ["full", "no_router", "no_wavelet", "no_gating", "no_mixer"];

    pub fn from_variant(name: &str) -> Result<Self> {
        let mut a = Ablation::default();
        match name {
            "full" => {}
            "no_router" => a.no_router = true,
            "no_wavelet" => a.no_wavelet = true,
            "no_gating" => a.no_gating = true,
            "no_mixer" => a.no_mixer = true,
            other => {
                return Err(Error::Config(format!(
                    "unknown ablation variant '{other}'; expected one of {:?}",
                    Self::VARIANTS
                )))
            }
        }
        Ok(a)
    }
}

/// Architectural hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub d_model: usize,
    pub num_scales: usize,
    pub dwt_levels: usize,
    pub basis: String,
    pub num_heads: usize,
    pub fusion_layers: usize,
    /// Router hidden width; defaults to the number of wavelet bands.
    pub router_hidden: Option<usize>,
    pub mixer_expansion: usize,
    pub ablation: Ablation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lookback: 96,
            horizon: 96,
            d_model: 128,
            num_scales: 4,
            dwt_levels: 3,
            basis: "db4".to_string(),
            num_heads: 8,
            fusion_layers: 3,
            router_hidden: None,
            mixer_expansion: 2,
            ablation: Ablation::default(),
            seed: 2024,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.lookback < 2 {
            return fail(format!("lookback must be ≥ 2, got {}", self.lookback));
        }
        if self.horizon == 0 {
            return fail("horizon must be ≥ 1".into());
        }
        if self.d_model == 0 || self.num_heads == 0 || self.d_model % self.num_heads != 0 {
            return fail(format!(
                "d_model {} must be a positive multiple of num_heads {}",
                self.d_model, self.num_heads
            ));
        }
        if self.num_scales == 0 {
            return fail("num_scales must be ≥ 1".into());
        }
        let pool = 1usize << (self.num_scales - 1).min(63);
        if pool > self.lookback || self.lookback % pool != 0 {
            return fail(format!(
                "lookback {} must be divisible by 2^(num_scales−1) = {pool}",
                self.lookback
            ));
        }
        if self.dwt_levels == 0 || self.dwt_levels >= 63 {
            return fail(format!("dwt_levels must be in 1..63, got {}", self.dwt_levels));
        }
        let block = 1usize << self.dwt_levels;
        if self.lookback % block != 0 {
            return fail(format!(
                "lookback {} must be divisible by 2^dwt_levels = {block}",
                self.lookback
            ));
        }
        if self.fusion_layers == 0 {
            return fail("fusion_layers must be ≥ 1".into());
        }
        if self.router_hidden == Some(0) || self.mixer_expansion == 0 {
            return fail("router_hidden and mixer_expansion must be ≥ 1".into());
        }
        if !SUPPORTED_BASES.contains(&self.basis.as_str()) {
            return fail(format!(
                "unknown wavelet basis '{}'; supported: {}",
                self.basis,
                SUPPORTED_BASES.join(", ")
            ));
        }
        Ok(())
    }

    pub fn num_bands(&self) -> usize {
        self.dwt_levels + 1
    }

    pub fn spectrum_len(&self) -> usize {
        self.lookback / 2 + 1
    }

    pub fn router_hidden_dim(&self) -> usize {
        self.router_hidden.unwrap_or_else(|| self.num_bands())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.num_heads
    }

    pub fn mixer_hidden(&self) -> usize {
        self.mixer_expansion * self.num_scales
    }

    /// Input length of the temporal embedding at `scale`.
    pub fn scale_len(&self, scale: usize) -> usize {
        self.lookback >> scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_bands(), 4);
        assert_eq!(c.spectrum_len(), 49);
        assert_eq!(c.head_dim(), 16);
        assert_eq!((0..4).map(|s| c.scale_len(s)).collect::<Vec<_>>(), [96, 48, 24, 12]);
    }

    #[test]
    fn invariants_enforced() {
        let bad = [
            ModelConfig { d_model: 130, ..Default::default() },
            ModelConfig { dwt_levels: 6, ..Default::default() },
            ModelConfig { num_scales: 8, ..Default::default() },
            ModelConfig { fusion_layers: 0, ..Default::default() },
            ModelConfig { basis: "sym9".into(), ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn ablation_variants_parse() {
        for v in Ablation::VARIANTS {
            Ablation::from_variant(v).unwrap();
        }
        assert!(Ablation::from_variant("no_everything").is_err());
        assert!(Ablation::from_variant("no_wavelet").unwrap().no_wavelet);
    }
}

//! Run configuration: TOML file, then `AWEMIXER_OUT`, then command-line flags.

use std::path::{Path, PathBuf};

use awemixer::data::{load_csv, DatasetKind, SplitFractions, WindowedDataset};
use awemixer::model::{Ablation, ModelConfig};
use awemixer::train::config_hash;
use awemixer::TrainConfig;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

pub const OUT_ENV: &str = "AWEMIXER_OUT";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindChoice {
    #[default]
    Auto,
    Ett,
    Other,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Name recorded in reports; defaults to the file stem.
    pub name: Option<String>,
    pub kind: KindChoice,
    pub train_frac: Option<f64>,
    pub val_frac: Option<f64>,
}

impl DataConfig {
    pub fn fractions(&self) -> SplitFractions {
        let kind = match (self.kind, &self.path) {
            (KindChoice::Ett, _) => DatasetKind::Ett,
            (KindChoice::Other, _) => DatasetKind::Other,
            (KindChoice::Auto, Some(p)) => DatasetKind::infer(p),
            (KindChoice::Auto, None) => DatasetKind::Other,
        };
        let base = kind.fractions();
        SplitFractions {
            train: self.train_frac.unwrap_or(base.train),
            val: self.val_frac.unwrap_or(base.val),
        }
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .as_deref()
                .and_then(Path::file_stem)
                .and_then(|s| s.to_str())
                .unwrap_or("dataset")
                .to_string()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub run_id: Option<String>,
    /// Sets both the model and the training seed.
    pub seed: Option<u64>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("runs"),
            run_id: None,
            seed: None,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// The resolved configuration as embedded in reports. Output location and
/// run id are excluded so relocating a run does not change its hash.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho<'a> {
    pub data: &'a DataConfig,
    pub model: &'a ModelConfig,
    pub train: &'a TrainConfig,
}

impl RunConfig {
    pub fn echo(&self) -> ConfigEcho<'_> {
        ConfigEcho {
            data: &self.data,
            model: &self.model,
            train: &self.train,
        }
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(self.echo()).expect("config serialises")
    }

    pub fn hash(&self) -> String {
        config_hash(&self.echo())
    }

    pub fn variant_name(&self) -> String {
        let a = self.model.ablation;
        let parts: Vec<&str> = [
            (a.no_router, "no_router"),
            (a.no_wavelet, "no_wavelet"),
            (a.no_gating, "no_gating"),
            (a.no_mixer, "no_mixer"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        if parts.is_empty() {
            "full".into()
        } else {
            parts.join("+")
        }
    }

    /// `<output_dir>/<run_id>`, with a content-derived default id.
    pub fn run_dir(&self, command: &str) -> PathBuf {
        let id = self
            .run_id
            .clone()
            .unwrap_or_else(|| format!("{command}-{}", &self.hash()[..12]));
        self.output_dir.join(id)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<WindowedDataset, CliError> {
        let path = self
            .data
            .path
            .as_deref()
            .ok_or_else(|| CliError::config("no dataset path; pass --data or set [data] path"))?;
        let series = load_csv(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        WindowedDataset::new(
            &self.data.dataset_name(),
            &series,
            self.data.fractions(),
            self.model.lookback,
            self.model.horizon,
        )
        .map_err(CliError::from)
    }
}

/// Flags mirroring every configuration field.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(short, long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output root; overrides AWEMIXER_OUT and the config file
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Seed for both initialisation and shuffling
    #[arg(long)]
    pub seed: Option<u64>,

    /// Input CSV (first column `date`)
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[arg(long, value_enum)]
    pub dataset_kind: Option<KindChoice>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,

    #[arg(long)]
    pub lookback: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub num_scales: Option<usize>,
    #[arg(long)]
    pub dwt_levels: Option<usize>,
    /// Wavelet basis: haar or db4
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub num_heads: Option<usize>,
    #[arg(long)]
    pub fusion_layers: Option<usize>,
    #[arg(long)]
    pub router_hidden: Option<usize>,
    #[arg(long)]
    pub mixer_expansion: Option<usize>,
    /// Ablation variant: full, no_router, no_wavelet, no_gating, no_mixer
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub model_seed: Option<u64>,

    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub eval_batch_size: Option<usize>,
    #[arg(long)]
    pub train_seed: Option<u64>,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
    if v.is_some() {
        *slot = v.clone();
    }
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(out) = std::env::var_os(OUT_ENV) {
            cfg.output_dir = PathBuf::from(out);
        }
        self.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        set(&mut cfg.output_dir, &self.out);
        set_opt(&mut cfg.run_id, &self.run_id);
        set_opt(&mut cfg.seed, &self.seed);
        if let Some(s) = cfg.seed {
            cfg.model.seed = s;
            cfg.train.seed = s;
        }

        let d = &mut cfg.data;
        set_opt(&mut d.path, &self.data);
        set_opt(&mut d.name, &self.dataset_name);
        set(&mut d.kind, &self.dataset_kind);
        set_opt(&mut d.train_frac, &self.train_frac);
        set_opt(&mut d.val_frac, &self.val_frac);

        let m = &mut cfg.model;
        set(&mut m.lookback, &self.lookback);
        set(&mut m.horizon, &self.horizon);
        set(&mut m.d_model, &self.d_model);
        set(&mut m.num_scales, &self.num_scales);
        set(&mut m.dwt_levels, &self.dwt_levels);
        set(&mut m.basis, &self.basis);
        set(&mut m.num_heads, &self.num_heads);
        set(&mut m.fusion_layers, &self.fusion_layers);
        set_opt(&mut m.router_hidden, &self.router_hidden);
        set(&mut m.mixer_expansion, &self.mixer_expansion);
        set(&mut m.seed, &self.model_seed);
        if let Some(v) = &self.variant {
            m.ablation = Ablation::from_variant(v)?;
        }

        let t = &mut cfg.train;
        set(&mut t.lr, &self.lr);
        set(&mut t.batch_size, &self.batch_size);
        set(&mut t.max_epochs, &self.max_epochs);
        set(&mut t.patience, &self.patience);
        set_opt(&mut t.grad_clip, &self.grad_clip);
        set_opt(&mut t.max_steps, &self.max_steps);
        set(&mut t.eval_batch_size, &self.eval_batch_size);
        set(&mut t.seed, &self.train_seed);
        Ok(())
    }
}

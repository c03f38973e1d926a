use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use awemixer::data::{load_csv, Split, WindowedDataset};
use awemixer::model::{checkpoint, Ablation, Model};
use awemixer::signal::{interp_linear, make_basis, wavedec};
use awemixer::train::{
    evaluate_model, naive_baselines, predict_split, train_model_with, ForecastReport,
};
use awemixer::VERSION;
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::exit::CliError;
use crate::synth::{generate, to_csv, SynthKind, SynthSpec};

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn build_report(
    cfg: &RunConfig,
    ds: &WindowedDataset,
    model: &Model,
    split: Split,
    epochs_run: usize,
    steps_run: usize,
    wall_time_s: f64,
) -> Result<ForecastReport, CliError> {
    let metrics = evaluate_model(model, ds, split, cfg.train.eval_batch_size)?;
    let report = ForecastReport {
        version: VERSION.to_string(),
        dataset: ds.name.clone(),
        split,
        variant: cfg.variant_name(),
        lookback: ds.lookback,
        horizon: ds.horizon,
        windows: metrics.windows,
        mse: metrics.mse,
        mae: metrics.mae,
        baselines: Some(naive_baselines(ds, split)),
        config_hash: cfg.hash(),
        seed: cfg.train.seed,
        epochs_run,
        steps_run,
        wall_time_s,
        config: cfg.echo_json(),
    };
    report.check()?;
    Ok(report)
}

fn write_predictions(
    path: &Path,
    model: &Model,
    ds: &WindowedDataset,
    split: Split,
    batch: usize,
) -> Result<(), CliError> {
    let rows = predict_split(model, ds, split, batch)?;
    let mut out = String::from("window_id,channel,step,y_true,y_pred\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.window_id, r.channel, r.step, r.y_true, r.y_pred);
    }
    write_file(path, out.as_bytes())
}

/// Outcome of one training run: where it was written and its test metrics.
struct RunResult {
    dir: PathBuf,
    test: ForecastReport,
}

fn train_once(cfg: &RunConfig, dir: &Path, quiet: bool, save_predictions: bool) -> Result<RunResult, CliError> {
    let ds = cfg.load_dataset()?;
    let tag = format!("{}/{}/T={}", ds.name, cfg.variant_name(), cfg.model.horizon);
    let outcome = train_model_with(&cfg.model, &cfg.train, &ds, |log| {
        if !quiet {
            eprintln!(
                "[{tag}] epoch {:>3}  train {:.6}  val {:.6}  steps {}",
                log.epoch + 1,
                log.train_loss,
                log.val_mse,
                log.steps
            );
        }
    })?;
    let (e, s, w) = (outcome.epochs_run, outcome.steps_run, outcome.wall_time_s);
    let val = build_report(cfg, &ds, &outcome.model, Split::Val, e, s, w)?;
    let test = build_report(cfg, &ds, &outcome.model, Split::Test, e, s, w)?;

    fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
    checkpoint::save(&dir.join("model.ckpt"), &outcome.model)?;
    write_json(&dir.join("report_val.json"), &val)?;
    write_json(&dir.join("report_test.json"), &test)?;
    let mut hist = String::from("epoch,train_loss,val_mse,steps\n");
    for h in &outcome.history {
        let _ = writeln!(hist, "{},{},{},{}", h.epoch + 1, h.train_loss, h.val_mse, h.steps);
    }
    write_file(&dir.join("history.csv"), hist.as_bytes())?;
    if save_predictions {
        write_predictions(
            &dir.join("predictions_test.csv"),
            &outcome.model,
            &ds,
            Split::Test,
            cfg.train.eval_batch_size,
        )?;
    }
    Ok(RunResult {
        dir: dir.to_path_buf(),
        test,
    })
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Also write per-step test predictions as CSV
    #[arg(long)]
    pub save_predictions: bool,
    /// Suppress per-epoch progress on stderr
    #[arg(long, short)]
    pub quiet: bool,
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = args.overrides.resolve()?;
    let dir = cfg.run_dir("train");
    let r = train_once(&cfg, &dir, args.quiet, args.save_predictions)?;
    println!(
        "test mse {:.6}  mae {:.6}  ({} windows)  -> {}",
        r.test.mse,
        r.test.mae,
        r.test.windows,
        r.dir.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// train, val or test
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub save_predictions: bool,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut cfg = args.overrides.resolve()?;
    let split: Split = args.split.parse()?;
    let model = checkpoint::load(&args.checkpoint).map_err(|e| match e {
        awemixer::Error::Io(io) => CliError::data(format!("{}: {io}", args.checkpoint.display())),
        other => other.into(),
    })?;
    cfg.model = model.config.clone();
    let ds = cfg.load_dataset()?;
    let report = build_report(&cfg, &ds, &model, split, 0, 0, 0.0)?;
    let dir = cfg.run_dir("evaluate");
    write_json(&dir.join(format!("report_{split}.json")), &report)?;
    if args.save_predictions {
        write_predictions(
            &dir.join(format!("predictions_{split}.csv")),
            &model,
            &ds,
            split,
            cfg.train.eval_batch_size,
        )?;
    }
    println!("{split} mse {:.6}  mae {:.6}  -> {}", report.mse, report.mae, dir.display());
    Ok(())
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::config(format!("bad {what} value '{s}'"))))
        .collect()
}

#[derive(Debug, Serialize)]
struct HorizonMetrics {
    horizon: usize,
    mse: f64,
    mae: f64,
}

#[derive(Debug, Serialize)]
struct AblationRow {
    variant: String,
    mse: f64,
    mae: f64,
    mse_degradation_pct: f64,
    mae_degradation_pct: f64,
    per_horizon: Vec<HorizonMetrics>,
}

#[derive(Debug, Serialize)]
struct AblationTable {
    version: String,
    dataset: String,
    horizons: Vec<usize>,
    config: serde_json::Value,
    rows: Vec<AblationRow>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Comma-separated horizons; defaults to the configured horizon
    #[arg(long)]
    pub horizons: Option<String>,
    #[arg(long, short)]
    pub quiet: bool,
}

fn horizons_or_default(raw: &Option<String>, cfg: &RunConfig) -> Result<Vec<usize>, CliError> {
    match raw {
        Some(r) => {
            let h: Vec<usize> = parse_list(r, "horizon")?;
            if h.is_empty() {
                return Err(CliError::config("empty horizon list"));
            }
            Ok(h)
        }
        None => Ok(vec![cfg.model.horizon]),
    }
}

fn ablation_text(table: &AblationTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10} {:>10}",
        "variant", "mse", "mae", "dMSE%", "dMAE%"
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:<12} {:>10.5} {:>10.5} {:>10.2} {:>10.2}",
            r.variant, r.mse, r.mae, r.mse_degradation_pct, r.mae_degradation_pct
        );
    }
    out
}

pub fn ablate(args: &AblateArgs) -> Result<(), CliError> {
    let base = args.overrides.resolve()?;
    let horizons = horizons_or_default(&args.horizons, &base)?;
    let dir = base.run_dir("ablate");
    let jobs: Vec<(usize, &str, usize)> = Ablation::VARIANTS
        .iter()
        .enumerate()
        .flat_map(|(i, v)| horizons.iter().map(move |&h| (i, *v, h)))
        .collect();
    let results: Vec<Result<(usize, usize, ForecastReport), CliError>> = jobs
        .par_iter()
        .map(|&(i, variant, h)| {
            let mut cfg = base.clone();
            cfg.model.ablation = Ablation::from_variant(variant)?;
            cfg.model.horizon = h;
            cfg.validate()?;
            let r = train_once(&cfg, &dir.join(format!("{variant}-h{h}")), args.quiet, false)?;
            Ok((i, h, r.test))
        })
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        reports.push(r?);
    }

    let metrics = |i: usize| -> Vec<HorizonMetrics> {
        horizons
            .iter()
            .map(|&h| {
                let rep = &reports.iter().find(|(j, hh, _)| *j == i && *hh == h).expect("job ran").2;
                HorizonMetrics {
                    horizon: h,
                    mse: rep.mse,
                    mae: rep.mae,
                }
            })
            .collect()
    };
    let full = metrics(0);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let rows = Ablation::VARIANTS
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let per = metrics(i);
            let dm: Vec<f64> = per.iter().zip(&full).map(|(p, f)| 100.0 * (p.mse - f.mse) / f.mse).collect();
            let da: Vec<f64> = per.iter().zip(&full).map(|(p, f)| 100.0 * (p.mae - f.mae) / f.mae).collect();
            AblationRow {
                variant: v.to_string(),
                mse: mean(&per.iter().map(|p| p.mse).collect::<Vec<_>>()),
                mae: mean(&per.iter().map(|p| p.mae).collect::<Vec<_>>()),
                mse_degradation_pct: mean(&dm),
                mae_degradation_pct: mean(&da),
                per_horizon: per,
            }
        })
        .collect();
    let table = AblationTable {
        version: VERSION.to_string(),
        dataset: base.data.dataset_name(),
        horizons,
        config: base.echo_json(),
        rows,
    };
    let text = ablation_text(&table);
    write_json(&dir.join("ablation.json"), &table)?;
    write_file(&dir.join("ablation.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    FusionLayers,
    DwtLevels,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum)]
    pub axis: SweepAxis,
    /// Comma-separated axis values
    #[arg(long)]
    pub values: String,
    #[arg(long)]
    pub horizons: Option<String>,
    #[arg(long, short)]
    pub quiet: bool,
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = args.overrides.resolve()?;
    let values: Vec<usize> = parse_list(&args.values, "axis")?;
    let horizons = horizons_or_default(&args.horizons, &base)?;
    let dir = base.run_dir("sweep");
    let axis_name = match args.axis {
        SweepAxis::FusionLayers => "fusion_layers",
        SweepAxis::DwtLevels => "dwt_levels",
    };

    let mut jobs = Vec::new();
    for &v in &values {
        let mut cfg = base.clone();
        match args.axis {
            SweepAxis::FusionLayers => cfg.model.fusion_layers = v,
            SweepAxis::DwtLevels => cfg.model.dwt_levels = v,
        }
        if let Err(e) = cfg.validate() {
            eprintln!("warning: skipping {axis_name}={v}: {e}");
            continue;
        }
        for &h in &horizons {
            let mut c = cfg.clone();
            c.model.horizon = h;
            jobs.push((v, h, c));
        }
    }
    if jobs.is_empty() {
        return Err(CliError::config(format!("no valid {axis_name} values in '{}'", args.values)));
    }
    let results: Vec<(usize, usize, Result<ForecastReport, CliError>)> = jobs
        .par_iter()
        .map(|(v, h, cfg)| {
            let r = train_once(cfg, &dir.join(format!("{axis_name}-{v}-h{h}")), args.quiet, false);
            (*v, *h, r.map(|r| r.test))
        })
        .collect();

    let mut csv = String::from("axis_value,horizon,mse,mae\n");
    let mut ok = 0;
    for (v, h, r) in results {
        match r {
            Ok(rep) => {
                let _ = writeln!(csv, "{v},{h},{},{}", rep.mse, rep.mae);
                ok += 1;
            }
            Err(e) => eprintln!("warning: {axis_name}={v}, horizon {h} failed: {e}"),
        }
    }
    if ok == 0 {
        return Err(CliError {
            code: crate::exit::NUMERIC,
            message: "every sweep run failed".into(),
        });
    }
    let path = dir.join("sweep.csv");
    write_file(&path, csv.as_bytes())?;
    print!("{csv}");
    eprintln!("-> {}", path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV (first column `date`)
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    /// Channel name or zero-based index
    #[arg(long, default_value = "0")]
    pub channel: String,
    #[arg(long, default_value = "db4")]
    pub basis: String,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// First row of the analysed segment
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Segment length; defaults to the longest multiple of 2^levels available
    #[arg(long)]
    pub length: Option<usize>,
    /// Band coefficients as `band,index,value`; the resampled bands go to `<stem>_interp.csv`
    #[arg(long, value_name = "CSV")]
    pub out_csv: PathBuf,
}

pub fn decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let series = load_csv(&args.input).map_err(|e| CliError::data(format!("{}: {e}", args.input.display())))?;
    let c = match args.channel.parse::<usize>() {
        Ok(i) if i < series.channels() => i,
        _ => series
            .channel_index(&args.channel)
            .ok_or_else(|| CliError::config(format!("no channel '{}'", args.channel)))?,
    };
    if args.levels == 0 || args.levels >= 32 {
        return Err(CliError::config(format!("levels must be in 1..32, got {}", args.levels)));
    }
    let basis = make_basis(&args.basis)?;
    let block = 1usize << args.levels;
    let available = series.rows().saturating_sub(args.start);
    let len = args.length.unwrap_or(available / block * block);
    if len == 0 || len > available {
        return Err(CliError::config(format!(
            "segment of {len} rows from row {} does not fit {} rows",
            args.start,
            series.rows()
        )));
    }
    let x = &series.channel(c)[args.start..args.start + len];
    let pyramid = wavedec(x, &basis, args.levels)?;
    let names = pyramid.band_names();

    let mut bands = String::from("band,index,value\n");
    let mut resampled = Vec::with_capacity(names.len());
    for (name, coeffs) in names.iter().zip(&pyramid.coeffs) {
        for (i, v) in coeffs.iter().enumerate() {
            let _ = writeln!(bands, "{name},{i},{v}");
        }
        resampled.push(interp_linear(coeffs, len)?);
    }
    write_file(&args.out_csv, bands.as_bytes())?;

    let mut interp = String::from("index");
    for n in &names {
        let _ = write!(interp, ",{n}");
    }
    interp.push('\n');
    for i in 0..len {
        let _ = write!(interp, "{}", args.start + i);
        for b in &resampled {
            let _ = write!(interp, ",{}", b[i]);
        }
        interp.push('\n');
    }
    let stem = args.out_csv.file_stem().and_then(|s| s.to_str()).unwrap_or("bands");
    let interp_path = args.out_csv.with_file_name(format!("{stem}_interp.csv"));
    write_file(&interp_path, interp.as_bytes())?;

    for (name, coeffs) in names.iter().zip(&pyramid.coeffs) {
        let e: f64 = coeffs.iter().map(|v| v * v).sum();
        println!("{name:<6} len {:>6}  energy {e:.6}", coeffs.len());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "sine")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 4000)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Comma-separated sinusoid periods, in samples
    #[arg(long, default_value = "24")]
    pub periods: String,
    /// Comma-separated amplitudes matching `periods`
    #[arg(long, default_value = "1")]
    pub amplitudes: String,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub bursts: usize,
    #[arg(long, default_value_t = 16)]
    pub burst_len: usize,
    #[arg(long, default_value_t = 4.0)]
    pub burst_period: f64,
    #[arg(long, default_value_t = 3.0)]
    pub burst_amplitude: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub trend_slope: f64,
    #[arg(long, value_name = "CSV")]
    pub out_csv: PathBuf,
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.length < 2 || args.channels == 0 {
        return Err(CliError::config("length must be ≥ 2 and channels ≥ 1"));
    }
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(CliError::config(format!("noise must be non-negative, got {}", args.noise)));
    }
    let periods: Vec<f64> = parse_list(&args.periods, "period")?;
    if periods.iter().any(|p| !(*p > 0.0)) || !(args.burst_period > 0.0) {
        return Err(CliError::config("periods must be positive"));
    }
    let spec = SynthSpec {
        kind: args.kind,
        length: args.length,
        channels: args.channels,
        seed: args.seed,
        periods,
        amplitudes: parse_list(&args.amplitudes, "amplitude")?,
        noise: args.noise,
        bursts: args.bursts,
        burst_len: args.burst_len,
        burst_period: args.burst_period,
        burst_amplitude: args.burst_amplitude,
        trend_slope: args.trend_slope,
    };
    let series = generate(&spec);
    write_file(&args.out_csv, to_csv(&series).as_bytes())?;
    if spec.kind == SynthKind::SinePlusTransient {
        for (c, starts) in series.burst_starts.iter().enumerate() {
            println!("ch{c} bursts at {starts:?}");
        }
    }
    Ok(())
}

//! CSV ingestion, per-channel z-scoring, chronological splits and
//! channel-independent sliding windows.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to per-channel standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// A multivariate series as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub timestamps: Vec<String>,
    /// Row-major `rows × C`.
    pub values: Vec<f64>,
    pub channel_names: Vec<String>,
}

impl RawSeries {
    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        let n = self.channels();
        self.values.iter().skip(c).step_by(n).copied().collect()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }
}

/// Reads a CSV whose first column is `date` and whose remaining columns are
/// numeric channels.
pub fn load_csv(path: &Path) -> Result<RawSeries> {
    let f = std::fs::File::open(path)?;
    parse_csv(f)
}

pub fn parse_csv<R: Read>(reader: R) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || headers.get(0).map_or(true, str::is_empty) {
        return Err(Error::Format("missing header row".into()));
    }
    if !headers[0].eq_ignore_ascii_case("date") {
        return Err(Error::Format(format!(
            "first column must be 'date', found '{}'",
            &headers[0]
        )));
    }
    let channel_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if channel_names.is_empty() {
        return Err(Error::Format("no numeric channels after 'date'".into()));
    }
    let c = channel_names.len();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.len() != c + 1 {
            return Err(Error::Parse {
                row,
                column: rec.len(),
                message: format!("expected {} fields, found {}", c + 1, rec.len()),
            });
        }
        timestamps.push(rec[0].to_string());
        for (j, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("'{cell}' in column '{}' is not a number", &headers[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("non-finite value '{cell}' in column '{}'", &headers[j]),
                });
            }
            values.push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    Ok(RawSeries {
        timestamps,
        values,
        channel_names,
    })
}

/// Which split convention a dataset follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// 0.6 / 0.2 / 0.2
    Ett,
    /// 0.7 / 0.1 / 0.2
    Other,
}

impl DatasetKind {
    /// ETT-family files (`ETTh1.csv`, `ETTm2.csv`, …) by name, everything else `Other`.
    pub fn infer(path: &Path) -> Self {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if stem.to_ascii_lowercase().starts_with("ett") {
            DatasetKind::Ett
        } else {
            DatasetKind::Other
        }
    }

    pub fn fractions(self) -> SplitFractions {
        match self {
            DatasetKind::Ett => SplitFractions { train: 0.6, val: 0.2 },
            DatasetKind::Other => SplitFractions { train: 0.7, val: 0.1 },
        }
    }
}

/// Train and validation shares; the test split takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }
}

/// Exclusive row boundaries of the three chronological splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_end: usize,
    pub val_end: usize,
    pub test_end: usize,
}

impl SplitSpec {
    /// Row range a split's windows are drawn from. Validation and test
    /// segments reach `lookback` rows back into the preceding split so their
    /// first target sits on the boundary.
    pub fn segment(&self, split: Split, lookback: usize) -> (usize, usize) {
        match split {
            Split::Train => (0, self.train_end),
            Split::Val => (self.train_end.saturating_sub(lookback), self.val_end),
            Split::Test => (self.val_end.saturating_sub(lookback), self.test_end),
        }
    }

    /// Windows per channel in `split`.
    pub fn windows_per_channel(&self, split: Split, lookback: usize, horizon: usize) -> usize {
        let (start, end) = self.segment(split, lookback);
        (end - start + 1).saturating_sub(lookback + horizon)
    }
}

pub fn make_splits(rows: usize, kind: DatasetKind, lookback: usize, horizon: usize) -> Result<SplitSpec> {
    make_splits_with(rows, kind.fractions(), lookback, horizon)
}

pub fn make_splits_with(
    rows: usize,
    fractions: SplitFractions,
    lookback: usize,
    horizon: usize,
) -> Result<SplitSpec> {
    let SplitFractions { train, val } = fractions;
    if !(train > 0.0 && val > 0.0 && train + val < 1.0) {
        return Err(Error::Config(format!(
            "split fractions train={train}, val={val} must be positive and sum below 1"
        )));
    }
    let train_end = (rows as f64 * train).round() as usize;
    let val_end = (rows as f64 * (train + val)).round() as usize;
    let spec = SplitSpec {
        train_end,
        val_end,
        test_end: rows,
    };
    if !(0 < train_end && train_end < val_end && val_end < rows) || train_end < lookback {
        return Err(Error::Config(format!(
            "{rows} rows cannot be split for lookback {lookback} and horizon {horizon}"
        )));
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        if spec.windows_per_channel(split, lookback, horizon) == 0 {
            return Err(Error::Config(format!(
                "{split} split ({rows} rows total) is too short for lookback {lookback} + horizon {horizon}"
            )));
        }
    }
    Ok(spec)
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fits on rows `0..train_end` only.
pub fn fit_scaler(series: &RawSeries, train_end: usize) -> Scaler {
    let c = series.channels();
    let n = train_end.min(series.rows()).max(1) as f64;
    let mut mean = vec![0.0; c];
    for row in series.values.chunks_exact(c).take(train_end) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; c];
    for row in series.values.chunks_exact(c).take(train_end) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Scaler { mean, std }
}

/// Returns z-scored channels, one `Vec` per channel.
pub fn apply_scaler(series: &RawSeries, scaler: &Scaler) -> Vec<Vec<f64>> {
    (0..series.channels())
        .map(|c| {
            series
                .channel(c)
                .into_iter()
                .map(|v| (v - scaler.mean[c]) / scaler.std[c])
                .collect()
        })
        .collect()
}

/// Identifies one window: a channel and the row of its first input sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRef {
    pub channel: usize,
    pub t0: usize,
}

/// Borrowed view of one `(input, target)` pair.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub channel: usize,
    pub t0: usize,
}

/// Scaled channels plus split boundaries and window geometry.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub name: String,
    pub channels: Vec<Vec<f64>>,
    pub channel_names: Vec<String>,
    pub splits: SplitSpec,
    pub scaler: Scaler,
    pub lookback: usize,
    pub horizon: usize,
}

impl WindowedDataset {
    pub fn new(
        name: &str,
        series: &RawSeries,
        fractions: SplitFractions,
        lookback: usize,
        horizon: usize,
    ) -> Result<Self> {
        let splits = make_splits_with(series.rows(), fractions, lookback, horizon)?;
        let scaler = fit_scaler(series, splits.train_end);
        Ok(WindowedDataset {
            name: name.to_string(),
            channels: apply_scaler(series, &scaler),
            channel_names: series.channel_names.clone(),
            splits,
            scaler,
            lookback,
            horizon,
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn num_windows(&self, split: Split) -> usize {
        self.num_channels() * self.splits.windows_per_channel(split, self.lookback, self.horizon)
    }

    /// All windows of `split` in chronological order (by start row, then channel).
    pub fn windows(&self, split: Split) -> Vec<WindowRef> {
        let (start, _) = self.splits.segment(split, self.lookback);
        let per = self.splits.windows_per_channel(split, self.lookback, self.horizon);
        let c = self.num_channels();
        (0..per)
            .flat_map(|i| (0..c).map(move |channel| WindowRef { channel, t0: start + i }))
            .collect()
    }

    pub fn window(&self, w: WindowRef) -> Window<'_> {
        let ch = &self.channels[w.channel];
        Window {
            x: &ch[w.t0..w.t0 + self.lookback],
            y: &ch[w.t0 + self.lookback..w.t0 + self.lookback + self.horizon],
            channel: w.channel,
            t0: w.t0,
        }
    }

    /// Batches over `split`. Training order is shuffled by `seed`; validation
    /// and test stay chronological. The final partial batch is kept.
    pub fn window_iter(
        &self,
        split: Split,
        batch_size: usize,
        seed: u64,
    ) -> impl Iterator<Item = Vec<Window<'_>>> + '_ {
        let mut refs = self.windows(split);
        if split == Split::Train {
            refs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let bs = batch_size.max(1);
        let batches: Vec<Vec<WindowRef>> = refs.chunks(bs).map(<[_]>::to_vec).collect();
        batches
            .into_iter()
            .map(move |b| b.into_iter().map(|w| self.window(w)).collect())
    }
}

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

pub const SUPPORTED_BASES: &[&str] = &["haar", "db4"];

/// Daubechies 4 (8-tap) decomposition low-pass filter.
const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    pub name: String,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl WaveletBasis {
    /// Builds the full bank from a low-pass filter via the quadrature-mirror
    /// relation `h[k] = (−1)^(k+1) · g[F−1−k]`.
    fn from_lowpass(name: &str, dec_lo: Vec<f64>) -> Self {
        let f = dec_lo.len();
        let dec_hi: Vec<f64> = (0..f)
            .map(|k| if k % 2 == 0 { -dec_lo[f - 1 - k] } else { dec_lo[f - 1 - k] })
            .collect();
        let rec_lo = dec_lo.iter().rev().copied().collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        WaveletBasis {
            name: name.to_string(),
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }

    pub fn taps(&self) -> usize {
        self.dec_lo.len()
    }

    /// Largest deviation from the orthonormal filter-bank identities.
    pub fn identity_residual(&self) -> f64 {
        let g = &self.dec_lo;
        let h = &self.dec_hi;
        let f = g.len();
        let mut worst = (g.iter().sum::<f64>() - 2f64.sqrt()).abs();
        worst = worst.max(h.iter().sum::<f64>().abs());
        for shift in (0..f).step_by(2) {
            let target = if shift == 0 { 1.0 } else { 0.0 };
            let gg: f64 = (0..f - shift).map(|k| g[k] * g[k + shift]).sum();
            let hh: f64 = (0..f - shift).map(|k| h[k] * h[k + shift]).sum();
            worst = worst.max((gg - target).abs()).max((hh - target).abs());
        }
        for shift in (0..f).step_by(2) {
            let gh: f64 = (0..f - shift).map(|k| g[k] * h[k + shift]).sum();
            let hg: f64 = (0..f - shift).map(|k| h[k] * g[k + shift]).sum();
            worst = worst.max(gh.abs()).max(hg.abs());
        }
        for k in 0..f {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            worst = worst.max((h[k] - sign * g[f - 1 - k]).abs());
        }
        worst
    }
}

/// Looks up a named basis and verifies its filter identities.
pub fn make_basis(name: &str) -> Result<WaveletBasis> {
    let basis = match name {
        "haar" => WaveletBasis::from_lowpass("haar", vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
        "db4" => WaveletBasis::from_lowpass("db4", DB4_DEC_LO.to_vec()),
        other => {
            return Err(Error::Config(format!(
                "unknown wavelet basis '{other}'; supported: {}",
                SUPPORTED_BASES.join(", ")
            )))
        }
    };
    let residual = basis.identity_residual();
    if residual > 1e-14 {
        return Err(Error::Config(format!(
            "embedded filters for '{name}' violate orthonormality by {residual:e}"
        )));
    }
    Ok(basis)
}

/// Coefficients ordered `[cA_J, cD_J, …, cD_1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub coeffs: Vec<Vec<f64>>,
    pub level: usize,
    pub original_len: usize,
}

impl WaveletPyramid {
    pub fn num_bands(&self) -> usize {
        self.coeffs.len()
    }

    /// `cA3`, `cD3`, `cD2`, `cD1` style labels in storage order.
    pub fn band_names(&self) -> Vec<String> {
        let j = self.level;
        std::iter::once(format!("cA{j}"))
            .chain((1..=j).rev().map(|l| format!("cD{l}")))
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c * c).sum()
    }
}

/// One analysis step with circular extension.
///
/// `cA[k] = Σ_j g[j] · x[(2k + F/2 − j) mod N]`, and likewise for `cD` with
/// `h`. This is the PyWavelets `periodization` alignment. For haar this gives `cA[k] = (x[2k] + x[2k+1])/√2` and
/// `cD[k] = (x[2k] − x[2k+1])/√2`.
pub fn dwt_level(x: &[f64], basis: &WaveletBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n < 2 || n % 2 != 0 {
        return Err(Error::Input(format!(
            "dwt_level needs an even length of at least 2, got {n}"
        )));
    }
    let f = basis.taps();
    let half = n / 2;
    let mut ca = vec![0.0; half];
    let mut cd = vec![0.0; half];
    // keeps the index non-negative even when the filter wraps more than once
    let lift = n * (f / n + 1);
    for k in 0..half {
        let base = 2 * k + f / 2 + lift;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..f {
            let xi = x[(base - j) % n];
            a += basis.dec_lo[j] * xi;
            d += basis.dec_hi[j] * xi;
        }
        ca[k] = a;
        cd[k] = d;
    }
    Ok((ca, cd))
}

/// Transpose of [`dwt_level`]; exact inverse because the periodised bank is
/// orthonormal.
pub fn idwt_level(ca: &[f64], cd: &[f64], basis: &WaveletBasis) -> Result<Vec<f64>> {
    if ca.len() != cd.len() || ca.is_empty() {
        return Err(Error::Input(format!(
            "band length mismatch: approximation {} vs detail {}",
            ca.len(),
            cd.len()
        )));
    }
    let n = 2 * ca.len();
    let f = basis.taps();
    let mut x = vec![0.0; n];
    let lift = n * (f / n + 1);
    for k in 0..ca.len() {
        let base = 2 * k + f / 2 + lift;
        for j in 0..f {
            x[(base - j) % n] += basis.dec_lo[j] * ca[k] + basis.dec_hi[j] * cd[k];
        }
    }
    Ok(x)
}

pub fn wavedec(x: &[f64], basis: &WaveletBasis, levels: usize) -> Result<WaveletPyramid> {
    if levels == 0 {
        return Err(Error::Input("wavedec needs at least one level".into()));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::Input(format!("decomposition level {levels} too large")))?;
    if x.is_empty() || x.len() % block != 0 {
        return Err(Error::Input(format!(
            "signal length {} must be a positive multiple of 2^{levels} = {block}",
            x.len()
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut approx = x.to_vec();
    for _ in 0..levels {
        let (ca, cd) = dwt_level(&approx, basis)?;
        details.push(cd);
        approx = ca;
    }
    let mut coeffs = Vec::with_capacity(levels + 1);
    coeffs.push(approx);
    coeffs.extend(details.into_iter().rev());
    Ok(WaveletPyramid {
        coeffs,
        level: levels,
        original_len: x.len(),
    })
}

pub fn waverec(p: &WaveletPyramid, basis: &WaveletBasis) -> Result<Vec<f64>> {
    if p.coeffs.len() != p.level + 1 || p.level == 0 {
        return Err(Error::Input(format!(
            "pyramid of level {} must hold {} bands, found {}",
            p.level,
            p.level + 1,
            p.coeffs.len()
        )));
    }
    for (i, band) in p.coeffs.iter().enumerate() {
        // band 0 and 1 share the coarsest length, band i ≥ 1 is cD_{J−i+1}
        let lvl = if i == 0 { p.level } else { p.level + 1 - i };
        if band.len() << lvl != p.original_len {
            return Err(Error::Input(format!(
                "band {i} has length {}, expected {}",
                band.len(),
                p.original_len >> lvl
            )));
        }
    }
    let mut approx = p.coeffs[0].clone();
    for detail in &p.coeffs[1..] {
        approx = idwt_level(&approx, detail, basis)?;
    }
    Ok(approx)
}

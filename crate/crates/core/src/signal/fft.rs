use std::f64::consts::PI;

use num_complex::Complex64;

/// Magnitudes of the non-negative-frequency DFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum {
    pub amps: Vec<f64>,
    pub source_len: usize,
}

/// Unnormalised forward DFT. Power-of-two lengths use recursive radix-2;
/// everything else goes through Bluestein's chirp-z convolution.
pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    if n.is_power_of_two() {
        radix2(input, false)
    } else {
        bluestein(input)
    }
}

/// Inverse DFT including the `1/N` factor.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len() as f64;
    let conj: Vec<Complex64> = input.iter().map(|c| c.conj()).collect();
    fft(&conj).into_iter().map(|c| c.conj() / n).collect()
}

fn radix2(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    if n == 1 {
        return vec![x[0]];
    }
    let even: Vec<Complex64> = x.iter().step_by(2).copied().collect();
    let odd: Vec<Complex64> = x.iter().skip(1).step_by(2).copied().collect();
    let fe = radix2(&even, inverse);
    let fo = radix2(&odd, inverse);
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n / 2 {
        let tw = Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64) * fo[k];
        out[k] = fe[k] + tw;
        out[k + n / 2] = fe[k] - tw;
    }
    out
}

fn bluestein(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let m = (2 * n - 1).next_power_of_two();
    // chirp w[k] = exp(−iπk²/n); k² is reduced mod 2n so the angle stays small
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
            Complex64::from_polar(1.0, -PI * k2 / n as f64)
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = x[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    let fa = radix2(&a, false);
    let fb = radix2(&b, false);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(p, q)| p * q).collect();
    let conv = radix2(&prod, true);
    let scale = 1.0 / m as f64;
    (0..n).map(|k| conv[k] * scale * chirp[k]).collect()
}

/// `|RFFT(x)|` for bins `0..=⌊L/2⌋`.
pub fn rfft_amplitude(x: &[f64]) -> AmplitudeSpectrum {
    let spec = fft(&x.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
    let bins = x.len() / 2 + 1;
    AmplitudeSpectrum {
        amps: spec.iter().take(bins).map(|c| c.norm()).collect(),
        source_len: x.len(),
    }
}

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Variance stabiliser added inside the layer-norm square root.
pub const LN_EPS: f64 = 1e-5;

/// Four-lane dot product; the fixed lane order keeps results bit-reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Per-row statistics kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LayerNormCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm(x: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<Tensor> {
    let d = x.last_dim();
    if d == 0 || gamma.len() != d || beta.len() != d {
        return Err(Error::dim("layer_norm", &[d], &[gamma.len(), beta.len()]));
    }
    let rows = x.len() / d;
    let (y, _) = layer_norm_rows(x.data(), rows, gamma.data(), beta.data());
    Tensor::from_vec(x.shape(), y)
}

pub fn layer_norm_rows(
    x: &[f64],
    rows: usize,
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, LayerNormCache) {
    let d = gamma.len();
    assert_eq!(x.len(), rows * d, "layer_norm extent");
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = Vec::with_capacity(rows);
    for ((xr, yr), hr) in x
        .chunks_exact(d)
        .zip(y.chunks_exact_mut(d))
        .zip(xhat.chunks_exact_mut(d))
    {
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        for i in 0..d {
            hr[i] = (xr[i] - mean) * is;
            yr[i] = hr[i] * gamma[i] + beta[i];
        }
        inv_std.push(is);
    }
    (y, LayerNormCache { xhat, inv_std })
}

/// Returns `dL/dx`; accumulates into `dgamma` / `dbeta`.
pub fn layer_norm_backward_rows(
    dy: &[f64],
    cache: &LayerNormCache,
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let d = gamma.len();
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for (r, ((dyr, hr), dxr)) in dy
        .chunks_exact(d)
        .zip(cache.xhat.chunks_exact(d))
        .zip(dx.chunks_exact_mut(d))
        .enumerate()
    {
        for i in 0..d {
            dgamma[i] += dyr[i] * hr[i];
            dbeta[i] += dyr[i];
            dxhat[i] = dyr[i] * gamma[i];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dh = dot(&dxhat, hr) / d as f64;
        let is = cache.inv_std[r];
        for i in 0..d {
            dxr[i] = is * (dxhat[i] - mean_d - hr[i] * mean_dh);
        }
    }
    dx
}

pub fn softmax(x: &Tensor) -> Tensor {
    let k = x.last_dim().max(1);
    let mut out = x.clone();
    out.clear_grad();
    for row in out.data_mut().chunks_exact_mut(k) {
        softmax_in_place(row);
    }
    out
}

/// Max-subtracted softmax over one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Overwrites `dy` (upstream gradient w.r.t. the softmax output `p`) with the
/// gradient w.r.t. the logits.
pub fn softmax_backward_in_place(p: &[f64], dy: &mut [f64]) {
    let s = dot(p, dy);
    for (d, pi) in dy.iter_mut().zip(p) {
        *d = pi * (*d - s);
    }
}

pub fn gelu_scalar(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

/// d/dx of x·Φ(x).
pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    cdf + x * pdf
}

pub fn gelu(x: &Tensor) -> Tensor {
    map(x, gelu_scalar)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    map(x, sigmoid_scalar)
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_vec(x.shape(), x.data().iter().map(|&v| f(v)).collect())
        .expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::vector(v.to_vec())
    }

    #[test]
    fn layer_norm_examples() {
        let one = t(&[1.0, 1.0, 1.0]);
        let zero = t(&[0.0, 0.0, 0.0]);
        assert_eq!(layer_norm(&t(&[1.0, 1.0, 1.0]), &one, &zero).unwrap().data(), &[0.0; 3]);

        let y = layer_norm(&t(&[-1.0, 1.0]), &t(&[1.0, 1.0]), &t(&[0.0, 0.0])).unwrap();
        assert!((y.data()[0] + 1.0).abs() < 1e-4 && (y.data()[1] - 1.0).abs() < 1e-4);

        let y = layer_norm(&t(&[0.0, 0.0]), &t(&[1.0, 1.0]), &t(&[7.0, 7.0])).unwrap();
        assert_eq!(y.data(), &[7.0, 7.0]);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&t(&[0.0, 0.0])).data(), &[0.5, 0.5]);
        let p = softmax(&t(&[1000.0, 1000.0, 1000.0]));
        for v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&t(&[0.0, 3f64.ln()]));
        assert!((p.data()[0] - 0.25).abs() < 1e-15);
        assert!((p.data()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gelu_examples() {
        assert_eq!(gelu_scalar(0.0), 0.0);
        assert!((gelu_scalar(10.0) - 10.0).abs() < 1e-6);
        assert!((gelu_scalar(1.0) - 0.841_344_7).abs() < 1e-6);
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let s = sigmoid_scalar(50.0);
        assert!(s >= 1.0 - 1e-20 && s <= 1.0);
        assert!((sigmoid_scalar(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid_scalar(-50.0) > 0.0);
    }

    #[test]
    fn gelu_grad_matches_central_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu_scalar(x + h) - gelu_scalar(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn layer_norm_backward_matches_central_difference() {
        let x = [0.3, -1.2, 2.0, 0.7];
        let gamma = [1.1, 0.9, -0.5, 2.0];
        let beta = [0.0, 0.1, 0.2, 0.3];
        let w = [0.5, -1.0, 2.0, 0.25];
        let loss = |x: &[f64]| -> f64 {
            let (y, _) = layer_norm_rows(x, 1, &gamma, &beta);
            dot(&y, &w)
        };
        let (_, cache) = layer_norm_rows(&x, 1, &gamma, &beta);
        let (mut dg, mut db) = ([0.0; 4], [0.0; 4]);
        let dx = layer_norm_backward_rows(&w, &cache, &gamma, &mut dg, &mut db);
        for i in 0..4 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let fd = (loss(&xp) - loss(&xm)) / 2e-6;
            assert!((fd - dx[i]).abs() < 1e-7, "i={i} fd={fd} dx={}", dx[i]);
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            logits in prop::collection::vec(-30.0f64..30.0, 1..12),
            c in -100.0f64..100.0,
        ) {
            let p = softmax(&t(&logits));
            let sum: f64 = p.data().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.data().iter().all(|&v| v >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|v| v + c).collect();
            let q = softmax(&t(&shifted));
            for (a, b) in p.data().iter().zip(q.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn layer_norm_standardises_non_constant_rows(
            x in prop::collection::vec(-50.0f64..50.0, 2..40),
        ) {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
            // unit variance holds up to var / (var + eps)
            prop_assume!(var > 0.1);
            let d = x.len();
            let (_, cache) = layer_norm_rows(&x, 1, &vec![1.0; d], &vec![0.0; d]);
            let m = cache.xhat.iter().sum::<f64>() / d as f64;
            let v = cache.xhat.iter().map(|h| (h - m).powi(2)).sum::<f64>() / d as f64;
            prop_assert!(m.abs() < 1e-10);
            prop_assert!((v - 1.0).abs() < 1e-4);
        }
    }
}

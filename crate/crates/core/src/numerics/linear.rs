use rand::Rng;

use super::ops::dot;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Affine map `y = x·Wᵀ + b` with `W` stored `[out × in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearLayer {
    /// Fan-in uniform initialisation, zero bias.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        LinearLayer {
            weight: Tensor::from_vec(&[out_dim, in_dim], w).expect("extent computed above"),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LinearLayer {
            weight: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn from_parts(weight: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let out_dim = weight.len();
        let in_dim = weight.first().map_or(0, Vec::len);
        if bias.len() != out_dim || weight.iter().any(|r| r.len() != in_dim) {
            return Err(Error::dim(
                "LinearLayer::from_parts",
                &[out_dim, in_dim],
                &[bias.len()],
            ));
        }
        Ok(LinearLayer {
            weight: Tensor::from_vec(&[out_dim, in_dim], weight.concat())?,
            bias: Tensor::vector(bias),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    /// Applies the layer over every leading index of `x`.
    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if x.last_dim() != self.in_dim() || x.shape().is_empty() {
            return Err(Error::dim(
                "linear_apply",
                &[self.out_dim(), self.in_dim()],
                x.shape(),
            ));
        }
        let rows = x.len() / self.in_dim();
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = self.out_dim();
        Tensor::from_vec(&shape, self.forward_rows(x.data(), rows))
    }

    /// `x` holds `rows` contiguous input vectors.
    pub fn forward_rows(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let (n_in, n_out) = (self.in_dim(), self.out_dim());
        assert_eq!(x.len(), rows * n_in, "linear input extent");
        let w = self.weight.data();
        let b = self.bias.data();
        let mut y = vec![0.0; rows * n_out];
        for (xr, yr) in x.chunks_exact(n_in).zip(y.chunks_exact_mut(n_out)) {
            for ((yo, wo), bo) in yr.iter_mut().zip(w.chunks_exact(n_in)).zip(b) {
                *yo = dot(xr, wo) + bo;
            }
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx` when asked.
    pub fn backward_rows(
        &self,
        x: &[f64],
        dy: &[f64],
        rows: usize,
        grad: &mut LinearLayer,
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        let (n_in, n_out) = (self.in_dim(), self.out_dim());
        assert_eq!(x.len(), rows * n_in, "linear input extent");
        assert_eq!(dy.len(), rows * n_out, "linear upstream extent");
        {
            let gw = grad.weight.data_mut();
            for (xr, dyr) in x.chunks_exact(n_in).zip(dy.chunks_exact(n_out)) {
                for (gwo, &d) in gw.chunks_exact_mut(n_in).zip(dyr) {
                    if d != 0.0 {
                        axpy(gwo, d, xr);
                    }
                }
            }
        }
        {
            let gb = grad.bias.data_mut();
            for dyr in dy.chunks_exact(n_out) {
                for (g, d) in gb.iter_mut().zip(dyr) {
                    *g += d;
                }
            }
        }
        if !want_dx {
            return None;
        }
        let w = self.weight.data();
        let mut dx = vec![0.0; rows * n_in];
        for (dxr, dyr) in dx.chunks_exact_mut(n_in).zip(dy.chunks_exact(n_out)) {
            for (wo, &d) in w.chunks_exact(n_in).zip(dyr) {
                if d != 0.0 {
                    axpy(dxr, d, wo);
                }
            }
        }
        Some(dx)
    }
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

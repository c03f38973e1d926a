/// Stabiliser added to the instance standard deviation.
pub const REVIN_EPS: f64 = 1e-5;

/// Per-window statistics needed to undo the normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevinStats {
    pub mu: f64,
    /// Population standard deviation of the window.
    pub sigma: f64,
    pub eps: f64,
}

impl RevinStats {
    pub fn scale(&self) -> f64 {
        self.sigma + self.eps
    }
}

pub fn revin_normalize(x: &[f64]) -> (Vec<f64>, RevinStats) {
    let n = x.len().max(1) as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let stats = RevinStats {
        mu,
        sigma: var.sqrt(),
        eps: REVIN_EPS,
    };
    let s = stats.scale();
    (x.iter().map(|v| (v - mu) / s).collect(), stats)
}

pub fn revin_denormalize(y_norm: &[f64], stats: &RevinStats) -> Vec<f64> {
    let s = stats.scale();
    y_norm.iter().map(|v| v * s + stats.mu).collect()
}

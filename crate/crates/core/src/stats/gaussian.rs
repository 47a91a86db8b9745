//! Univariate Gaussian model for scalar pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest variance used in any likelihood; keeps constant regions finite.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianParams {
    /// Variance with the floor applied.
    pub fn floored_variance(&self) -> f64 {
        self.sigma2.max(VARIANCE_FLOOR)
    }

    pub fn nll(&self, x: f64) -> f64 {
        let v = self.floored_variance();
        let d = x - self.mu;
        0.5 * (2.0 * std::f64::consts::PI * v).ln() + d * d / (2.0 * v)
    }
}

/// Sample mean and biased (divide-by-n) variance.
pub fn gaussian_mle(values: &[f64]) -> Result<GaussianParams> {
    if values.is_empty() {
        return Err(Error::Estimation("no samples for Gaussian fit".into()));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let sigma2 = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    Ok(GaussianParams { mu, sigma2 })
}

/// Negative log-likelihood of `values` at their own ML parameters.
pub fn gaussian_nll_at_mle(values: &[f64]) -> Result<(GaussianParams, f64)> {
    let params = gaussian_mle(values)?;
    let nll = values.iter().map(|&x| params.nll(x)).sum();
    Ok((params, nll))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy and test parameters. Defaults are the published experiment
/// settings (λ = 0.15, ε = 25, α = 0.05, σ_d = 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Weight of the inter-modal energy; also the GLR threshold.
    pub lambda: f64,
    /// Weight of the boundary-length term.
    pub epsilon: f64,
    /// False-positive rate of the misalignment test.
    pub alpha: f64,
    /// Displacement scale of the misalignment model, in pixels.
    pub sigma_d: f64,
    pub seed: u64,
    /// Add the boundary energy of the split, `2ε × cut length`, to the GLR
    /// threshold.
    pub glrt_boundary_penalty: bool,
    /// Seed pairs tried by region growing.
    pub growing_restarts: usize,
    /// Sweep cap for boundary competition.
    pub max_sweeps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lambda: 0.15,
            epsilon: 25.0,
            alpha: 0.05,
            sigma_d: 3.0,
            seed: 0,
            glrt_boundary_penalty: true,
            growing_restarts: 5,
            max_sweeps: 50,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.lambda) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !finite_nonneg(self.epsilon) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.sigma_d > 0.0 && self.sigma_d.is_finite()) {
            return Err(Error::Config(format!("sigma_d must be > 0, got {}", self.sigma_d)));
        }
        if self.growing_restarts == 0 {
            return Err(Error::Config("growing_restarts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

//! Misalignment test: a split that only shaves a thin sliver off a region is
//! indistinguishable from a displaced boundary.
//!
//! The region is modelled as a disc of radius `r` and its counterpart as the
//! same disc displaced by `d`, with `d` Rayleigh distributed under an
//! isotropic Gaussian displacement. `f_r(d)` is the fraction of the disc not
//! covered by its displaced copy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementModel {
    /// Per-axis standard deviation of the displacement, pixels.
    pub sigma_d: f64,
}

impl DisplacementModel {
    pub fn new(sigma_d: f64) -> Result<Self> {
        if !(sigma_d > 0.0) || !sigma_d.is_finite() {
            return Err(Error::Domain(format!("sigma_d must be positive, got {sigma_d}")));
        }
        Ok(DisplacementModel { sigma_d })
    }

    /// Displacement length exceeded with probability `alpha`:
    /// `σ_d sqrt(2 ln(1/α))`.
    pub fn rayleigh_quantile(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(self.sigma_d * (2.0 * (1.0 / alpha).ln()).sqrt())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// `1 − (2/π) acos(d/2r) + (d/(π r²)) sqrt(r² − d²/4)` for `0 ≤ d ≤ 2r`.
pub fn f_r(d: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    if !(0.0..=2.0 * r).contains(&d) {
        return Err(Error::Domain(format!("displacement {d} outside [0, {}]", 2.0 * r)));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    if d == 2.0 * r {
        return Ok(1.0);
    }
    let pi = std::f64::consts::PI;
    let v = 1.0 - (2.0 / pi) * (d / (2.0 * r)).acos() + d / (pi * r * r) * (r * r - 0.25 * d * d).max(0.0).sqrt();
    Ok(v.clamp(0.0, 1.0))
}

/// Inverse of [`f_r`] by bisection on `[0, 2r]`.
pub fn f_r_inv(t: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("ratio {t} outside [0, 1]")));
    }
    let (mut lo, mut hi) = (0.0, 2.0 * r);
    while hi - lo > 1e-12 * r.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f_r(mid, r)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive size-ratio threshold `η = f_r(min(Q⁻¹(α), 2r))`.
pub fn misalignment_threshold(r: f64, model: &DisplacementModel, alpha: f64) -> Result<f64> {
    check_radius(r)?;
    let q = model.rayleigh_quantile(alpha)?;
    f_r(q.min(2.0 * r), r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        for r in [0.5, 3.0, 20.0] {
            assert_eq!(f_r(0.0, r).unwrap(), 0.0);
            assert_eq!(f_r(2.0 * r, r).unwrap(), 1.0);
        }
        assert!(f_r(41.0, 20.0).is_err());
        assert!(f_r_inv(1.5, 20.0).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        for &d in &[0.1, 3.0, 7.3, 20.0, 39.9] {
            let t = f_r(d, 20.0).unwrap();
            assert!((f_r_inv(t, 20.0).unwrap() - d).abs() < 1e-8);
        }
    }

    #[test]
    fn quantile_and_threshold() {
        let m = DisplacementModel::new(3.0).unwrap();
        let q = m.rayleigh_quantile(0.05).unwrap();
        assert!((q - 7.343).abs() < 1e-3);
        let eta = misalignment_threshold(20.0, &m, 0.05).unwrap();
        assert!((eta - 0.2324).abs() < 1e-3, "{eta}");
        // tiny regions cannot pass
        assert_eq!(misalignment_threshold(2.0, &m, 0.05).unwrap(), 1.0);
        assert!(misalignment_threshold(20.0, &m, 0.999_999).unwrap() < 1e-2);
    }
}

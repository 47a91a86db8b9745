//! Closed-form generalized likelihood ratios for "one population" against
//! "two populations with a shared spread".

use crate::error::{Error, Result};
use crate::field::{self, Quat};
use crate::stats::{gaussian_mle, kappa_from_rbar, log_cp, QUAT_DIM, VARIANCE_FLOOR};

fn check_sides(n_plus: usize, n_minus: usize) -> Result<()> {
    if n_plus == 0 || n_minus == 0 || n_plus + n_minus < 2 {
        return Err(Error::Estimation(format!(
            "GLR needs both sides non-empty, got {n_plus} and {n_minus}"
        )));
    }
    Ok(())
}

/// `log Λ` for a mean shift between two Gaussian samples with a common
/// variance: `(n/2) log(σ̂₀² / ((n₊/n)σ̂₊² + (n₋/n)σ̂₋²))`.
pub fn glr_gaussian(values_plus: &[f64], values_minus: &[f64]) -> Result<f64> {
    check_sides(values_plus.len(), values_minus.len())?;
    let n_plus = values_plus.len() as f64;
    let n_minus = values_minus.len() as f64;
    let n = n_plus + n_minus;
    let plus = gaussian_mle(values_plus)?;
    let minus = gaussian_mle(values_minus)?;
    let pooled_mean = (n_plus * plus.mu + n_minus * minus.mu) / n;
    // Total variance = within + between, avoiding a second pass.
    let within = (n_plus * plus.sigma2 + n_minus * minus.sigma2) / n;
    let between =
        (n_plus * (plus.mu - pooled_mean).powi(2) + n_minus * (minus.mu - pooled_mean).powi(2)) / n;
    let s0 = (within + between).max(VARIANCE_FLOOR);
    let s1 = within.max(VARIANCE_FLOOR);
    Ok(0.5 * n * (s0 / s1).ln())
}

fn resultant(samples: &[Quat]) -> Quat {
    let mut r = [0.0; 4];
    for x in samples {
        field::add_assign(&mut r, x);
    }
    r
}

/// `log Λ` for a mean-direction change between two VMF samples with a
/// common concentration. Samples must already be symmetry-reduced.
pub fn glr_vmf(samples_plus: &[Quat], samples_minus: &[Quat]) -> Result<f64> {
    check_sides(samples_plus.len(), samples_minus.len())?;
    let rp = resultant(samples_plus);
    let rm = resultant(samples_minus);
    let mut r0 = rp;
    field::add_assign(&mut r0, &rm);
    Ok(glr_vmf_from_resultants(
        samples_plus.len() + samples_minus.len(),
        field::norm(&rp) + field::norm(&rm),
        field::norm(&r0),
    ))
}

/// `n log c(κ̂₁) − n log c(κ̂₀) + κ̂₁ R₁ − κ̂₀ R₀` with `R₁ = ‖r₊‖ + ‖r₋‖`
/// and `R₀ = ‖r₊ + r₋‖`.
pub(crate) fn glr_vmf_from_resultants(n: usize, r1: f64, r0: f64) -> f64 {
    let nf = n as f64;
    let k1 = kappa_from_rbar((r1 / nf).min(1.0), QUAT_DIM);
    let k0 = kappa_from_rbar((r0 / nf).min(1.0), QUAT_DIM);
    let lc1 = log_cp(k1, QUAT_DIM).expect("kappa is non-negative");
    let lc0 = log_cp(k0, QUAT_DIM).expect("kappa is non-negative");
    (nf * (lc1 - lc0) + k1 * r1 - k0 * r0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_constant_sides_give_zero() {
        assert_eq!(glr_gaussian(&[4.0; 5], &[4.0; 7]).unwrap(), 0.0);
    }

    #[test]
    fn empty_side_is_an_error() {
        assert!(glr_gaussian(&[1.0, 2.0], &[]).is_err());
        assert!(glr_vmf(&[], &[[1.0, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn two_point_split() {
        // σ̂₀² = 25, within = 0 → floored
        let v = glr_gaussian(&[0.0], &[10.0]).unwrap();
        assert!((v - (25.0 / VARIANCE_FLOOR).ln()).abs() < 1e-9);
    }

    #[test]
    fn duplicated_vmf_sample_gives_zero() {
        let s = vec![
            field::normalize(&[1.0, 0.1, 0.0, 0.0]).unwrap(),
            field::normalize(&[1.0, -0.1, 0.05, 0.0]).unwrap(),
            field::normalize(&[1.0, 0.0, 0.0, 0.2]).unwrap(),
        ];
        assert!(glr_vmf(&s, &s).unwrap().abs() < 1e-9);
    }
}

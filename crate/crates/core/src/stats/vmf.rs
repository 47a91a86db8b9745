//! Von Mises–Fisher model on S³ with crystal symmetry.
//!
//! The symmetric density is the equal-weight mixture of `φ(x; Q_m μ, κ)` over
//! the group operators. For fitting and testing, samples are reduced to the
//! symmetric copy closest to the current mean (sign included, since `q` and
//! `-q` are the same orientation), after which the single-VMF machinery
//! applies.

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bessel::{bessel_ratio, ln_gamma_half_integer, log_bessel_i};
use super::symmetry::SymmetryGroup;
use crate::error::{Error, Result};
use crate::field::{self, Quat};
use crate::rng::{self, Rng};

/// Concentration cap; regions with (near) identical samples saturate here.
pub const KAPPA_MAX: f64 = 1e4;

/// Dimension of the quaternion sphere's ambient space.
pub const QUAT_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmfParams {
    pub mu: Quat,
    pub kappa: f64,
}

impl VmfParams {
    pub fn new(mu: Quat, kappa: f64) -> Result<Self> {
        if (field::norm(&mu) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("mean direction must be a unit quaternion".into()));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("concentration {kappa} is not >= 0")));
        }
        Ok(VmfParams { mu, kappa })
    }
}

fn check_dim(p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("dimension {p} < 2")));
    }
    Ok(p as f64)
}

/// `ln c_p(κ)`, the log normaliser of the VMF density on `S^{p-1}`.
pub fn log_cp(kappa: f64, p: usize) -> Result<f64> {
    let pf = check_dim(p)?;
    if !(kappa >= 0.0) {
        return Err(Error::Domain(format!("negative concentration {kappa}")));
    }
    let nu = 0.5 * pf - 1.0;
    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    if kappa == 0.0 {
        // limit: ν ln 2 + ln Γ(ν + 1) − (p/2) ln 2π, the uniform density
        return Ok(nu * 2f64.ln() + ln_gamma_half_integer(nu + 1.0) - 0.5 * pf * log_2pi);
    }
    Ok(nu * kappa.ln() - 0.5 * pf * log_2pi - log_bessel_i(nu, kappa))
}

/// `A_p(κ) = I_{p/2}(κ) / I_{p/2-1}(κ)`, the expected cosine to the mean.
pub fn a_p(kappa: f64, p: usize) -> f64 {
    bessel_ratio(0.5 * p as f64 - 1.0, kappa)
}

fn a_p_derivative(kappa: f64, a: f64, p: usize) -> f64 {
    1.0 - a * a - (p as f64 - 1.0) / kappa * a
}

/// Inverse of [`a_p`]: the ML concentration for mean resultant length
/// `rbar`. Starts from the Banerjee approximation and refines with
/// safeguarded Newton steps.
pub fn ap_inv(rbar: f64, p: usize) -> Result<f64> {
    let pf = check_dim(p)?;
    if !(0.0..1.0).contains(&rbar) {
        return Err(Error::Domain(format!(
            "mean resultant length {rbar} outside [0, 1)"
        )));
    }
    if rbar == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut kappa = rbar * (pf - rbar * rbar) / (1.0 - rbar * rbar);
    for _ in 0..100 {
        let a = a_p(kappa, p);
        let f = a - rbar;
        if f.abs() <= 1e-12 {
            return Ok(kappa);
        }
        if f > 0.0 {
            hi = hi.min(kappa);
        } else {
            lo = lo.max(kappa);
        }
        let step = f / a_p_derivative(kappa, a, p);
        let mut next = kappa - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * kappa.max(1.0) };
        }
        if (next - kappa).abs() <= 1e-15 * kappa.max(1.0) {
            return Ok(next);
        }
        kappa = next;
    }
    Ok(kappa)
}

/// [`ap_inv`] with the result clamped to [`KAPPA_MAX`]; degenerate
/// resultants (`rbar` at or above `A_p(KAPPA_MAX)`) saturate.
pub fn kappa_from_rbar(rbar: f64, p: usize) -> f64 {
    let rbar = rbar.max(0.0);
    if rbar >= a_p(KAPPA_MAX, p) {
        return KAPPA_MAX;
    }
    ap_inv(rbar, p).map(|k| k.min(KAPPA_MAX)).unwrap_or(KAPPA_MAX)
}

/// `ln φ(x; μ, κ)` for the plain VMF on S³.
pub fn vmf_logpdf(x: &Quat, params: &VmfParams) -> f64 {
    log_cp(params.kappa, QUAT_DIM).expect("valid kappa") + params.kappa * field::dot(&params.mu, x)
}

/// `ln Σ_m (1/M) φ(x; Q_m μ, κ)`. When the operators are closed only up to
/// sign, the sum runs over `±Q_m` so the density is invariant under every
/// operator.
pub fn vmf_mixture_logpdf(x: &Quat, params: &VmfParams, group: &SymmetryGroup) -> f64 {
    let mut exps: Vec<f64> = (0..group.len())
        .map(|k| params.kappa * field::dot(&group.apply(k, &params.mu), x))
        .collect();
    if group.needs_sign_doubling() {
        let negated: Vec<f64> = exps.iter().map(|e| -e).collect();
        exps.extend(negated);
    }
    log_cp(params.kappa, QUAT_DIM).expect("valid kappa") + log_sum_exp(&exps) - (exps.len() as f64).ln()
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Symmetric copy of `x` closest to `mu`, sign-flipped onto `mu`'s
/// hemisphere.
pub fn reduce_one(x: &Quat, mu: &Quat, group: &SymmetryGroup) -> Quat {
    let mut best = *x;
    let mut best_dot = f64::NEG_INFINITY;
    for m in 0..group.len() {
        let y = group.apply(m, x);
        let d = field::dot(mu, &y);
        if d.abs() > best_dot {
            best_dot = d.abs();
            best = if d < 0.0 { [-y[0], -y[1], -y[2], -y[3]] } else { y };
        }
    }
    best
}

/// Replaces each sample by its symmetric equivalent closest to `mu`.
pub fn symmetry_reduce(samples: &[Quat], mu: &Quat, group: &SymmetryGroup) -> Vec<Quat> {
    samples.iter().map(|x| reduce_one(x, mu, group)).collect()
}

/// `Σ_i max_m |μᵀ Q_m x_i|`, the resultant length after reduction.
pub fn reduced_alignment(samples: &[Quat], mu: &Quat, group: &SymmetryGroup) -> f64 {
    samples
        .iter()
        .map(|x| field::dot(mu, &reduce_one(x, mu, group)))
        .sum()
}

fn resultant(samples: &[Quat]) -> Quat {
    let mut r = [0.0; 4];
    for x in samples {
        field::add_assign(&mut r, x);
    }
    r
}

/// Alternates reduction and re-normalised resultant from `start`. The
/// alignment `Σ max_m |μᵀ Q_m x|` never decreases. Returns the final mean and
/// its alignment.
pub fn refine_reduced_mean(samples: &[Quat], start: &Quat, group: &SymmetryGroup) -> (Quat, f64) {
    let mut mu = *start;
    let mut score = reduced_alignment(samples, &mu, group);
    for _ in 0..100 {
        let reduced = symmetry_reduce(samples, &mu, group);
        let Some(next) = field::normalize(&resultant(&reduced)) else {
            break;
        };
        let next_score = reduced_alignment(samples, &next, group);
        if next_score <= score + 1e-12 * score.abs().max(1.0) {
            if next_score > score {
                mu = next;
                score = next_score;
            }
            break;
        }
        mu = next;
        score = next_score;
    }
    (mu, score)
}

/// Symmetric copy of `x` closest to the identity orientation.
fn to_identity_zone(x: &Quat, group: &SymmetryGroup) -> Quat {
    reduce_one(x, &[1.0, 0.0, 0.0, 0.0], group)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Extra restarts from randomly chosen samples, on top of the
    /// identity-zone initialisation.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-8,
            max_iter: 200,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub params: VmfParams,
    /// Mixture log-likelihood after initialisation and after every
    /// iteration of the winning run.
    pub log_likelihood: Vec<f64>,
}

/// Mixture log-likelihood over the sign-doubled operator set.
pub fn mixture_log_likelihood(samples: &[Quat], params: &VmfParams, group: &SymmetryGroup) -> f64 {
    let lc = log_cp(params.kappa, QUAT_DIM).expect("valid kappa");
    let log_components = ((2 * group.len()) as f64).ln();
    let mut exps = vec![0.0; 2 * group.len()];
    samples
        .iter()
        .map(|x| {
            for m in 0..group.len() {
                let d = params.kappa * field::dot(&params.mu, &group.apply_transpose(m, x));
                exps[2 * m] = d;
                exps[2 * m + 1] = -d;
            }
            lc + log_sum_exp(&exps) - log_components
        })
        .sum()
}

fn em_run(samples: &[Quat], group: &SymmetryGroup, init: VmfParams, opts: &EmOptions) -> Result<EmFit> {
    let n = samples.len() as f64;
    let m_ops = group.len();
    // Q_mᵀ x_i, computed once.
    let aligned: Vec<Vec<Quat>> = samples
        .iter()
        .map(|x| (0..m_ops).map(|m| group.apply_transpose(m, x)).collect())
        .collect();
    let mut params = init;
    let mut trace = vec![mixture_log_likelihood(samples, &params, group)];
    let mut exps = vec![0.0; 2 * m_ops];
    for _ in 0..opts.max_iter {
        let mut r = [0.0; 4];
        for ys in &aligned {
            for (m, y) in ys.iter().enumerate() {
                let d = params.kappa * field::dot(&params.mu, y);
                exps[2 * m] = d;
                exps[2 * m + 1] = -d;
            }
            let lse = log_sum_exp(&exps);
            for (m, y) in ys.iter().enumerate() {
                let w = (exps[2 * m] - lse).exp() - (exps[2 * m + 1] - lse).exp();
                for k in 0..4 {
                    r[k] += w * y[k];
                }
            }
        }
        let norm = field::norm(&r);
        let Some(mu) = field::normalize(&r) else {
            return Err(Error::Estimation("EM resultant vanished".into()));
        };
        let kappa = kappa_from_rbar((norm / n).min(1.0), QUAT_DIM);
        params = VmfParams { mu, kappa };
        let ll = mixture_log_likelihood(samples, &params, group);
        let gain = ll - trace[trace.len() - 1];
        trace.push(ll);
        if gain.abs() < opts.tol {
            break;
        }
    }
    Ok(EmFit {
        params,
        log_likelihood: trace,
    })
}

fn init_from_mean(samples: &[Quat], mu0: Quat, group: &SymmetryGroup) -> Result<VmfParams> {
    let reduced = symmetry_reduce(samples, &mu0, group);
    let r = resultant(&reduced);
    let mu = field::normalize(&r)
        .ok_or_else(|| Error::Estimation("samples have a vanishing resultant".into()))?;
    let rbar = field::norm(&r) / samples.len() as f64;
    if rbar < 1e-9 {
        return Err(Error::Estimation("samples have a vanishing resultant".into()));
    }
    Ok(VmfParams {
        mu,
        kappa: kappa_from_rbar(rbar.min(1.0), QUAT_DIM),
    })
}

/// Fits the symmetric VMF mixture by EM. The first run starts from the
/// resultant of the samples mapped next to the identity orientation; further
/// runs start from randomly chosen samples. The run with the highest final
/// likelihood wins.
pub fn vmf_mixture_em(samples: &[Quat], group: &SymmetryGroup, opts: &EmOptions) -> Result<EmFit> {
    if samples.len() < 2 {
        return Err(Error::Estimation(format!(
            "EM needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let zone: Vec<Quat> = samples.iter().map(|x| to_identity_zone(x, group)).collect();
    let zone_mean = field::normalize(&resultant(&zone))
        .ok_or_else(|| Error::Estimation("samples have a vanishing resultant".into()))?;
    let mut starts = vec![zone_mean];
    let mut rng = rng::stream(opts.seed, &[0xE5]);
    for _ in 0..opts.restarts {
        starts.push(samples[rng.random_range(0..samples.len())]);
    }
    let mut best: Option<EmFit> = None;
    for start in starts {
        let init = init_from_mean(samples, start, group)?;
        let fit = em_run(samples, group, init, opts)?;
        let better = match &best {
            None => true,
            Some(b) => fit.log_likelihood.last() > b.log_likelihood.last(),
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Estimation("no EM run completed".into()))
}

/// Draws from VMF(μ, κ) on S³ with Wood's rejection sampler.
pub fn sample_vmf(params: &VmfParams, rng: &mut Rng) -> Quat {
    let dim = QUAT_DIM as f64;
    let kappa = params.kappa;
    let w = if kappa == 0.0 {
        2.0 * rng.random::<f64>() - 1.0
    } else {
        let b = (dim - 1.0) / (2.0 * kappa + (4.0 * kappa * kappa + (dim - 1.0).powi(2)).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + (dim - 1.0) * (1.0 - x0 * x0).ln();
        let beta = Beta::new(0.5 * (dim - 1.0), 0.5 * (dim - 1.0)).expect("valid beta");
        loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random();
            if kappa * w + (dim - 1.0) * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        }
    };
    // uniform direction orthogonal to e1
    let v = loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            break [v[0] / n, v[1] / n, v[2] / n];
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    let x = [w, s * v[0], s * v[1], s * v[2]];
    householder_to(&params.mu, &x)
}

/// Applies the reflection that sends e1 to `mu`.
fn householder_to(mu: &Quat, x: &Quat) -> Quat {
    let u = [1.0 - mu[0], -mu[1], -mu[2], -mu[3]];
    let uu = field::dot(&u, &u);
    if uu < 1e-24 {
        return *x;
    }
    let f = 2.0 * field::dot(&u, x) / uu;
    [x[0] - f * u[0], x[1] - f * u[1], x[2] - f * u[2], x[3] - f * u[3]]
}

/// Uniformly distributed unit quaternion.
pub fn sample_uniform_quat(rng: &mut Rng) -> Quat {
    loop {
        let q: Quat = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Some(u) = field::normalize(&q) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_log_density() -> f64 {
        -(2.0 * std::f64::consts::PI * std::f64::consts::PI).ln()
    }

    #[test]
    fn log_cp_limit_is_uniform_density() {
        assert!((log_cp(0.0, 4).unwrap() - uniform_log_density()).abs() < 1e-14);
        assert!((log_cp(1e-9, 4).unwrap() - uniform_log_density()).abs() < 1e-9);
        assert!(log_cp(-1.0, 4).is_err());
    }

    #[test]
    fn ap_inv_edges() {
        assert_eq!(ap_inv(0.0, 4).unwrap(), 0.0);
        assert!(ap_inv(1.0, 4).is_err());
        assert!(ap_inv(-0.1, 4).is_err());
        assert_eq!(kappa_from_rbar(1.0, 4), KAPPA_MAX);
    }

    #[test]
    fn mixture_is_uniform_at_zero_concentration() {
        let g = SymmetryGroup::cubic();
        let p = VmfParams::new([1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let x = field::normalize(&[0.1, 0.7, -0.2, 0.3]).unwrap();
        assert!((vmf_mixture_logpdf(&x, &p, &g) - uniform_log_density()).abs() < 1e-12);
    }

    #[test]
    fn trivial_group_reduces_to_plain_vmf() {
        let g = SymmetryGroup::trivial();
        let p = VmfParams::new(field::normalize(&[0.2, 0.1, 0.9, -0.3]).unwrap(), 7.5).unwrap();
        let x = field::normalize(&[0.1, 0.7, -0.2, 0.3]).unwrap();
        assert_eq!(vmf_mixture_logpdf(&x, &p, &g), vmf_logpdf(&x, &p));
        assert_eq!(symmetry_reduce(&[x], &p.mu, &g)[0], if field::dot(&x, &p.mu) < 0.0 { [-x[0], -x[1], -x[2], -x[3]] } else { x });
    }

    #[test]
    fn em_on_identical_samples_saturates() {
        let q = field::normalize(&[0.4, -0.1, 0.3, 0.8]).unwrap();
        let fit = vmf_mixture_em(&[q; 20], &SymmetryGroup::trivial(), &EmOptions::default()).unwrap();
        assert!(field::angle_deg(&fit.params.mu, &q) < 1e-4);
        assert_eq!(fit.params.kappa, KAPPA_MAX);
        assert!(vmf_mixture_em(&[q], &SymmetryGroup::trivial(), &EmOptions::default()).is_err());
    }

    #[test]
    fn wood_sampler_mean_resultant_matches_a_p() {
        let mut rng = rng::stream(3, &[]);
        let p = VmfParams::new(field::normalize(&[0.5, 0.5, -0.5, 0.1]).unwrap(), 20.0).unwrap();
        let n = 20_000;
        let mean_cos: f64 = (0..n).map(|_| field::dot(&sample_vmf(&p, &mut rng), &p.mu)).sum::<f64>() / n as f64;
        assert!((mean_cos - a_p(20.0, 4)).abs() < 3e-3, "{mean_cos}");
    }
}

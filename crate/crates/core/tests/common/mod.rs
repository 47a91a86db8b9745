//! Reference computations shared by the oracle and acceptance targets,
//! written independently of the library's closed forms.
#![allow(dead_code)]

use coreg::field::{dot, normalize, Quat};
use coreg::stats::VARIANCE_FLOOR;

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log I_ν(x) for integer ν from the power series, summed in log space.
pub fn log_bessel_series(nu: usize, x: f64) -> f64 {
    let half = (x / 2.0).ln();
    let mut t = nu as f64 * half - (1..=nu).map(|i| (i as f64).ln()).sum::<f64>();
    let mut terms = vec![t];
    let mut peak = t;
    for k in 1..20_000 {
        t += 2.0 * half - (k as f64).ln() - ((k + nu) as f64).ln();
        terms.push(t);
        peak = peak.max(t);
        // past the peak the terms fall geometrically
        if t < peak - 60.0 {
            break;
        }
    }
    log_sum_exp(&terms)
}

pub fn log_vmf_oracle(x: &Quat, mu: &Quat, kappa: f64) -> f64 {
    log_c4_oracle(kappa) + kappa * dot(mu, x)
}

/// log c_4(κ) = log κ − 2 log 2π − log I_1(κ).
pub fn log_c4_oracle(kappa: f64) -> f64 {
    kappa.ln() - 2.0 * (2.0 * std::f64::consts::PI).ln() - log_bessel_series(1, kappa)
}

pub fn a4_oracle(kappa: f64) -> f64 {
    (log_bessel_series(2, kappa) - log_bessel_series(1, kappa)).exp()
}

pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn gaussian_loglik(xs: &[f64], mu: f64, var: f64) -> f64 {
    xs.iter()
        .map(|x| -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu).powi(2) / (2.0 * var))
        .sum()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// log Λ as the difference of the two maximised log-likelihoods, with the
/// shared H₁ variance estimated from both sides.
pub fn glr_gaussian_oracle(plus: &[f64], minus: &[f64]) -> f64 {
    let all: Vec<f64> = plus.iter().chain(minus).copied().collect();
    let n = all.len() as f64;
    let m0 = mean(&all);
    let v0 = (all.iter().map(|x| (x - m0).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);
    let (mp, mm) = (mean(plus), mean(minus));
    let within = plus.iter().map(|x| (x - mp).powi(2)).sum::<f64>() + minus.iter().map(|x| (x - mm).powi(2)).sum::<f64>();
    let v1 = (within / n).max(VARIANCE_FLOOR);
    gaussian_loglik(plus, mp, v1) + gaussian_loglik(minus, mm, v1) - gaussian_loglik(&all, m0, v0)
}

pub fn resultant(xs: &[Quat]) -> Quat {
    let mut r = [0.0; 4];
    for x in xs {
        for k in 0..4 {
            r[k] += x[k];
        }
    }
    r
}

pub fn norm(q: &Quat) -> f64 {
    dot(q, q).sqrt()
}

/// Per-sample log-likelihoods under the ML fits of both hypotheses (H₁
/// shares one concentration between the two sides).
pub fn glr_vmf_oracle(plus: &[Quat], minus: &[Quat]) -> f64 {
    let all: Vec<Quat> = plus.iter().chain(minus).copied().collect();
    let n = all.len() as f64;
    let r0 = resultant(&all);
    let (mu0, k0) = (normalize(&r0).unwrap(), bisect(a4_oracle, norm(&r0) / n, 1e-12, 2e3));
    let (rp, rm) = (resultant(plus), resultant(minus));
    let k1 = bisect(a4_oracle, (norm(&rp) + norm(&rm)) / n, 1e-12, 2e3);
    let (mp, mm) = (normalize(&rp).unwrap(), normalize(&rm).unwrap());
    let l1: f64 = plus.iter().map(|x| log_vmf_oracle(x, &mp, k1)).sum::<f64>()
        + minus.iter().map(|x| log_vmf_oracle(x, &mm, k1)).sum::<f64>();
    let l0: f64 = all.iter().map(|x| log_vmf_oracle(x, &mu0, k0)).sum();
    l1 - l0
}


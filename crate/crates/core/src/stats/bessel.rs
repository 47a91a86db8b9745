//! Log-domain modified Bessel functions of the first kind.
//!
//! `ln I_ν(x)` is evaluated with the ascending power series for small
//! arguments and with the Hankel asymptotic expansion (truncated at its
//! smallest term) for large ones. Both stay in the log domain, so arguments
//! of 1e4 and beyond are fine.

const SERIES_LIMIT: f64 = 12.0;

/// `ln Γ(x)` for `x` a positive multiple of one half.
pub(crate) fn ln_gamma_half_integer(x: f64) -> f64 {
    debug_assert!(x > 0.0 && (2.0 * x).fract() == 0.0);
    let (mut acc, mut z) = if x.fract() == 0.0 {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    while z < x {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

fn series_limit(nu: f64) -> f64 {
    SERIES_LIMIT.max(2.0 * nu * nu)
}

/// `ln I_ν(x)` for `ν ≥ 0` a multiple of one half and `x ≥ 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && (2.0 * nu).fract() == 0.0, "order must be a half-integer");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x < series_limit(nu) {
        log_series(nu, x)
    } else {
        log_asymptotic(nu, x)
    }
}

fn log_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    nu * (0.5 * x).ln() - ln_gamma_half_integer(nu + 1.0) + sum.ln()
}

fn log_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (8.0 * k * x);
        if next == 0.0 || next.abs() >= term.abs() {
            break;
        }
        sum += next;
        if next.abs() < 1e-17 * sum.abs() {
            break;
        }
        term = next;
        k += 1.0;
    }
    x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
}

/// `I_{ν+1}(x) / I_ν(x)`.
pub fn bessel_ratio(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (log_bessel_i(nu + 1.0, x) - log_bessel_i(nu, x)).exp()
}

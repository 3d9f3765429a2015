//! Logarithm of the modified Bessel function of the first kind.

use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

const SERIES_TOL: f64 = 1e-17;

/// `log I_ν(x)` for `ν >= 0`, `x >= 0`.
///
/// Uses the ascending power series summed in the log domain below
/// `max(30, 2ν²)` and the large-argument Hankel expansion above it. The
/// expansion terminates for half-integer orders, so it is exact there up to
/// the dropped `e^{-2x}` companion series.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x < switchover(nu) {
        log_series(nu, x)
    } else {
        log_asymptotic(nu, x)
    }
}

fn switchover(nu: f64) -> f64 {
    (2.0 * nu * nu).max(30.0)
}

/// `Σ_k (x/2)^{2k+ν} / (k! Γ(k+ν+1))`.
pub(crate) fn log_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let lead = nu * half.ln() - ln_gamma_plus_one(nu);
    // Terms relative to the leading one, rescaled whenever they grow too large;
    // the leading term is kept apart so `log(1 + tail)` stays accurate for tiny x.
    let mut term = 1.0f64;
    let mut head = 1.0f64;
    let mut tail = 0.0f64;
    let mut log_scale = 0.0f64;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        if term > 1e250 {
            head /= term;
            tail /= term;
            log_scale += term.ln();
            term = 1.0;
        }
        tail += term;
        if term < SERIES_TOL * (head + tail) && k > half {
            break;
        }
    }
    if log_scale == 0.0 {
        lead + tail.ln_1p()
    } else {
        lead + log_scale + (head + tail).ln()
    }
}

fn ln_gamma_plus_one(nu: f64) -> f64 {
    if nu.fract() == 0.0 && nu < 170.0 {
        ln_factorial(nu as u64)
    } else {
        ln_gamma(nu + 1.0)
    }
}

/// `e^x / √(2πx) Σ_k (-1)^k a_k(ν) / x^k`.
pub(crate) fn log_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..=50 {
        let j = (2 * k - 1) as f64;
        let next = -term * (mu - j * j) / (k as f64 * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term == 0.0 || term.abs() < SERIES_TOL * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
}

/// `I_{ν+1}(x) / I_ν(x)` and `1 - I_{ν+1}(x) / I_ν(x)`, the latter without
/// cancellation for large `x`.
pub fn bessel_ratio(nu: f64, x: f64) -> (f64, f64) {
    if x < 1e-8 {
        let r = x / (2.0 * nu + 2.0);
        return (r, 1.0 - r);
    }
    let diff = log_bessel_i(nu + 1.0, x) - log_bessel_i(nu, x);
    (diff.exp(), -diff.exp_m1())
}

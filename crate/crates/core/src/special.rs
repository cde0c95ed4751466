//! Scalar special functions: log-gamma, the regularized incomplete gamma
//! functions, and the Poisson pmf/cdf built on top of them.
//!
//! Everything here is plain f64 with no state, accurate to ~1e-14 relative
//! in the parameter ranges this crate uses (Poisson means up to ~1e6).

use std::f64::consts::PI;

/// Natural log of the gamma function, ln Γ(x), for x > 0.
///
/// Lanczos approximation (g = 7, 9 coefficients) with the reflection
/// formula for x < 0.5.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) Γ(1-x) = π / sin(πx)
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        const COEFFS: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        let z = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Lower regularized incomplete gamma P(a, x) = γ(a, x) / Γ(a), a > 0, x ≥ 0.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain: a > 0, x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain: a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Series expansion of P(a, x), converges fast for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = a;
    for _ in 0..4000 {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction for Q(a, x) (modified Lentz), converges for x ≥ a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..4000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// P(X ≤ k) for X ~ Poisson(mean).
///
/// Uses the identity P(X ≤ k) = Q(k+1, mean).
pub fn poisson_cdf(k: u64, mean: f64) -> f64 {
    assert!(mean >= 0.0, "poisson_cdf: mean must be nonnegative");
    if mean == 0.0 {
        return 1.0;
    }
    gamma_q(k as f64 + 1.0, mean)
}

/// P(X ≥ k) for X ~ Poisson(mean).
pub fn poisson_sf(k: u64, mean: f64) -> f64 {
    assert!(mean >= 0.0, "poisson_sf: mean must be nonnegative");
    if k == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    // P(X >= k) = P(k, mean) (lower regularized gamma)
    gamma_p(k as f64, mean)
}

/// pmf of Poisson(mean) at k, evaluated in the log domain.
pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    assert!(mean >= 0.0, "poisson_pmf: mean must be nonnegative");
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp()
}

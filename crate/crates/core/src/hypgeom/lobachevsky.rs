//! The Lobachevsky function Λ(x) = −∫₀ˣ log|2 sin t| dt.
//!
//! Evaluated through the Clausen function, Λ(x) = ½·Cl₂(2x), with
//! Cl₂ reduced to (−π, π] and expanded as
//!
//! ```text
//! Cl₂(θ) = θ − θ·log|θ| + Σ_{k≥1} ζ(2k) / (k(2k+1)) · θ^{2k+1} / (2π)^{2k}
//! ```
//!
//! On the reduced interval the series ratio is at most 1/4, so 40 terms give
//! full double precision.

use std::f64::consts::PI;
use std::sync::OnceLock;

const TERMS: usize = 40;

/// Coefficients c_k = ζ(2k) / (k (2k+1) (2π)^{2k}) for k = 1..=TERMS.
fn coefficients() -> &'static [f64; TERMS] {
    static COEFFS: OnceLock<[f64; TERMS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut c = [0.0; TERMS];
        let two_pi = 2.0 * PI;
        for (i, slot) in c.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            let z = zeta_even(i + 1);
            *slot = z / (k * (2.0 * k + 1.0) * two_pi.powf(2.0 * k));
        }
        c
    })
}

/// ζ(2k) for k ≥ 1, by direct summation with an Euler–Maclaurin tail.
fn zeta_even(k: usize) -> f64 {
    if k == 1 {
        return PI * PI / 6.0;
    }
    let s = 2.0 * k as f64;
    let n_max = 64usize;
    // Sum the small terms first to limit rounding error.
    let mut sum = 0.0;
    for n in (1..=n_max).rev() {
        sum += (n as f64).powf(-s);
    }
    let n = n_max as f64;
    sum + n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
}

/// Clausen function Cl₂(θ) = −∫₀^θ log|2 sin(t/2)| dt.
pub fn clausen2(theta: f64) -> f64 {
    if !theta.is_finite() {
        return f64::NAN;
    }
    // Reduce to (−π, π]; Cl₂ is 2π-periodic and odd.
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t > PI {
        t -= two_pi;
    } else if t <= -PI {
        t += two_pi;
    }
    if t == 0.0 {
        return 0.0;
    }
    let sign = t.signum();
    let a = t.abs();
    let a2 = a * a;
    let mut pow = a * a2; // a^{2k+1} for k = 1
    let mut series = 0.0;
    for c in coefficients() {
        let term = c * pow;
        series += term;
        if term.abs() < 1e-18 * series.abs().max(1e-300) {
            break;
        }
        pow *= a2;
    }
    sign * (a - a * a.ln() + series)
}

/// Lobachevsky function Λ(x) = −∫₀ˣ log|2 sin t| dt (π-periodic, odd).
pub fn lobachevsky(x: f64) -> f64 {
    0.5 * clausen2(2.0 * x)
}

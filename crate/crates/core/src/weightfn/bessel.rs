//! Modified Bessel functions of the first kind for integer and half-integer order.
//!
//! Small arguments use the ascending power series, large arguments the Hankel
//! asymptotic expansion. For half-integer order the asymptotic series terminates and
//! the only neglected piece is the exponentially small `e^{-z}` branch.

use std::f64::consts::PI;

/// Crossover between the power series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 15.0;

const SERIES_RTOL: f64 = 1e-17;
const MAX_TERMS: usize = 500;

/// Gamma function at a positive multiple of 1/2.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    debug_assert!(
        twice >= 1.0 && (2.0 * x - twice).abs() < 1e-12,
        "x = {x} is not a half-integer"
    );
    let (mut acc, mut cur) = if twice as i64 % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while cur < x - 0.25 {
        acc *= cur;
        cur += 1.0;
    }
    acc
}

/// `I_ν(z) / z^ν` for `z ≥ 0` and `ν ≥ -1/2` a multiple of 1/2; finite at `z = 0`.
pub fn bessel_i_reduced(nu: f64, z: f64) -> f64 {
    if z <= SERIES_LIMIT {
        reduced_series(nu, z)
    } else {
        asymptotic(nu, z) / z.powf(nu)
    }
}

/// `I_ν(z)` for `z ≥ 0`.
pub fn bessel_i(nu: f64, z: f64) -> f64 {
    if z <= SERIES_LIMIT {
        if z == 0.0 {
            return if nu == 0.0 { 1.0 } else { 0.0 };
        }
        reduced_series(nu, z) * z.powf(nu)
    } else {
        asymptotic(nu, z)
    }
}

pub fn i0(z: f64) -> f64 {
    bessel_i(0.0, z)
}

pub fn i1(z: f64) -> f64 {
    bessel_i(1.0, z)
}

/// Σ_k (z²/4)^k / (2^ν k! Γ(k+ν+1)); every term is positive.
fn reduced_series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0 / (2f64.powf(nu) * gamma_half_integer(nu + 1.0));
    let mut sum = term;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + nu + 1.0));
        sum += term;
        if term < SERIES_RTOL * sum {
            break;
        }
    }
    sum
}

/// e^z / √(2πz) Σ_k (-1)^k a_k(ν) / z^k, truncated at the smallest term.
fn asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * z);
        if next == 0.0 {
            break;
        }
        if next.abs() > term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < SERIES_RTOL * sum.abs() {
            break;
        }
    }
    z.exp() / (2.0 * PI * z).sqrt() * sum
}

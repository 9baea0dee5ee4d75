//! Hankel function `H₀⁽¹⁾(x) = J₀(x) + i Y₀(x)` for real `x > 0`.
//!
//! Three regions: ascending series for `x ≤ 6`, Miller's backward recurrence
//! with the Neumann expansion of `Y₀` up to `x ≤ 25`, and the Hankel
//! asymptotic expansion beyond. The asymptotic form alone is only good to
//! about `1e-7` at `x = 8`, hence the middle region.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX: f64 = 6.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

pub fn hankel_h0(x: f64) -> Result<Complex64> {
    let (j0, y0) = bessel_jy0(x)?;
    Ok(Complex64::new(j0, y0))
}

/// `(J₀(x), Y₀(x))`.
pub fn bessel_jy0(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(if x <= SERIES_MAX {
        series(x)
    } else if x <= ASYMPTOTIC_MIN {
        miller(x)
    } else {
        asymptotic(x)
    })
}

/// `Y₀(x) − (2/π) ln(x/2) J₀(x)`, the part of `Y₀` that stays bounded as `x → 0`.
pub fn y0_regular(x: f64) -> Result<f64> {
    if x <= SERIES_MAX && x > 0.0 {
        let (_, _, reg) = series_parts(x);
        return Ok(reg);
    }
    let (j0, y0) = bessel_jy0(x)?;
    Ok(y0 - FRAC_2_PI * (0.5 * x).ln() * j0)
}

fn series_parts(x: f64) -> (f64, f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut j0 = 1.0;
    let mut harmonic = 0.0;
    let mut ysum = 0.0;
    for k in 1..60 {
        term *= -q / (k * k) as f64;
        harmonic += 1.0 / k as f64;
        j0 += term;
        ysum -= harmonic * term;
        if term.abs() < 1e-18 * j0.abs().max(1e-3) && k > 2 {
            break;
        }
    }
    let reg = FRAC_2_PI * (EULER_GAMMA * j0 + ysum);
    (j0, FRAC_2_PI * (0.5 * x).ln() * j0 + reg, reg)
}

fn series(x: f64) -> (f64, f64) {
    let (j0, y0, _) = series_parts(x);
    (j0, y0)
}

/// Backward recurrence for `J_n`, normalized by `J₀ + 2 Σ J_{2k} = 1`, and
/// `Y₀ = (2/π)[(ln(x/2) + γ) J₀ − 2 Σ (−1)^k J_{2k} / k]`.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x as usize + 40) / 2);
    let (mut next, mut cur) = (0.0, 1e-300);
    let mut norm = 0.0;
    let mut ysum = 0.0;
    let mut j0 = 0.0;
    for n in (0..start).rev() {
        // J_{n} = (2(n+1)/x) J_{n+1} − J_{n+2}
        let prev = 2.0 * (n + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if n == 0 {
            j0 = cur;
            norm += cur;
        } else if n % 2 == 0 {
            norm += 2.0 * cur;
            let k = (n / 2) as f64;
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            ysum += sign * cur / k;
        }
        if cur.abs() > 1e250 {
            next /= 1e250;
            cur /= 1e250;
            norm /= 1e250;
            ysum /= 1e250;
        }
    }
    let j0 = j0 / norm;
    let ysum = ysum / norm;
    (j0, FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 - 2.0 * ysum))
}

/// `H₀⁽¹⁾(x) ≈ √(2/(πx)) (P + iQ) e^{i(x − π/4)}`.
fn asymptotic(x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let eight_x = 8.0 * x;
    let mut last = f64::INFINITY;
    for m in 1..60 {
        let odd = (2 * m - 1) as f64;
        term *= -odd * odd / (m as f64 * eight_x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // t_m = a_m(0) / x^m; P collects (−1)^k t_{2k}, Q collects (−1)^k t_{2k+1}
        let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if m % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let amp = (2.0 / (PI * x)).sqrt();
    // sin/cos of x − π/4 via those of x, avoiding the rounding of the shift
    let (sx, cx) = x.sin_cos();
    let s = (sx - cx) * std::f64::consts::FRAC_1_SQRT_2;
    let c = (sx + cx) * std::f64::consts::FRAC_1_SQRT_2;
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

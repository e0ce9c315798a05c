//! First-kind Bessel functions and the zeros of `J0`.
//!
//! Self-contained evaluation: a power series for small arguments and
//! Miller's downward recurrence (normalized with `J0 + 2*sum J_{2k} = 1`)
//! elsewhere. No external special-function dependency.

use std::f64::consts::PI;

use crate::{Error, Result};

const MAX_ORDER: i32 = 200;
const MAX_ARG: f64 = 100.0;
const SERIES_CUTOVER: f64 = 9.0;

/// `J_n(x)` for `|n| <= 200`, `|x| <= 100`; absolute accuracy well below
/// `1e-12`. Uses `J_{-n}(x) = (-1)^n J_n(x)` and `J_n(-x) = (-1)^n J_n(x)`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    if order.abs() > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {order} outside +-{MAX_ORDER}")));
    }
    if !x.is_finite() || x.abs() > MAX_ARG {
        return Err(Error::Domain(format!("Bessel argument {x} outside +-{MAX_ARG}")));
    }
    let n = order.unsigned_abs() as usize;
    let mut sign = 1.0;
    if order < 0 && n % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && n % 2 == 1 {
        sign = -sign;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let value = if ax <= SERIES_CUTOVER { series(n, ax) } else { miller(n, ax) };
    Ok(sign * value)
}

/// The `k`-th positive zero of `J0`, `1 <= k <= 20`, accurate to `1e-10`:
/// McMahon's asymptotic guess refined by Newton iteration (`J0' = -J1`).
pub fn bessel_j0_zero(k: usize) -> Result<f64> {
    if k == 0 || k > 20 {
        return Err(Error::Domain(format!("J0 zero index {k} outside 1..=20")));
    }
    let beta = (k as f64 - 0.25) * PI;
    let mut x = beta + 1.0 / (8.0 * beta);
    for _ in 0..50 {
        let f = bessel_j(0, x)?;
        let slope = -bessel_j(1, x)?;
        let dx = f / slope;
        x -= dx;
        if dx.abs() < 1e-13 {
            break;
        }
    }
    Ok(x)
}

fn series(n: usize, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0_f64;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut largest = term.abs();
    for m in 1..400 {
        term *= -q / (m as f64 * (n + m) as f64);
        sum += term;
        largest = largest.max(term.abs());
        if term.abs() < 1e-17 * largest {
            break;
        }
    }
    sum
}

fn miller(n: usize, x: f64) -> f64 {
    let base = n.max(x.ceil() as usize);
    let mut start = base + 60 + x.ceil() as usize / 2;
    if start % 2 == 1 {
        start += 1;
    }
    let mut above = 0.0_f64; // trial J_{m+1}
    let mut cur = 1e-30_f64; // trial J_m, m = start
    let mut target = if n == start { cur } else { 0.0 };
    let mut norm = 2.0 * cur; // start is even
    let mut m = start;
    while m >= 1 {
        let below = (2.0 * m as f64 / x) * cur - above;
        above = cur;
        cur = below; // trial J_{m-1}
        let idx = m - 1;
        if idx == n {
            target = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            cur /= 1e250;
            above /= 1e250;
            norm /= 1e250;
            target /= 1e250;
        }
        m -= 1;
    }
    target / norm
}

//! Integer-order cylinder functions of real argument.
//!
//! Evaluation regimes for the order-0/1 building blocks:
//!
//! | argument        | J                       | Y                                   |
//! |-----------------|-------------------------|-------------------------------------|
//! | `x < 5`         | ascending series        | ascending series                    |
//! | `5 <= x < 30`   | Miller downward recurrence, normalised by `J0 + 2ΣJ2k = 1` | Neumann series in the Miller `J` values |
//! | `x >= 30`       | Hankel asymptotic expansion | Hankel asymptotic expansion     |
//!
//! Higher orders of `Y` come from upward recurrence, which is stable for the
//! dominant solution. Higher orders of `J` use the ascending series for small
//! arguments and the Miller sequence otherwise.

use num_complex::Complex;

use crate::error::{BinnError, Result};
use crate::scalar::Real;

/// Largest supported integer order.
pub const MAX_ORDER: usize = 100;

const SERIES_LIMIT: f64 = 5.0;
const ASYMPTOTIC_LIMIT: f64 = 30.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(BinnError::UnsupportedOrder {
            order: n,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Bessel function of the first kind `J_n(x)` for `x >= 0`.
pub fn bessel_j<T: Real>(n: usize, x: T) -> Result<T> {
    check_order(n)?;
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(BinnError::Domain(format!(
            "J_{n}({x}) requires finite x >= 0"
        )));
    }
    if x == T::zero() {
        return Ok(if n == 0 { T::one() } else { T::zero() });
    }
    Ok(j_unchecked(n, x))
}

/// Bessel function of the second kind `Y_n(x)` for `x > 0`.
pub fn bessel_y<T: Real>(n: usize, x: T) -> Result<T> {
    bessel_jy(n, x).map(|(_, y)| y)
}

/// Both `J_n(x)` and `Y_n(x)` for `x > 0`.
pub fn bessel_jy<T: Real>(n: usize, x: T) -> Result<(T, T)> {
    check_order(n)?;
    if !(x > T::zero()) || !x.is_finite() {
        return Err(BinnError::Domain(format!(
            "Y_{n}({x}) requires finite x > 0"
        )));
    }
    let [j0, j1, y0, y1] = cylinder01(x);
    let j = match n {
        0 => j0,
        1 => j1,
        _ => j_unchecked(n, x),
    };
    Ok((j, y_upward(n, x, y0, y1)))
}

/// Hankel function of the first kind `H_n^(1)(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1<T: Real>(n: usize, x: T) -> Result<Complex<T>> {
    let (j, y) = bessel_jy(n, x)?;
    Ok(Complex::new(j, y))
}

/// Derivative `dH_n^(1)/dx` from `H'_n = H_{n-1} - (n/x) H_n`, with `H'_0 = -H_1`.
pub fn hankel1_prime<T: Real>(n: usize, x: T) -> Result<Complex<T>> {
    if n == 0 {
        return Ok(-hankel1(1, x)?);
    }
    let lower = hankel1(n - 1, x)?;
    let h = hankel1(n, x)?;
    Ok(lower - h * (T::from_usize_lossy(n) / x))
}

/// Derivative `J'_n(x)` by the same recurrence as [`hankel1_prime`].
pub fn bessel_j_prime<T: Real>(n: usize, x: T) -> Result<T> {
    if n == 0 {
        return Ok(-bessel_j(1, x)?);
    }
    if x == T::zero() {
        return Ok(if n == 1 { T::cst(0.5) } else { T::zero() });
    }
    Ok(bessel_j(n - 1, x)? - bessel_j(n, x)? * (T::from_usize_lossy(n) / x))
}

/// `H_0^(1)(x)` and `H_1^(1)(x)` together, for kernel evaluation.
pub fn hankel01<T: Real>(x: T) -> Result<(Complex<T>, Complex<T>)> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(BinnError::Domain(format!(
            "H(x) requires finite x > 0, got {x}"
        )));
    }
    let [j0, j1, y0, y1] = cylinder01(x);
    Ok((Complex::new(j0, y0), Complex::new(j1, y1)))
}

/// `[J0, J1, Y0, Y1]` at `x > 0`.
pub(crate) fn cylinder01<T: Real>(x: T) -> [T; 4] {
    if x < T::cst(SERIES_LIMIT) {
        let j0 = j_series(0, x);
        let j1 = j_series(1, x);
        let (y0, y1) = y01_series(x, j0, j1);
        [j0, j1, y0, y1]
    } else if x < T::cst(ASYMPTOTIC_LIMIT) {
        let js = miller_sequence(1, x);
        let (y0, y1) = y01_neumann(x, &js);
        [js[0], js[1], y0, y1]
    } else {
        let (j0, y0) = asymptotic(0, x);
        let (j1, y1) = asymptotic(1, x);
        [j0, j1, y0, y1]
    }
}

fn j_unchecked<T: Real>(n: usize, x: T) -> T {
    if x < T::cst(SERIES_LIMIT) {
        j_series(n, x)
    } else {
        miller_sequence(n, x)[n]
    }
}

fn y_upward<T: Real>(n: usize, x: T, y0: T, y1: T) -> T {
    match n {
        0 => y0,
        1 => y1,
        _ => {
            let two_over_x = T::cst(2.0) / x;
            let (mut prev, mut cur) = (y0, y1);
            for k in 1..n {
                let next = two_over_x * T::from_usize_lossy(k) * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Ascending series `Σ (-1)^k (x/2)^(2k+n) / (k! (n+k)!)`.
fn j_series<T: Real>(n: usize, x: T) -> T {
    let half = x * T::cst(0.5);
    let mut lead = T::one();
    for i in 1..=n {
        lead = lead * half / T::from_usize_lossy(i);
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for k in 1..200 {
        term = term * q / (T::from_usize_lossy(k) * T::from_usize_lossy(n + k));
        sum += term;
        if term.abs() <= T::epsilon() * T::cst(0.25) * sum.abs() {
            break;
        }
    }
    sum
}

fn y01_series<T: Real>(x: T, j0: T, j1: T) -> (T, T) {
    let pi = T::PI();
    let two_over_pi = T::cst(2.0) / pi;
    let gamma = T::cst(EULER_GAMMA);
    let half = x * T::cst(0.5);
    let log_term = (half).ln();
    let q = half * half;

    // Y0 = (2/π)(ln(x/2)+γ) J0 + (2/π) Σ_{m>=1} (-1)^(m+1) H_m q^m / (m!)^2
    let mut term = T::one();
    let mut harmonic = T::zero();
    let mut s0 = T::zero();
    for m in 1..200 {
        let mf = T::from_usize_lossy(m);
        term = -term * q / (mf * mf);
        harmonic += T::one() / mf;
        let add = -term * harmonic;
        s0 += add;
        if add.abs() <= T::epsilon() * T::cst(0.25) * s0.abs() {
            break;
        }
    }
    let y0 = two_over_pi * ((log_term + gamma) * j0 + s0);

    // Y1 = (2/π) ln(x/2) J1 - 2/(πx)
    //      - (1/π) Σ_{m>=0} (-1)^m (ψ(m+1)+ψ(m+2)) (x/2)^(2m+1) / (m!(m+1)!)
    // with ψ(m+1) = H_m - γ.
    let mut term = half;
    let mut h_m = T::zero();
    let mut h_m1 = T::one();
    let mut s1 = term * (h_m + h_m1 - T::cst(2.0) * gamma);
    for m in 1..200 {
        let mf = T::from_usize_lossy(m);
        term = -term * q / (mf * (mf + T::one()));
        h_m += T::one() / mf;
        h_m1 += T::one() / (mf + T::one());
        let add = term * (h_m + h_m1 - T::cst(2.0) * gamma);
        s1 += add;
        if add.abs() <= T::epsilon() * T::cst(0.25) * s1.abs() {
            break;
        }
    }
    let y1 = two_over_pi * log_term * j1 - two_over_pi / x - s1 / pi;
    (y0, y1)
}

/// Normalised Miller sequence `J_0 .. J_m` with `m >= max(n, x)` plus a safety margin.
fn miller_sequence<T: Real>(n: usize, x: T) -> Vec<T> {
    let xf = x.to_f64().unwrap_or(0.0);
    let top = (n as f64).max(xf.ceil());
    let mut m = (top + 20.0 + 12.0 * top.cbrt()).ceil() as usize;
    m += m % 2;

    let big = T::max_value().sqrt();
    let inv_big = T::one() / big;
    let two_over_x = T::cst(2.0) / x;

    let mut vals = vec![T::zero(); m + 2];
    vals[m] = T::min_positive_value().sqrt();
    for k in (1..=m).rev() {
        let prev = two_over_x * T::from_usize_lossy(k) * vals[k] - vals[k + 1];
        vals[k - 1] = prev;
        if prev.abs() > big {
            for v in &mut vals[k - 1..=m] {
                *v = *v * inv_big;
            }
        }
    }
    let mut norm = vals[0];
    for k in (2..=m).step_by(2) {
        norm += T::cst(2.0) * vals[k];
    }
    vals.truncate(m + 1);
    for v in &mut vals {
        *v = *v / norm;
    }
    vals
}

/// Neumann expansions of `Y0` and `Y1` in terms of the `J` sequence.
fn y01_neumann<T: Real>(x: T, js: &[T]) -> (T, T) {
    let two_over_pi = T::cst(2.0) / T::PI();
    let lg = (x * T::cst(0.5)).ln() + T::cst(EULER_GAMMA);
    let last = js.len() - 1;
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut k = 1;
    while 2 * k < last {
        let kf = T::from_usize_lossy(k);
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        s0 += sign * js[2 * k] / kf;
        s1 += sign * (js[2 * k - 1] - js[2 * k + 1]) / kf;
        k += 1;
    }
    let y0 = two_over_pi * (lg * js[0] - T::cst(2.0) * s0);
    let y1 = two_over_pi * (lg * js[1] - js[0] / x + s1);
    (y0, y1)
}

/// Hankel asymptotic expansion for order 0 or 1; returns `(J, Y)`.
fn asymptotic<T: Real>(nu: usize, x: T) -> (T, T) {
    let mu = T::from_usize_lossy(4 * nu * nu);
    let eight_x = T::cst(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut prev_mag = T::infinity();
    for j in 1..60 {
        let odd = T::from_usize_lossy(2 * j - 1);
        term = term * (mu - odd * odd) / (T::from_usize_lossy(j) * eight_x);
        let mag = term.abs();
        if mag > prev_mag || mag == T::zero() {
            break;
        }
        prev_mag = mag;
        let sign = if (j / 2) % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };
        if j % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if mag < T::epsilon() * T::cst(0.1) {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let r = T::FRAC_1_SQRT_2();
    let (cos_chi, sin_chi) = if nu == 0 {
        ((c + s) * r, (s - c) * r)
    } else {
        ((s - c) * r, -(s + c) * r)
    };
    let amp = (T::cst(2.0) / (T::PI() * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

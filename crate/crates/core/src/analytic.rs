//! Closed-form reference fields for the benchmark problems.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{BinnError, Result};
use crate::scalar::{Point2, Real};
use crate::special::{bessel_j_prime, hankel01, hankel1, hankel1_prime};

/// Hard cap on the scattering series order.
pub const SCATTERING_MAX_ORDER: usize = 60;

/// Relative size of the last retained term at which the series stops.
pub const SCATTERING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticMedium<T> {
    /// Density (kg/m³).
    pub rho: T,
    /// Sound speed (m/s).
    pub c: T,
    /// Wave number (1/m).
    pub k: T,
}

impl<T: Real> AcousticMedium<T> {
    pub fn new(rho: T, c: T, k: T) -> Result<Self> {
        for (name, v) in [("density", rho), ("sound speed", c), ("wave number", k)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(BinnError::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { rho, c, k })
    }

    /// Air at room conditions: 1.2 kg/m³, 341 m/s.
    pub fn air(k: T) -> Result<Self> {
        Self::new(T::cst(1.2), T::cst(341.0), k)
    }

    pub fn omega(&self) -> T {
        self.k * self.c
    }
}

/// `p = cos(k x1) + i sin(k x2)` and its gradient.
pub fn case1_exact<T: Real>(x: Point2<T>, k: T) -> (Complex<T>, [Complex<T>; 2]) {
    let p = Complex::new((k * x.x).cos(), (k * x.y).sin());
    let grad = [
        Complex::new(-k * (k * x.x).sin(), T::zero()),
        Complex::new(T::zero(), k * (k * x.y).cos()),
    ];
    (p, grad)
}

/// `n·∇p` for [`case1_exact`].
pub fn case1_normal_derivative<T: Real>(x: Point2<T>, n: Point2<T>, k: T) -> Complex<T> {
    let (_, g) = case1_exact(x, k);
    g[0] * n.x + g[1] * n.y
}

/// Radiation from a cylinder of radius `radius` pulsating with normal
/// velocity `v_bar`: returns `p(r)` and `dp/dr`.
pub fn pulsating_exact<T: Real>(
    r: T,
    medium: &AcousticMedium<T>,
    radius: T,
    v_bar: Complex<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    if !(radius > T::zero()) || !(r >= radius) {
        return Err(BinnError::Domain(format!(
            "pulsating field needs r >= R > 0, got r = {r}, R = {radius}"
        )));
    }
    let (h0, h1) = hankel01(medium.k * r)?;
    let (_, h1_wall) = hankel01(medium.k * radius)?;
    let amp = v_bar * Complex::new(T::zero(), medium.rho * medium.c) / h1_wall;
    Ok((amp * h0, -amp * h1 * medium.k))
}

/// Truncated scattering series with its convergence status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: Complex<T>,
    /// Highest order included.
    pub order: usize,
    /// `false` when the cap was reached before the term test passed.
    pub converged: bool,
}

/// Coefficients `-ε_n i^n J'_n(kR)/H'_n(kR)` of the scattered field.
fn scattering_coefficient<T: Real>(n: usize, k: T, radius: T) -> Result<Complex<T>> {
    let eps = if n == 0 { T::one() } else { T::cst(2.0) };
    let i_n = match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    };
    let ratio =
        Complex::new(bessel_j_prime(n, k * radius)?, T::zero()) / hankel1_prime(n, k * radius)?;
    Ok(-(i_n * ratio) * eps)
}

fn scattering_series<T: Real>(
    r: T,
    theta: T,
    k: T,
    radius: T,
    max_order: usize,
    derivative: bool,
) -> Result<SeriesValue<T>> {
    if !(radius > T::zero()) || !(r >= radius) {
        return Err(BinnError::Domain(format!(
            "scattered field needs r >= R > 0, got r = {r}, R = {radius}"
        )));
    }
    let kr = k * r;
    let mut sum = Complex::zero();
    let mut converged = false;
    let mut order = 0;
    for n in 0..=max_order {
        let radial = if derivative {
            hankel1_prime(n, kr)? * k
        } else {
            hankel1(n, kr)?
        };
        let term = scattering_coefficient(n, k, radius)? * radial;
        sum += term * (T::from_usize_lossy(n) * theta).cos();
        order = n;
        if T::from_usize_lossy(n) > k * radius
            && term.norm() < T::cst(SCATTERING_TOLERANCE) * sum.norm()
        {
            converged = true;
            break;
        }
    }
    Ok(SeriesValue {
        value: sum,
        order,
        converged,
    })
}

/// Field scattered by a rigid cylinder of radius `radius` from a unit plane
/// wave travelling along `+x1`, at polar position `(r, theta)`.
pub fn scattering_exact<T: Real>(r: T, theta: T, k: T, radius: T) -> Result<SeriesValue<T>> {
    scattering_series(r, theta, k, radius, SCATTERING_MAX_ORDER, false)
}

/// Same as [`scattering_exact`] with an explicit order cap.
pub fn scattering_exact_with_cap<T: Real>(
    r: T,
    theta: T,
    k: T,
    radius: T,
    max_order: usize,
) -> Result<SeriesValue<T>> {
    scattering_series(r, theta, k, radius, max_order, false)
}

/// Radial derivative of the scattered field.
pub fn scattering_radial_derivative<T: Real>(
    r: T,
    theta: T,
    k: T,
    radius: T,
) -> Result<SeriesValue<T>> {
    scattering_series(r, theta, k, radius, SCATTERING_MAX_ORDER, true)
}

/// Scattered field at a Cartesian point around a cylinder centred at the origin.
pub fn scattering_at<T: Real>(x: Point2<T>, k: T, radius: T) -> Result<SeriesValue<T>> {
    scattering_exact(x.norm(), x.y.atan2(x.x), k, radius)
}

//! Fundamental solutions and their logarithmic splits.
//!
//! Kernels are evaluated from the distance `r = |x - y|` and the projection
//! `c = (y - x)·n_y / r`, so callers can supply `c` in a cancellation-free
//! form on the element that contains `x`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{BinnError, Result};
use crate::scalar::{Point2, Real};
use crate::special::{cylinder01, hankel01};

/// Kernel values near a source point, written as `G = g_log ln r + g_smooth`
/// and likewise for `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplit<T> {
    pub g: Complex<T>,
    pub f: Complex<T>,
    pub g_log: Complex<T>,
    pub f_log: Complex<T>,
}

/// A pair of boundary-integral kernels `(G, ∂G/∂n_y)`.
pub trait Kernel<T: Real>: Sync {
    /// `(G, F)` at distance `r > 0` with projection `c = (y - x)·n_y / r`.
    fn pair(&self, r: T, c: T) -> (Complex<T>, Complex<T>);

    /// Kernel values together with their `ln r` coefficients.
    fn split(&self, r: T, c: T) -> KernelSplit<T>;
}

/// Time-harmonic kernel `G = (i/4) H_0(kr)`, `F = -(ik/4) H_1(kr) c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzKernel<T> {
    pub k: T,
}

impl<T: Real> HelmholtzKernel<T> {
    pub fn new(k: T) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(BinnError::Config(format!(
                "wave number must be positive and finite, got {k}"
            )));
        }
        Ok(Self { k })
    }
}

impl<T: Real> Kernel<T> for HelmholtzKernel<T> {
    #[inline]
    fn pair(&self, r: T, c: T) -> (Complex<T>, Complex<T>) {
        let [j0, j1, y0, y1] = cylinder01(self.k * r);
        let q = T::cst(0.25);
        // (i/4)(J0 + iY0) and -(ik/4)(J1 + iY1) c.
        let g = Complex::new(-y0 * q, j0 * q);
        let s = self.k * q * c;
        let f = Complex::new(y1 * s, -j1 * s);
        (g, f)
    }

    fn split(&self, r: T, c: T) -> KernelSplit<T> {
        let [j0, j1, y0, y1] = cylinder01(self.k * r);
        let q = T::cst(0.25);
        let s = self.k * q * c;
        let inv_2pi = T::one() / T::TAU();
        KernelSplit {
            g: Complex::new(-y0 * q, j0 * q),
            f: Complex::new(y1 * s, -j1 * s),
            g_log: Complex::new(-j0 * inv_2pi, T::zero()),
            f_log: Complex::new(self.k * inv_2pi * j1 * c, T::zero()),
        }
    }
}

/// Static limit `G = -ln r / 2π`, `F = -c / (2π r)`. Used to check the
/// quadrature against potential-theory identities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaplaceKernel;

impl<T: Real> Kernel<T> for LaplaceKernel {
    #[inline]
    fn pair(&self, r: T, c: T) -> (Complex<T>, Complex<T>) {
        let inv_2pi = T::one() / T::TAU();
        (
            Complex::new(-r.ln() * inv_2pi, T::zero()),
            Complex::new(-c / r * inv_2pi, T::zero()),
        )
    }

    fn split(&self, r: T, c: T) -> KernelSplit<T> {
        let inv_2pi = T::one() / T::TAU();
        KernelSplit {
            g: Complex::new(-r.ln() * inv_2pi, T::zero()),
            f: Complex::new(-c / r * inv_2pi, T::zero()),
            g_log: Complex::new(-inv_2pi, T::zero()),
            f_log: Complex::zero(),
        }
    }
}

/// `G = F = 1`; integrals reduce to weighted arc length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitKernel;

impl<T: Real> Kernel<T> for UnitKernel {
    fn pair(&self, _r: T, _c: T) -> (Complex<T>, Complex<T>) {
        let one = Complex::new(T::one(), T::zero());
        (one, one)
    }

    fn split(&self, _r: T, _c: T) -> KernelSplit<T> {
        let one = Complex::new(T::one(), T::zero());
        KernelSplit {
            g: one,
            f: one,
            g_log: Complex::zero(),
            f_log: Complex::zero(),
        }
    }
}

/// `(i/4) H_0(k|x - y|)`.
pub fn kernel_g<T: Real>(x: Point2<T>, y: Point2<T>, k: T) -> Result<Complex<T>> {
    let r = x.distance(y);
    if r == T::zero() {
        return Err(BinnError::SingularEvaluation);
    }
    let (h0, _) = hankel01(k * r)?;
    Ok(h0 * Complex::new(T::zero(), T::cst(0.25)))
}

/// `∂G/∂n_y = -(ik/4) H_1(kr) (y - x)·n_y / r`.
pub fn kernel_f<T: Real>(x: Point2<T>, y: Point2<T>, n_y: Point2<T>, k: T) -> Result<Complex<T>> {
    let d = y - x;
    let r = d.norm();
    if r == T::zero() {
        return Err(BinnError::SingularEvaluation);
    }
    let (_, h1) = hankel01(k * r)?;
    Ok(h1 * Complex::new(T::zero(), -k * T::cst(0.25) * d.dot(n_y) / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hankel1;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn g_reference_value_and_symmetry() {
        let g = kernel_g(p(0.0, 0.0), p(1.0, 0.0), 1.0).unwrap();
        assert!((g.re + 0.022064241053919).abs() < 1e-14);
        assert!((g.im - 0.191299421639492).abs() < 1e-14);
        let (a, b) = (p(0.3, -1.1), p(-0.7, 2.4));
        assert_eq!(kernel_g(a, b, 2.5).unwrap(), kernel_g(b, a, 2.5).unwrap());
        let g2 = kernel_g(p(0.0, 0.0), p(0.0, 2.0), 1.0).unwrap();
        assert_eq!(g2, hankel1(0, 2.0).unwrap() * Complex::new(0.0, 0.25));
    }

    #[test]
    fn coincident_points_rejected() {
        let x = p(1.0, 1.0);
        assert_eq!(kernel_g(x, x, 1.0), Err(BinnError::SingularEvaluation));
        assert_eq!(
            kernel_f(x, x, p(0.0, 1.0), 1.0),
            Err(BinnError::SingularEvaluation)
        );
    }

    #[test]
    fn f_vanishes_for_tangential_normal() {
        let f = kernel_f(p(0.0, 0.0), p(2.0, 0.0), p(0.0, 1.0), 3.0).unwrap();
        assert_eq!(f, Complex::new(0.0, 0.0));
    }

    #[test]
    fn f_matches_central_difference_of_g() {
        let k = 2.0;
        let x = p(0.2, -0.1);
        let n = p(0.6, 0.8);
        let y = x + p(0.8, -0.6) * 0.6 + n * 0.8; // |y - x| = 1
        let h = 1e-6;
        let fd =
            (kernel_g(x, y + n * h, k).unwrap() - kernel_g(x, y - n * h, k).unwrap()) / (2.0 * h);
        let f = kernel_f(x, y, n, k).unwrap();
        assert!((f - fd).norm() / f.norm() <= 1e-6);
    }

    #[test]
    fn f_far_field_decay() {
        let k = 1.0;
        let x = p(0.0, 0.0);
        let n = p(1.0, 0.0);
        let y = p(50.0, 0.0);
        let f = kernel_f(x, y, n, k).unwrap();
        let asym = 0.25 * k * (2.0 / (PI * k * 50.0)).sqrt();
        assert!((f.norm() / asym - 1.0).abs() < 0.05);
    }

    #[test]
    fn trait_matches_free_functions() {
        let ker = HelmholtzKernel::new(1.7).unwrap();
        let (x, y, n) = (p(0.1, 0.2), p(-0.4, 1.3), p(0.0, -1.0));
        let r = x.distance(y);
        let c = (y - x).dot(n) / r;
        let (g, f) = ker.pair(r, c);
        assert!((g - kernel_g(x, y, 1.7).unwrap()).norm() < 1e-15);
        assert!((f - kernel_f(x, y, n, 1.7).unwrap()).norm() < 1e-15);
        let s = ker.split(r, c);
        assert_eq!((s.g, s.f), (g, f));
        assert!(HelmholtzKernel::new(0.0).is_err());
    }

    #[test]
    fn log_split_leaves_smooth_remainder() {
        // The remainder G - g_log ln r must stay bounded as r -> 0.
        let ker = HelmholtzKernel::new(2.0).unwrap();
        let rem = |r: f64| {
            let s = ker.split(r, 0.3 * r);
            (s.g - s.g_log * r.ln(), s.f - s.f_log * r.ln())
        };
        let (g1, f1) = rem(1e-4);
        let (g2, f2) = rem(1e-6);
        assert!((g1 - g2).norm() < 1e-6);
        assert!((f1 - f2).norm() < 1e-6);
        // Static remainder for G is exactly zero.
        let s = <LaplaceKernel as Kernel<f64>>::split(&LaplaceKernel, 0.5, 0.0);
        assert!((s.g - s.g_log * 0.5f64.ln()).norm() < 1e-16);
    }
}

//! Pressure away from the boundary and error metrics against reference fields.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::assembly::ElementIntegrator;
use crate::error::{BinnError, Result};
use crate::geometry::BoundaryMesh;
use crate::kernel::HelmholtzKernel;
use crate::scalar::{Point2, Real};

/// Subdivision depth for field points close to the boundary.
pub const EVAL_DEPTH: usize = 8;

/// Field points closer than this to the boundary are rejected.
pub const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample<T> {
    pub location: Point2<T>,
    pub pressure: Complex<T>,
}

/// Evaluates `p(x) = Σ ∫G N_j q_j - Σ ∫F N_j p_j` for one mesh and wave number.
#[derive(Debug, Clone)]
pub struct FieldEvaluator<'a, T> {
    mesh: &'a BoundaryMesh<T>,
    kernel: HelmholtzKernel<T>,
    integrator: ElementIntegrator<T>,
}

impl<'a, T: Real> FieldEvaluator<'a, T> {
    pub fn new(mesh: &'a BoundaryMesh<T>, k: T) -> Result<Self> {
        Ok(Self {
            mesh,
            kernel: HelmholtzKernel::new(k)?,
            integrator: ElementIntegrator::new(EVAL_DEPTH),
        })
    }

    pub fn eval(&self, x: Point2<T>, p: &[Complex<T>], q: &[Complex<T>]) -> Result<Complex<T>> {
        let n = self.mesh.n_points();
        for len in [p.len(), q.len()] {
            if len != n {
                return Err(BinnError::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        if !x.is_finite() || !self.mesh.in_domain(x) {
            return Err(BinnError::Domain(format!(
                "field point ({}, {}) is outside the acoustic domain",
                x.x, x.y
            )));
        }
        let d = self.mesh.distance_to_boundary(x);
        if d <= T::cst(MIN_DISTANCE) {
            return Err(BinnError::Domain(format!(
                "field point ({}, {}) lies on the boundary",
                x.x, x.y
            )));
        }
        let mut sum = Complex::zero();
        for (i, e) in self.mesh.elements.iter().enumerate() {
            let ints = self.integrator.regular(&self.kernel, x, e);
            for j in 0..3 {
                sum += ints.g[j] * q[3 * i + j] - ints.f[j] * p[3 * i + j];
            }
        }
        Ok(sum)
    }

    /// Parallel evaluation at many points; results keep the input order.
    pub fn eval_many(
        &self,
        xs: &[Point2<T>],
        p: &[Complex<T>],
        q: &[Complex<T>],
    ) -> Result<Vec<FieldSample<T>>> {
        xs.par_iter()
            .map(|&x| {
                Ok(FieldSample {
                    location: x,
                    pressure: self.eval(x, p, q)?,
                })
            })
            .collect()
    }
}

/// Pressure at `x` from boundary vectors `(p, q)`.
pub fn eval_field<T: Real>(
    x: Point2<T>,
    p: &[Complex<T>],
    q: &[Complex<T>],
    mesh: &BoundaryMesh<T>,
    k: T,
) -> Result<Complex<T>> {
    FieldEvaluator::new(mesh, k)?.eval(x, p, q)
}

fn check_pair<T>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<()> {
    if b.len() != a.len() {
        return Err(BinnError::Dimension {
            expected: b.len(),
            got: a.len(),
        });
    }
    if a.is_empty() {
        return Err(BinnError::Dimension {
            expected: 1,
            got: 0,
        });
    }
    Ok(())
}

/// `‖ñ - a‖ / ‖a‖` over the real parts and over the imaginary parts.
pub fn relative_error<T: Real>(
    numerical: &[Complex<T>],
    analytic: &[Complex<T>],
) -> Result<(T, T)> {
    check_pair(numerical, analytic)?;
    let mut num = [T::zero(); 2];
    let mut den = [T::zero(); 2];
    for (n, a) in numerical.iter().zip(analytic) {
        num[0] += (n.re - a.re).powi(2);
        num[1] += (n.im - a.im).powi(2);
        den[0] += a.re * a.re;
        den[1] += a.im * a.im;
    }
    if den[0] == T::zero() {
        return Err(BinnError::UndefinedNormalization("real"));
    }
    if den[1] == T::zero() {
        return Err(BinnError::UndefinedNormalization("imaginary"));
    }
    Ok(((num[0] / den[0]).sqrt(), (num[1] / den[1]).sqrt()))
}

/// `‖ñ - a‖ / ‖a‖` with the complex modulus.
pub fn relative_error_modulus<T: Real>(
    numerical: &[Complex<T>],
    analytic: &[Complex<T>],
) -> Result<T> {
    check_pair(numerical, analytic)?;
    let num = numerical
        .iter()
        .zip(analytic)
        .fold(T::zero(), |s, (n, a)| s + (n - a).norm_sqr());
    let den = analytic.iter().fold(T::zero(), |s, a| s + a.norm_sqr());
    if den == T::zero() {
        return Err(BinnError::UndefinedNormalization("complex"));
    }
    Ok((num / den).sqrt())
}

/// Pointwise errors of the real and imaginary parts, each divided by the
/// largest magnitude of that part of the reference over the sample set.
pub fn pointwise_errors<T: Real>(
    numerical: &[Complex<T>],
    analytic: &[Complex<T>],
) -> Result<Vec<(T, T)>> {
    check_pair(numerical, analytic)?;
    let max_re = analytic.iter().fold(T::zero(), |m, a| m.max(a.re.abs()));
    let max_im = analytic.iter().fold(T::zero(), |m, a| m.max(a.im.abs()));
    if max_re == T::zero() {
        return Err(BinnError::UndefinedNormalization("real"));
    }
    if max_im == T::zero() {
        return Err(BinnError::UndefinedNormalization("imaginary"));
    }
    Ok(numerical
        .iter()
        .zip(analytic)
        .map(|(n, a)| ((n.re - a.re).abs() / max_re, (n.im - a.im).abs() / max_im))
        .collect())
}

/// Thirty equally spaced points on `x2 = 0.75` strictly inside `0 < x1 < 3`.
pub fn case1_line<T: Real>() -> Vec<Point2<T>> {
    (0..30)
        .map(|i| Point2::new(T::cst(3.0 * (i as f64 + 0.5) / 30.0), T::cst(0.75)))
        .collect()
}

/// Cell centres of a 30 x 15 lattice over the `3 x 1.5` rectangle.
pub fn case2_grid<T: Real>() -> Vec<Point2<T>> {
    let mut out = Vec::with_capacity(450);
    for j in 0..15 {
        for i in 0..30 {
            out.push(Point2::new(
                T::cst(0.1 * (i as f64 + 0.5)),
                T::cst(0.1 * (j as f64 + 0.5)),
            ));
        }
    }
    out
}

/// Cell centres of a 40 x 40 lattice over `(-5, 5)^2`, keeping `r > radius`.
pub fn pulsating_grid<T: Real>(radius: T) -> Vec<Point2<T>> {
    let mut out = Vec::new();
    for j in 0..40 {
        for i in 0..40 {
            let x = Point2::new(
                T::cst(-5.0 + 0.25 * (i as f64 + 0.5)),
                T::cst(-5.0 + 0.25 * (j as f64 + 0.5)),
            );
            if x.norm() > radius {
                out.push(x);
            }
        }
    }
    out
}

/// Polar lattice over `radius < r < 2 radius`: 64 angles by 16 radii.
pub fn scattering_annulus<T: Real>(radius: T) -> Vec<Point2<T>> {
    let mut out = Vec::with_capacity(64 * 16);
    for j in 0..16 {
        let r = radius * T::cst(1.0 + (j as f64 + 0.5) / 16.0);
        for i in 0..64 {
            let theta = T::TAU() * T::cst(i as f64 / 64.0);
            out.push(Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, BoundaryCurve};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn relative_error_examples() {
        let a = vec![c(1.0, -2.0), c(0.5, 3.0), c(-4.0, 0.1)];
        assert_eq!(relative_error(&a, &a).unwrap(), (0.0, 0.0));
        let b: Vec<_> = a.iter().map(|z| z * 1.01).collect();
        let (re, im) = relative_error(&b, &a).unwrap();
        assert!((re - 0.01).abs() < 1e-14 && (im - 0.01).abs() < 1e-14);
        assert!((relative_error_modulus(&b, &a).unwrap() - 0.01).abs() < 1e-14);
        let real_only = vec![c(1.0, 0.0); 3];
        assert_eq!(
            relative_error(&real_only, &real_only),
            Err(BinnError::UndefinedNormalization("imaginary"))
        );
        assert!(relative_error(&a[..2], &a).is_err());
    }

    #[test]
    fn relative_error_is_scale_invariant() {
        let a = vec![c(1.0, -2.0), c(0.5, 3.0)];
        let b = vec![c(1.1, -2.2), c(0.4, 3.3)];
        let s = -7.5;
        let sa: Vec<_> = a.iter().map(|z| z * s).collect();
        let sb: Vec<_> = b.iter().map(|z| z * s).collect();
        let (r0, i0) = relative_error(&b, &a).unwrap();
        let (r1, i1) = relative_error(&sb, &sa).unwrap();
        assert!((r0 - r1).abs() < 1e-15 && (i0 - i1).abs() < 1e-15);
    }

    #[test]
    fn grids_have_declared_sizes() {
        assert_eq!(case1_line::<f64>().len(), 30);
        assert_eq!(case2_grid::<f64>().len(), 450);
        let g = pulsating_grid(1.0_f64);
        assert!(g
            .iter()
            .all(|x| x.norm() > 1.0 && x.x.abs() < 5.0 && x.y.abs() < 5.0));
        let a = scattering_annulus(1.0_f64);
        assert_eq!(a.len(), 1024);
        assert!(a.iter().all(|x| x.norm() > 1.0 && x.norm() < 2.0));
    }

    #[test]
    fn off_domain_points_rejected() {
        let mesh = build_mesh(
            &BoundaryCurve::rectangle(3.0, 1.5, Point2::new(1.5, 0.75)),
            18,
            0.8,
        )
        .unwrap();
        let z = vec![c(1.0, 0.0); mesh.n_points()];
        assert!(matches!(
            eval_field(Point2::new(4.0, 0.5), &z, &z, &mesh, 2.0),
            Err(BinnError::Domain(_))
        ));
        let on = mesh.points[5];
        assert!(matches!(
            eval_field(on, &z, &z, &mesh, 2.0),
            Err(BinnError::Domain(_))
        ));
        let ext = build_mesh(
            &BoundaryCurve::circle_exterior(1.0, Point2::zero()),
            16,
            0.8,
        )
        .unwrap();
        let z = vec![c(1.0, 0.0); ext.n_points()];
        assert!(eval_field(Point2::new(0.2, 0.1), &z, &z, &ext, 1.0).is_err());
        assert!(eval_field(Point2::new(2.0, 0.1), &z, &z, &ext, 1.0).is_ok());
    }

    #[test]
    fn evaluation_is_linear() {
        let mesh = build_mesh(
            &BoundaryCurve::rectangle(3.0, 1.5, Point2::new(1.5, 0.75)),
            18,
            0.8,
        )
        .unwrap();
        let p: Vec<_> = (0..mesh.n_points())
            .map(|i| c((i as f64).cos(), 0.2))
            .collect();
        let q: Vec<_> = (0..mesh.n_points())
            .map(|i| c(-0.3, (i as f64).sin()))
            .collect();
        let x = Point2::new(0.9, 0.4);
        let one = eval_field(x, &p, &q, &mesh, 2.0).unwrap();
        let p2: Vec<_> = p.iter().map(|z| z * 2.0).collect();
        let q2: Vec<_> = q.iter().map(|z| z * 2.0).collect();
        assert_eq!(eval_field(x, &p2, &q2, &mesh, 2.0).unwrap(), one * 2.0);
    }
}

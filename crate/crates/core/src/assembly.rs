//! Element integration and assembly of the dense influence matrices.
//!
//! Row `m` of `H` and `G` collects, for every element `i` and functional node
//! `j`, the integrals `∫ F N_j J dxi` and `∫ G N_j J dxi` seen from collocation
//! point `m`; `H` also carries the jump term `1/2` on its diagonal.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{BinnError, Result};
use crate::geometry::{functional_shape, BoundaryMesh, QuadraticElement};
use crate::kernel::{HelmholtzKernel, Kernel, LaplaceKernel};
use crate::linalg::CMatrix;
use crate::quadrature::{QuadratureRule, STANDARD_POINTS};
use crate::scalar::{Point2, Real};

/// Jump coefficient on a smooth boundary.
pub const JUMP: f64 = 0.5;

/// Subdivision depth used during assembly.
pub const ASSEMBLY_DEPTH: usize = 4;

/// `∫ G N_j J` and `∫ F N_j J` over one element for `j = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementIntegrals<T> {
    pub g: [Complex<T>; 3],
    pub f: [Complex<T>; 3],
}

impl<T: Real> ElementIntegrals<T> {
    pub fn zero() -> Self {
        Self {
            g: [Complex::zero(); 3],
            f: [Complex::zero(); 3],
        }
    }

    fn add(&mut self, o: &Self) {
        for j in 0..3 {
            self.g[j] += o.g[j];
            self.f[j] += o.f[j];
        }
    }
}

/// Quadrature rules plus the subdivision limit for near-singular elements.
#[derive(Debug, Clone)]
pub struct ElementIntegrator<T> {
    legendre: QuadratureRule<T>,
    log: QuadratureRule<T>,
    max_depth: usize,
}

impl<T: Real> ElementIntegrator<T> {
    pub fn new(max_depth: usize) -> Self {
        Self {
            legendre: QuadratureRule::gauss_legendre(STANDARD_POINTS),
            log: QuadratureRule::gauss_log(STANDARD_POINTS),
            max_depth,
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Plain Gauss–Legendre over the parameter interval `[a, b]` of `element`.
    pub fn regular_on<K: Kernel<T>>(
        &self,
        kernel: &K,
        x: Point2<T>,
        element: &QuadraticElement<T>,
        a: T,
        b: T,
    ) -> ElementIntegrals<T> {
        let half = (b - a) * T::cst(0.5);
        let mid = (a + b) * T::cst(0.5);
        let mut out = ElementIntegrals::zero();
        for (&s, &w) in self.legendre.nodes.iter().zip(&self.legendre.weights) {
            let xi = mid + half * s;
            let t = element.derivative(xi);
            let jac = t.norm();
            let d = element.position(xi) - x;
            let r = d.norm();
            debug_assert!(r > T::zero(), "source point lies on the element");
            let c = d.dot(t.rotate_cw()) / (jac * r);
            let (g, f) = kernel.pair(r, c);
            let shape = functional_shape(xi, element.alpha);
            let scale = w * half * jac;
            for j in 0..3 {
                let wj = scale * shape[j];
                out.g[j] += g * wj;
                out.f[j] += f * wj;
            }
        }
        out
    }

    /// Integrals for a source point off the element, subdividing while the
    /// point is closer than the length of the current piece.
    pub fn regular<K: Kernel<T>>(
        &self,
        kernel: &K,
        x: Point2<T>,
        element: &QuadraticElement<T>,
    ) -> ElementIntegrals<T> {
        let mut out = ElementIntegrals::zero();
        self.subdivide(kernel, x, element, -T::one(), T::one(), 0, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn subdivide<K: Kernel<T>>(
        &self,
        kernel: &K,
        x: Point2<T>,
        element: &QuadraticElement<T>,
        a: T,
        b: T,
        depth: usize,
        out: &mut ElementIntegrals<T>,
    ) {
        let mid = (a + b) * T::cst(0.5);
        if depth < self.max_depth {
            let piece = QuadraticElement::new(
                [
                    element.position(a),
                    element.position(mid),
                    element.position(b),
                ],
                element.alpha,
            );
            let len = piece
                .chord()
                .max(piece.nodes[0].distance(piece.nodes[1]) * T::cst(2.0));
            let near =
                piece.nodes[1].distance(x) < len * T::cst(2.0) && piece.closest_point(x).0 < len;
            if near {
                self.subdivide(kernel, x, element, a, mid, depth + 1, out);
                self.subdivide(kernel, x, element, mid, b, depth + 1, out);
                return;
            }
        }
        out.add(&self.regular_on(kernel, x, element, a, b));
    }

    /// Integrals over the element that contains the source point, which sits
    /// at functional node `local` (0, 1 or 2).
    ///
    /// The interval is split at the source. On each side `y - x = d (a + d b/2)`
    /// with `a = y'(xi_c)` and `b = y''`, so `r / |d|` and the normal projection
    /// have closed forms; `ln r = ln |d| + ln(r/|d|)` and the `ln |d|` part is
    /// integrated with the log-weighted rule.
    pub fn singular<K: Kernel<T>>(
        &self,
        kernel: &K,
        element: &QuadraticElement<T>,
        local: usize,
    ) -> ElementIntegrals<T> {
        let xc = element.collocation_xi()[local];
        let a = element.derivative(xc);
        let b = element.curvature_vector();
        let half = T::cst(0.5);
        let cab = a.cross(b);
        let mut out = ElementIntegrals::zero();
        for sign in [-T::one(), T::one()] {
            let len = if sign < T::zero() {
                xc + T::one()
            } else {
                T::one() - xc
            };
            if len <= T::zero() {
                continue;
            }
            // Returns the kernel split and the weight N_j J at t in (0, 1].
            let eval = |t: T| {
                let d = sign * len * t;
                let u = a + b * (d * half);
                let tangent = a + b * d;
                let jac = tangent.norm();
                let un = u.norm();
                let r = d.abs() * un;
                let c = d.abs() * cab / (T::cst(2.0) * jac * un);
                let shape = functional_shape(xc + d, element.alpha);
                (
                    kernel.split(r, c),
                    [shape[0] * jac, shape[1] * jac, shape[2] * jac],
                )
            };
            for (&s, &w) in self.legendre.nodes.iter().zip(&self.legendre.weights) {
                let t = (s + T::one()) * half;
                let (ks, nj) = eval(t);
                let lt = t.ln();
                let g = ks.g - ks.g_log * lt;
                let f = ks.f - ks.f_log * lt;
                let wt = w * half * len;
                for j in 0..3 {
                    out.g[j] += g * (wt * nj[j]);
                    out.f[j] += f * (wt * nj[j]);
                }
            }
            for (&t, &w) in self.log.nodes.iter().zip(&self.log.weights) {
                let (ks, nj) = eval(t);
                // ∫ φ ln t dt = -Σ w φ(t) for the -ln t weighted rule.
                let wt = -w * len;
                for j in 0..3 {
                    out.g[j] += ks.g_log * (wt * nj[j]);
                    out.f[j] += ks.f_log * (wt * nj[j]);
                }
            }
        }
        out
    }
}

impl<T: Real> Default for ElementIntegrator<T> {
    fn default() -> Self {
        Self::new(ASSEMBLY_DEPTH)
    }
}

/// 20-point Gauss integrals over an element for a source point off it.
pub fn integrate_regular<T: Real, K: Kernel<T>>(
    kernel: &K,
    x: Point2<T>,
    element: &QuadraticElement<T>,
) -> ElementIntegrals<T> {
    ElementIntegrator::new(0).regular(kernel, x, element)
}

/// Self-element integrals for the source at functional node `local`.
pub fn integrate_singular<T: Real, K: Kernel<T>>(
    kernel: &K,
    element: &QuadraticElement<T>,
    local: usize,
) -> ElementIntegrals<T> {
    assert!(local < 3, "functional node index must be 0, 1 or 2");
    ElementIntegrator::default().singular(kernel, element, local)
}

/// Dense influence matrices over all collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrices<T> {
    pub h: CMatrix<T>,
    pub g: CMatrix<T>,
    /// Wave number; zero for the static test kernel.
    pub k: T,
}

impl<T: Real> InfluenceMatrices<T> {
    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    /// `H p - G q`.
    pub fn residual(&self, p: &[Complex<T>], q: &[Complex<T>]) -> Vec<Complex<T>> {
        let hp = self.h.mul_vec(p);
        let gq = self.g.mul_vec(q);
        hp.into_iter().zip(gq).map(|(a, b)| a - b).collect()
    }
}

/// Assembles `H` and `G` for the time-harmonic kernel with wave number `k`.
pub fn assemble<T: Real>(mesh: &BoundaryMesh<T>, k: T) -> Result<InfluenceMatrices<T>> {
    let kernel = HelmholtzKernel::new(k)?;
    let (h, g) = assemble_with(mesh, &kernel, &ElementIntegrator::default())?;
    Ok(InfluenceMatrices { h, g, k })
}

/// Assembles with the static kernel; a test hook for quadrature identities.
pub fn assemble_static<T: Real>(mesh: &BoundaryMesh<T>) -> Result<InfluenceMatrices<T>> {
    let (h, g) = assemble_with(mesh, &LaplaceKernel, &ElementIntegrator::default())?;
    Ok(InfluenceMatrices { h, g, k: T::zero() })
}

/// Assembles `(H, G)` for an arbitrary kernel pair.
pub fn assemble_with<T: Real, K: Kernel<T>>(
    mesh: &BoundaryMesh<T>,
    kernel: &K,
    integrator: &ElementIntegrator<T>,
) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let n = mesh.n_points();
    let mut h = CMatrix::zeros(n, n);
    let mut g = CMatrix::zeros(n, n);
    let jump = Complex::new(T::cst(JUMP), T::zero());
    h.as_mut_slice()
        .par_chunks_mut(n)
        .zip(g.as_mut_slice().par_chunks_mut(n))
        .enumerate()
        .for_each(|(m, (hrow, grow))| {
            let x = mesh.points[m];
            let own = m / 3;
            for (i, element) in mesh.elements.iter().enumerate() {
                let ints = if i == own {
                    integrator.singular(kernel, element, m % 3)
                } else {
                    integrator.regular(kernel, x, element)
                };
                hrow[3 * i..3 * i + 3].copy_from_slice(&ints.f);
                grow[3 * i..3 * i + 3].copy_from_slice(&ints.g);
            }
            hrow[m] += jump;
        });
    for mat in [&h, &g] {
        if let Some(idx) = mat
            .as_slice()
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(BinnError::Assembly {
                row: idx / n,
                col: idx % n,
            });
        }
    }
    Ok((h, g))
}

/// Incident plane wave `A exp(i k d·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave<T> {
    pub amplitude: Complex<T>,
    pub direction: Point2<T>,
    pub k: T,
}

impl<T: Real> PlaneWave<T> {
    pub fn new(amplitude: Complex<T>, direction: Point2<T>, k: T) -> Result<Self> {
        if (direction.norm() - T::one()).abs() > T::cst(1e-12) {
            return Err(BinnError::Config(format!(
                "plane-wave direction must be a unit vector, |d| = {}",
                direction.norm()
            )));
        }
        Ok(Self {
            amplitude,
            direction,
            k,
        })
    }

    /// Unit amplitude along `+x1`.
    pub fn unit_x(k: T) -> Self {
        Self {
            amplitude: Complex::new(T::one(), T::zero()),
            direction: Point2::new(T::one(), T::zero()),
            k,
        }
    }

    pub fn pressure(&self, x: Point2<T>) -> Complex<T> {
        self.amplitude * Complex::from_polar(T::one(), self.k * self.direction.dot(x))
    }
}

/// Incident pressure and its normal derivative at `x`.
pub fn plane_wave_trace<T: Real>(
    pw: &PlaneWave<T>,
    x: Point2<T>,
    n_x: Point2<T>,
) -> (Complex<T>, Complex<T>) {
    let p = pw.pressure(x);
    let q = p * Complex::new(T::zero(), pw.k * pw.direction.dot(n_x));
    (p, q)
}

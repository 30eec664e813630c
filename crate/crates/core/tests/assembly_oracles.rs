use binn_core::analytic::{case1_exact, case1_normal_derivative};
use binn_core::assembly::{
    assemble, assemble_static, integrate_regular, integrate_singular, ElementIntegrator,
};
use binn_core::geometry::{build_mesh, functional_shape, BoundaryCurve, QuadraticElement};
use binn_core::kernel::{HelmholtzKernel, LaplaceKernel};
use binn_core::quadrature::QuadratureRule;
use binn_core::scalar::Point2;
use num_complex::Complex;

type C = Complex<f64>;

fn rectangle(n: usize) -> binn_core::geometry::BoundaryMesh<f64> {
    build_mesh(
        &BoundaryCurve::rectangle(3.0, 1.5, Point2::new(1.5, 0.75)),
        n,
        0.8,
    )
    .unwrap()
}

fn case1_residual_rms(n: usize, k: f64) -> f64 {
    let mesh = rectangle(n);
    let m = assemble(&mesh, k).unwrap();
    let p: Vec<C> = mesh.points.iter().map(|&x| case1_exact(x, k).0).collect();
    let q: Vec<C> = mesh
        .points
        .iter()
        .zip(&mesh.normals)
        .map(|(&x, &nx)| case1_normal_derivative(x, nx, k))
        .collect();
    let res = m.residual(&p, &q);
    let pmax = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (res.iter().map(|z| z.norm_sqr()).sum::<f64>() / res.len() as f64).sqrt() / pmax
}

#[test]
fn static_row_identity_rectangle_and_circle() {
    let meshes = [
        rectangle(90),
        build_mesh(
            &BoundaryCurve::circle_interior(1.0, Point2::zero()),
            50,
            0.8,
        )
        .unwrap(),
    ];
    for mesh in &meshes {
        let m = assemble_static(mesh).unwrap();
        let worst = (0..m.dim())
            .map(|i| m.h.row(i).iter().sum::<C>().norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "worst |1/2 + row sum| = {worst:e}");
    }
}

#[test]
fn static_row_identity_exterior_orientation() {
    // Seen from the exterior the curve subtends the complementary angle, so
    // 1/2 + ∫F = 1 there.
    let mesh = build_mesh(
        &BoundaryCurve::circle_exterior(1.0, Point2::zero()),
        50,
        0.8,
    )
    .unwrap();
    let m = assemble_static(&mesh).unwrap();
    for i in 0..m.dim() {
        let s: C = m.h.row(i).iter().sum();
        assert!((s - 1.0).norm() <= 1e-8);
    }
}

#[test]
fn case1_plug_in_residual_floor_and_order() {
    let coarse = case1_residual_rms(90, 2.0);
    let fine = case1_residual_rms(180, 2.0);
    assert!(coarse <= 1e-5, "rms residual {coarse:e}");
    assert!(coarse / fine >= 4.0, "ratio {}", coarse / fine);
}

/// Composite Gauss with 10 panels of 20 points.
fn composite_oracle(x: Point2<f64>, e: &QuadraticElement<f64>, k: f64) -> ([C; 3], [C; 3]) {
    let rule = QuadratureRule::<f64>::gauss_legendre(20);
    let mut g = [C::new(0.0, 0.0); 3];
    let mut f = [C::new(0.0, 0.0); 3];
    let panels = 10;
    for pi in 0..panels {
        let a = -1.0 + 2.0 * pi as f64 / panels as f64;
        let b = a + 2.0 / panels as f64;
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let xi = 0.5 * (a + b) + 0.5 * (b - a) * s;
            let ep = e.element_point(xi).unwrap();
            let gk = binn_core::kernel::kernel_g(x, ep.position, k).unwrap();
            let fk = binn_core::kernel::kernel_f(x, ep.position, ep.normal, k).unwrap();
            let n = functional_shape(xi, e.alpha);
            for j in 0..3 {
                let wt = w * 0.5 * (b - a) * ep.jacobian * n[j];
                g[j] += gk * wt;
                f[j] += fk * wt;
            }
        }
    }
    (g, f)
}

#[test]
fn regular_rule_matches_composite_oracle() {
    let mesh = build_mesh(
        &BoundaryCurve::circle_interior(1.0, Point2::zero()),
        12,
        0.8,
    )
    .unwrap();
    let e = mesh.elements[2];
    let len = e.length();
    let mid = e.position(0.0);
    // One element length away along the outward normal.
    let x = mid + e.element_point(0.0).unwrap().normal * len;
    let ker = HelmholtzKernel::new(3.0).unwrap();
    let got = integrate_regular(&ker, x, &e);
    let (g, f) = composite_oracle(x, &e, 3.0);
    for j in 0..3 {
        assert!((got.g[j] - g[j]).norm() <= 1e-10 * g[j].norm());
        assert!((got.f[j] - f[j]).norm() <= 1e-10 * f[j].norm());
    }
}

#[test]
fn near_singular_subdivision_matches_oracle() {
    let mesh = rectangle(90);
    let e = mesh.elements[1];
    let x = mesh.points[2]; // last functional node of the neighbouring element
    let ker = HelmholtzKernel::new(2.0).unwrap();
    let got = ElementIntegrator::default().regular(&ker, x, &e);
    let oracle = ElementIntegrator::new(14).regular(&ker, x, &e);
    for j in 0..3 {
        assert!((got.g[j] - oracle.g[j]).norm() <= 1e-10 * oracle.g[j].norm());
    }
}

/// Integral over [0, h] of a function singular at 0, on geometrically graded panels.
fn graded(h: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = QuadratureRule::<f64>::gauss_legendre(20);
    let mut total = 0.0;
    let mut hi = h;
    for _ in 0..40 {
        let lo = hi * 0.5;
        total += rule.integrate(lo, hi, &f);
        hi = lo;
    }
    total
}

#[test]
fn g_self_integral_matches_graded_oracle() {
    let l = 0.6;
    let e = QuadraticElement::new(
        [
            Point2::new(-l / 2.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(l / 2.0, 0.0),
        ],
        0.8,
    );
    let k = 2.0;
    let ker = HelmholtzKernel::new(k).unwrap();
    for local in 0..3 {
        let got = integrate_singular(&ker, &e, local);
        let xc = [-0.8, 0.0, 0.8][local];
        let x = e.position(xc);
        for j in 0..3 {
            let integrand = |xi: f64, part: fn(C) -> f64| {
                let y = e.position(xi);
                let g = binn_core::kernel::kernel_g(x, y, k).unwrap();
                part(g) * functional_shape(xi, 0.8)[j] * l / 2.0
            };
            let mut re = 0.0;
            let mut im = 0.0;
            for (lo, hi, dir) in [(xc, 1.0, 1.0), (xc, -1.0, -1.0)] {
                let h = (hi - lo) * dir;
                re += graded(h, |t| integrand(lo + dir * t, |z| z.re));
                im += graded(h, |t| integrand(lo + dir * t, |z| z.im));
            }
            let oracle = C::new(re, im);
            assert!(
                (got.g[j] - oracle).norm() <= 1e-8 * oracle.norm(),
                "local {local} j {j}: {} vs {oracle}",
                got.g[j]
            );
        }
    }
}

#[test]
fn static_g_self_integral_has_closed_form() {
    // Σ_j ∫ -ln|s|/2π ds over [-L/2, L/2] = -(L ln(L/2) - L)/2π.
    let l = 0.4;
    let e = QuadraticElement::new(
        [
            Point2::new(0.0, 1.0),
            Point2::new(l / 2.0, 1.0),
            Point2::new(l, 1.0),
        ],
        0.8,
    );
    let got: C = integrate_singular(&LaplaceKernel, &e, 1).g.iter().sum();
    let exact = -(l * (l / 2.0).ln() - l) / std::f64::consts::TAU;
    assert!((got.re - exact).abs() <= 1e-13 * exact.abs());
}

#[test]
fn matrix_size_for_ninety_elements() {
    let m = assemble(&rectangle(90), 2.0).unwrap();
    assert_eq!(
        (m.h.rows(), m.h.cols(), m.g.rows(), m.g.cols()),
        (270, 270, 270, 270)
    );
    assert!(m.h.is_finite() && m.g.is_finite());
}

//! Boundary curves and their discretization into discontinuous quadratic
//! elements.
//!
//! Traversal always keeps the acoustic domain on the left, so the unit normal
//! (tangent rotated by -90 degrees) points out of the domain. Around an
//! obstacle the curve runs clockwise and the normal points into the body.

use std::io::{self, Write};

use num_complex::Complex;

use crate::error::{BinnError, Result};
use crate::quadrature::{QuadratureRule, STANDARD_POINTS};
use crate::scalar::{Point2, Real};

/// Default offset of the functional nodes.
pub const DEFAULT_ALPHA: f64 = 0.8;

const DEGENERATE_JACOBIAN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveShape<T> {
    Rectangle {
        width: T,
        height: T,
        center: Point2<T>,
    },
    Circle {
        radius: T,
        center: Point2<T>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCurve<T> {
    pub shape: CurveShape<T>,
    pub orientation: Orientation,
}

impl<T: Real> BoundaryCurve<T> {
    /// Interior problem inside an axis-aligned rectangle.
    pub fn rectangle(width: T, height: T, center: Point2<T>) -> Self {
        Self {
            shape: CurveShape::Rectangle {
                width,
                height,
                center,
            },
            orientation: Orientation::CounterClockwise,
        }
    }

    /// Interior problem inside a disc.
    pub fn circle_interior(radius: T, center: Point2<T>) -> Self {
        Self {
            shape: CurveShape::Circle { radius, center },
            orientation: Orientation::CounterClockwise,
        }
    }

    /// Exterior problem around a circular obstacle.
    pub fn circle_exterior(radius: T, center: Point2<T>) -> Self {
        Self {
            shape: CurveShape::Circle { radius, center },
            orientation: Orientation::Clockwise,
        }
    }

    pub fn perimeter(&self) -> T {
        match self.shape {
            CurveShape::Rectangle { width, height, .. } => (width + height) * T::cst(2.0),
            CurveShape::Circle { radius, .. } => T::TAU() * radius,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.orientation == Orientation::CounterClockwise
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            CurveShape::Rectangle {
                width,
                height,
                center,
            } => {
                width > T::zero()
                    && height > T::zero()
                    && width.is_finite()
                    && height.is_finite()
                    && center.is_finite()
            }
            CurveShape::Circle { radius, center } => {
                radius > T::zero() && radius.is_finite() && center.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(BinnError::Geometry(
                "curve dimensions must be positive and finite".into(),
            ))
        }
    }
}

/// Quadratic shape functions at `xi`.
#[inline]
pub fn shape_functions<T: Real>(xi: T) -> [T; 3] {
    let half = T::cst(0.5);
    [
        half * xi * (xi - T::one()),
        T::one() - xi * xi,
        half * xi * (xi + T::one()),
    ]
}

/// Derivatives of [`shape_functions`] with respect to `xi`.
#[inline]
pub fn shape_derivatives<T: Real>(xi: T) -> [T; 3] {
    let half = T::cst(0.5);
    [xi - half, -T::cst(2.0) * xi, xi + half]
}

/// Shape functions of the functional nodes placed at `-alpha, 0, alpha`.
#[inline]
pub fn functional_shape<T: Real>(xi: T, alpha: T) -> [T; 3] {
    shape_functions(xi / alpha)
}

/// Interpolates nodal values held at the functional nodes.
pub fn interpolate_nodal<T: Real>(values: [Complex<T>; 3], xi: T, alpha: T) -> Complex<T> {
    let n = functional_shape(xi, alpha);
    values[0] * n[0] + values[1] * n[1] + values[2] * n[2]
}

/// Geometric data of an element at one parametric position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPoint<T> {
    pub position: Point2<T>,
    /// `dy/dxi`, not normalized.
    pub tangent: Point2<T>,
    pub jacobian: T,
    pub normal: Point2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticElement<T> {
    /// Geometry nodes at `xi = -1, 0, 1`.
    pub nodes: [Point2<T>; 3],
    pub alpha: T,
}

impl<T: Real> QuadraticElement<T> {
    pub fn new(nodes: [Point2<T>; 3], alpha: T) -> Self {
        Self { nodes, alpha }
    }

    #[inline]
    pub fn position(&self, xi: T) -> Point2<T> {
        let n = shape_functions(xi);
        self.nodes[0] * n[0] + self.nodes[1] * n[1] + self.nodes[2] * n[2]
    }

    #[inline]
    pub fn derivative(&self, xi: T) -> Point2<T> {
        let d = shape_derivatives(xi);
        self.nodes[0] * d[0] + self.nodes[1] * d[1] + self.nodes[2] * d[2]
    }

    /// Constant second derivative `d²y/dxi²`.
    #[inline]
    pub fn curvature_vector(&self) -> Point2<T> {
        self.nodes[0] + self.nodes[2] - self.nodes[1] * T::cst(2.0)
    }

    pub fn element_point(&self, xi: T) -> Result<ElementPoint<T>> {
        let tangent = self.derivative(xi);
        let jacobian = tangent.norm();
        if !(jacobian >= T::cst(DEGENERATE_JACOBIAN)) {
            return Err(BinnError::Geometry(format!(
                "element jacobian {jacobian} below threshold"
            )));
        }
        Ok(ElementPoint {
            position: self.position(xi),
            tangent,
            jacobian,
            normal: tangent.rotate_cw().scale(T::one() / jacobian),
        })
    }

    /// Parametric positions of the functional nodes.
    #[inline]
    pub fn collocation_xi(&self) -> [T; 3] {
        [-self.alpha, T::zero(), self.alpha]
    }

    pub fn length(&self) -> T {
        QuadratureRule::<T>::gauss_legendre(STANDARD_POINTS)
            .integrate(-T::one(), T::one(), |xi| self.derivative(xi).norm())
    }

    /// Straight-line distance between the end nodes.
    pub fn chord(&self) -> T {
        self.nodes[0].distance(self.nodes[2])
    }

    /// Splits the parameter interval in two; each child keeps the parent's
    /// geometry exactly (a quadratic restricted to a sub-interval is quadratic).
    pub fn split(&self) -> [Self; 2] {
        let half = T::cst(0.5);
        let left = [self.nodes[0], self.position(-half), self.nodes[1]];
        let right = [self.nodes[1], self.position(half), self.nodes[2]];
        [Self::new(left, self.alpha), Self::new(right, self.alpha)]
    }

    /// Minimum distance from `x` to the element and the parameter attaining it.
    pub fn closest_point(&self, x: Point2<T>) -> (T, T) {
        let samples = 16;
        let mut best = (T::infinity(), T::zero());
        for i in 0..=samples {
            let xi = T::cst(-1.0 + 2.0 * i as f64 / samples as f64);
            let d = self.position(xi).distance(x);
            if d < best.0 {
                best = (d, xi);
            }
        }
        // Newton on d/dxi |y(xi) - x|^2 / 2.
        let mut xi = best.1;
        let b = self.curvature_vector();
        for _ in 0..20 {
            let r = self.position(xi) - x;
            let t = self.derivative(xi);
            let g = r.dot(t);
            let h = t.dot(t) + r.dot(b);
            if h <= T::zero() {
                break;
            }
            let next = (xi - g / h).max(-T::one()).min(T::one());
            let done = (next - xi).abs() < T::cst(1e-14);
            xi = next;
            if done {
                break;
            }
        }
        let d = self.position(xi).distance(x);
        if d < best.0 {
            (d, xi)
        } else {
            best
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryMesh<T> {
    pub elements: Vec<QuadraticElement<T>>,
    /// Collocation points, three per element in element order.
    pub points: Vec<Point2<T>>,
    /// Unit normals at the collocation points.
    pub normals: Vec<Point2<T>>,
    pub curve: BoundaryCurve<T>,
    pub alpha: T,
}

impl<T: Real> BoundaryMesh<T> {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Total length of the discretized curve.
    pub fn length(&self) -> T {
        self.elements
            .iter()
            .fold(T::zero(), |acc, e| acc + e.length())
    }

    /// Distance from `x` to the discretized boundary.
    pub fn distance_to_boundary(&self, x: Point2<T>) -> T {
        self.elements
            .iter()
            .map(|e| e.closest_point(x).0)
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Winding number of the discretized boundary around `x`.
    pub fn winding_number(&self, x: Point2<T>) -> i32 {
        const SEGMENTS: usize = 8;
        let mut w = 0;
        for e in &self.elements {
            let mut a = e.position(-T::one()) - x;
            for s in 1..=SEGMENTS {
                let xi = T::cst(-1.0 + 2.0 * s as f64 / SEGMENTS as f64);
                let b = e.position(xi) - x;
                if a.y <= T::zero() {
                    if b.y > T::zero() && a.cross(b) > T::zero() {
                        w += 1;
                    }
                } else if b.y <= T::zero() && a.cross(b) < T::zero() {
                    w -= 1;
                }
                a = b;
            }
        }
        w
    }

    /// Whether `x` lies in the acoustic domain bounded by this mesh.
    pub fn in_domain(&self, x: Point2<T>) -> bool {
        let w = self.winding_number(x);
        match self.curve.orientation {
            Orientation::CounterClockwise => w == 1,
            Orientation::Clockwise => w == 0,
        }
    }

    /// One line per element: three geometry nodes, three collocation points,
    /// three normals, each as an `x y` pair.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# element y1x y1y y2x y2y y3x y3y c1x c1y c2x c2y c3x c3y n1x n1y n2x n2y n3x n3y"
        )?;
        for (i, e) in self.elements.iter().enumerate() {
            write!(out, "{i}")?;
            let pts = e
                .nodes
                .iter()
                .chain(&self.points[3 * i..3 * i + 3])
                .chain(&self.normals[3 * i..3 * i + 3]);
            for p in pts {
                write!(out, " {} {}", p.x, p.y)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Discretizes `curve` into `n_elements` discontinuous quadratic elements.
pub fn build_mesh<T: Real>(
    curve: &BoundaryCurve<T>,
    n_elements: usize,
    alpha: T,
) -> Result<BoundaryMesh<T>> {
    if n_elements < 4 {
        return Err(BinnError::Meshing(format!(
            "need at least 4 elements, got {n_elements}"
        )));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(BinnError::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    curve.validate()?;
    let mut elements = match curve.shape {
        CurveShape::Rectangle {
            width,
            height,
            center,
        } => rectangle_elements(width, height, center, n_elements, alpha)?,
        CurveShape::Circle { radius, center } => circle_elements(radius, center, n_elements, alpha),
    };
    if curve.orientation == Orientation::Clockwise {
        elements.reverse();
        for e in &mut elements {
            e.nodes.reverse();
        }
    }
    let mut points = Vec::with_capacity(3 * elements.len());
    let mut normals = Vec::with_capacity(3 * elements.len());
    for e in &elements {
        for xi in e.collocation_xi() {
            let ep = e.element_point(xi)?;
            points.push(ep.position);
            normals.push(ep.normal);
        }
    }
    Ok(BoundaryMesh {
        elements,
        points,
        normals,
        curve: *curve,
        alpha,
    })
}

fn rectangle_elements<T: Real>(
    width: T,
    height: T,
    center: Point2<T>,
    n: usize,
    alpha: T,
) -> Result<Vec<QuadraticElement<T>>> {
    let perimeter = (width + height) * T::cst(2.0);
    let per_side = |len: T| -> Result<usize> {
        let exact = T::from_usize_lossy(n) * len / perimeter;
        let rounded = exact.round();
        if (exact - rounded).abs() > T::cst(1e-6) * exact.max(T::one()) || rounded < T::one() {
            return Err(BinnError::Meshing(format!(
                "{n} elements cannot be split proportionally over a {width} x {height} rectangle"
            )));
        }
        Ok(rounded.to_usize().unwrap_or(0))
    };
    let nw = per_side(width)?;
    let nh = per_side(height)?;
    if 2 * (nw + nh) != n {
        return Err(BinnError::Meshing(format!(
            "proportional split {nw}/{nh} does not sum to {n}"
        )));
    }
    let hw = width * T::cst(0.5);
    let hh = height * T::cst(0.5);
    let corners = [
        Point2::new(center.x - hw, center.y - hh),
        Point2::new(center.x + hw, center.y - hh),
        Point2::new(center.x + hw, center.y + hh),
        Point2::new(center.x - hw, center.y + hh),
    ];
    let mut out = Vec::with_capacity(n);
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let count = if side % 2 == 0 { nw } else { nh };
        let m = T::from_usize_lossy(count);
        let at = |s: T| a + (b - a) * s;
        for i in 0..count {
            let s0 = T::from_usize_lossy(i) / m;
            let s1 = T::from_usize_lossy(i + 1) / m;
            let mid = (s0 + s1) * T::cst(0.5);
            let mut nodes = [at(s0), at(mid), at(s1)];
            // Land exactly on the corners.
            if i == 0 {
                nodes[0] = a;
            }
            if i + 1 == count {
                nodes[2] = b;
            }
            out.push(QuadraticElement::new(nodes, alpha));
        }
    }
    Ok(out)
}

fn circle_elements<T: Real>(
    radius: T,
    center: Point2<T>,
    n: usize,
    alpha: T,
) -> Vec<QuadraticElement<T>> {
    let step = T::TAU() / T::from_usize_lossy(n);
    let at = |theta: T| {
        Point2::new(
            center.x + radius * theta.cos(),
            center.y + radius * theta.sin(),
        )
    };
    // Node `i` at angle `i step`; the last element ends exactly on the first node.
    let node = |i: usize| at(step * T::from_usize_lossy(i % n));
    (0..n)
        .map(|i| {
            let t0 = step * T::from_usize_lossy(i);
            QuadraticElement::new([node(i), at(t0 + step * T::cst(0.5)), node(i + 1)], alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> Point2<f64> {
        Point2::zero()
    }

    #[test]
    fn partition_of_unity_and_kronecker() {
        for i in 0..=2000 {
            let xi = -1.0 + i as f64 / 1000.0;
            let n = shape_functions(xi);
            assert!((n[0] + n[1] + n[2] - 1.0).abs() <= 1e-15);
            let d = shape_derivatives(xi);
            assert!((d[0] + d[1] + d[2]).abs() <= 1e-15);
        }
        for (j, xj) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
            let n = shape_functions(xj);
            for (i, ni) in n.iter().enumerate() {
                assert_eq!(*ni, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn nodal_interpolation() {
        let c = Complex::new(0.3, -1.2);
        let alpha = 0.8;
        assert_eq!(interpolate_nodal([c, c, c], 0.37, alpha), c);
        let p1 = Complex::new(1.0, 2.0);
        assert_eq!(interpolate_nodal([p1, c, c], -alpha, alpha), p1);
        // f(xi) = (2 + i) xi^2 - xi + 3i sampled at -alpha, 0, alpha.
        let f = |xi: f64| Complex::new(2.0 * xi * xi - xi, xi * xi + 3.0);
        let got = interpolate_nodal([f(-alpha), f(0.0), f(alpha)], 0.5, alpha);
        assert!((got - f(0.5)).norm() < 1e-14);
    }

    #[test]
    fn straight_element_point() {
        let e = QuadraticElement::<f64>::new(
            [
                Point2::new(0.0, 0.0),
                Point2::new(0.5, 0.0),
                Point2::new(1.0, 0.0),
            ],
            0.8,
        );
        let p = e.element_point(0.0).unwrap();
        assert_eq!(p.position, Point2::new(0.5, 0.0));
        assert_eq!(p.jacobian, 0.5);
        assert_eq!(p.normal, Point2::new(0.0, -1.0));
        assert_eq!(e.element_point(-1.0).unwrap().position, e.nodes[0]);
        assert!((e.length() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_element_rejected() {
        let p = Point2::new(1.0, 1.0);
        let e = QuadraticElement::new([p, p, p], 0.8);
        assert!(matches!(e.element_point(0.0), Err(BinnError::Geometry(_))));
    }

    #[test]
    fn rectangle_counts_and_corners() {
        let curve = BoundaryCurve::<f64>::rectangle(3.0, 1.5, Point2::new(1.5, 0.75));
        let mesh = build_mesh(&curve, 90, 0.8).unwrap();
        assert_eq!(mesh.n_points(), 270);
        let mesh96 = build_mesh(&curve, 96, 0.8).unwrap();
        assert_eq!(mesh96.n_points(), 288);
        let long = mesh
            .elements
            .iter()
            .filter(|e| (e.chord() - 0.1).abs() < 1e-12)
            .count();
        assert_eq!(long, 90);
        // Collocation points stay off the corners and the element ends.
        for e in &mesh.elements {
            for xi in e.collocation_xi() {
                let p = e.position(xi);
                assert!(p.distance(e.nodes[0]) > 1e-3 && p.distance(e.nodes[2]) > 1e-3);
            }
        }
        assert!((mesh.length() - 9.0).abs() < 1e-12);
        assert!(matches!(
            build_mesh(&curve, 91, 0.8),
            Err(BinnError::Meshing(_))
        ));
        assert!(matches!(
            build_mesh(&curve, 3, 0.8),
            Err(BinnError::Meshing(_))
        ));
        assert!(matches!(
            build_mesh(&curve, 90, 1.0),
            Err(BinnError::Config(_))
        ));
    }

    #[test]
    fn rectangle_normals_point_outward() {
        let center = Point2::new(1.5, 0.75);
        let mesh = build_mesh(&BoundaryCurve::<f64>::rectangle(3.0, 1.5, center), 90, 0.8).unwrap();
        for (x, n) in mesh.points.iter().zip(&mesh.normals) {
            assert!((n.norm() - 1.0).abs() <= 1e-14);
            assert!(n.dot(*x - center) > 0.0);
        }
    }

    #[test]
    fn exterior_circle_normals_point_into_obstacle() {
        let mesh = build_mesh(
            &BoundaryCurve::<f64>::circle_exterior(1.0, origin()),
            50,
            0.8,
        )
        .unwrap();
        assert_eq!(mesh.n_points(), 150);
        for (x, n) in mesh.points.iter().zip(&mesh.normals) {
            assert!((n.norm() - 1.0).abs() <= 1e-14);
            assert!(n.dot(x.normalized()) < 0.0);
        }
        let rule = QuadratureRule::<f64>::gauss_legendre(STANDARD_POINTS);
        for e in &mesh.elements {
            for &xi in &rule.nodes {
                let p = e.element_point(xi).unwrap();
                assert!((p.normal.dot(p.position.normalized()).abs() - 1.0).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn circle_perimeter_and_convergence() {
        let err = |n: usize| {
            let mesh = build_mesh(
                &BoundaryCurve::<f64>::circle_interior(1.0, origin()),
                n,
                0.8,
            )
            .unwrap();
            (mesh.length() - std::f64::consts::TAU).abs() / std::f64::consts::TAU
        };
        assert!(err(50) <= 1e-6);
        let order = (err(20) / err(40)).log2();
        assert!(order >= 3.0, "observed order {order}");
    }

    #[test]
    fn domain_membership() {
        let rect = build_mesh(
            &BoundaryCurve::<f64>::rectangle(3.0, 1.5, Point2::new(1.5, 0.75)),
            90,
            0.8,
        )
        .unwrap();
        assert!(rect.in_domain(Point2::new(1.5, 0.75)));
        assert!(rect.in_domain(Point2::new(0.01, 0.01)));
        assert!(!rect.in_domain(Point2::new(3.2, 0.75)));
        let ext = build_mesh(
            &BoundaryCurve::<f64>::circle_exterior(1.0, origin()),
            50,
            0.8,
        )
        .unwrap();
        assert!(ext.in_domain(Point2::new(1.05, 0.0)));
        assert!(ext.in_domain(Point2::new(-4.0, 3.0)));
        assert!(!ext.in_domain(Point2::new(0.5, 0.5)));
        assert!((ext.distance_to_boundary(Point2::new(2.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_preserves_geometry() {
        let e = build_mesh(
            &BoundaryCurve::<f64>::circle_interior(1.0, origin()),
            8,
            0.8,
        )
        .unwrap()
        .elements[3];
        let [l, r] = e.split();
        for xi in [-0.9, -0.2, 0.4, 1.0] {
            assert!((l.position(xi) - e.position((xi - 1.0) * 0.5)).norm() < 1e-15);
            assert!((r.position(xi) - e.position((xi + 1.0) * 0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn dump_has_one_line_per_element() {
        let mesh = build_mesh(
            &BoundaryCurve::<f64>::circle_exterior(1.0, origin()),
            12,
            0.8,
        )
        .unwrap();
        let mut buf = Vec::new();
        mesh.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[0].split_whitespace().count(), 19);
    }

    #[test]
    fn works_in_single_precision() {
        let mesh = build_mesh(
            &BoundaryCurve::<f32>::circle_interior(1.0, Point2::zero()),
            16,
            0.8,
        )
        .unwrap();
        assert!((mesh.length() - std::f32::consts::TAU).abs() < 1e-3);
    }

    #[test]
    fn circle_meshes_close_exactly() {
        for n in 4..60 {
            let mesh = build_mesh(&BoundaryCurve::circle_interior(1.0, origin()), n, 0.8).unwrap();
            assert_eq!(mesh.elements[n - 1].nodes[2], mesh.elements[0].nodes[0]);
            assert_eq!(mesh.winding_number(origin()), 1, "n = {n}");
            assert_eq!(mesh.winding_number(Point2::new(-1.03, 0.0)), 0, "n = {n}");
        }
    }
}

//! Boundary conditions, residual losses, training and the direct BEM solve.

use std::time::Instant;

use num_complex::Complex;
use num_traits::Zero;

use crate::analytic::{case1_exact, pulsating_exact, AcousticMedium};
use crate::assembly::{plane_wave_trace, InfluenceMatrices, PlaneWave};
use crate::error::{BinnError, Result};
use crate::geometry::{BoundaryMesh, CurveShape};
use crate::linalg::{CMatrix, LuFactorization};
use crate::neural::{MlpModel, PointAdjoint, PointOutput};
use crate::optim::{Adam, Bfgs, BfgsStep};
use crate::scalar::{abs2, Point2, Real};

/// Condition estimate above which the direct solve is rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Logged losses above this multiple of the initial loss count as diverging.
const DIVERGENCE_FACTOR: f64 = 1e6;
/// Consecutive diverging log entries that abort training.
const DIVERGENCE_PATIENCE: usize = 100;

/// Prescribed or free nodal value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nodal<T> {
    Known(Complex<T>),
    Unknown,
}

impl<T: Real> Nodal<T> {
    pub fn known(self) -> Option<Complex<T>> {
        match self {
            Nodal::Known(v) => Some(v),
            Nodal::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        matches!(self, Nodal::Known(_))
    }
}

/// Boundary conditions at every collocation point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub points: Vec<Point2<T>>,
    pub normals: Vec<Point2<T>>,
    pub p: Vec<Nodal<T>>,
    pub q: Vec<Nodal<T>>,
}

impl<T: Real> BoundaryData<T> {
    pub fn new(
        points: Vec<Point2<T>>,
        normals: Vec<Point2<T>>,
        p: Vec<Nodal<T>>,
        q: Vec<Nodal<T>>,
    ) -> Result<Self> {
        let n = points.len();
        for len in [normals.len(), p.len(), q.len()] {
            if len != n {
                return Err(BinnError::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(Self {
            points,
            normals,
            p,
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with prescribed pressure.
    pub fn n_dirichlet(&self) -> usize {
        self.p.iter().filter(|v| v.is_known()).count()
    }

    /// Points with prescribed normal derivative.
    pub fn n_neumann(&self) -> usize {
        self.q.iter().filter(|v| v.is_known()).count()
    }
}

/// Boundary-value problems with closed-form data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem<T> {
    /// Pressure `cos(k x1) + i sin(k x2)` prescribed on the whole rectangle.
    Case1Dirichlet { k: T },
    /// Rigid left, top and bottom sides; `p = sin x2 + i cos x2` on the right.
    Case2Mixed { k: T },
    /// Cylinder with uniform normal wall velocity `v_bar`.
    Pulsating {
        medium: AcousticMedium<T>,
        v_bar: Complex<T>,
    },
    /// Scattered field around a rigid cylinder.
    Scattering { wave: PlaneWave<T> },
}

impl<T: Real> Problem<T> {
    pub fn wave_number(&self) -> T {
        match *self {
            Problem::Case1Dirichlet { k } | Problem::Case2Mixed { k } => k,
            Problem::Pulsating { medium, .. } => medium.k,
            Problem::Scattering { wave } => wave.k,
        }
    }
}

/// Which side of the rectangle a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

fn rectangle_side<T: Real>(x: Point2<T>, width: T, height: T, center: Point2<T>) -> Option<Side> {
    let tol = T::cst(1e-9) * width.max(height);
    let hw = width * T::cst(0.5);
    let hh = height * T::cst(0.5);
    let within_x = (x.x - center.x).abs() <= hw + tol;
    let within_y = (x.y - center.y).abs() <= hh + tol;
    if within_y && (x.x - (center.x + hw)).abs() <= tol {
        Some(Side::Right)
    } else if within_y && (x.x - (center.x - hw)).abs() <= tol {
        Some(Side::Left)
    } else if within_x && (x.y - (center.y - hh)).abs() <= tol {
        Some(Side::Bottom)
    } else if within_x && (x.y - (center.y + hh)).abs() <= tol {
        Some(Side::Top)
    } else {
        None
    }
}

/// Pressure prescribed on the right side of the mixed problem.
pub fn case2_right_pressure<T: Real>(x: Point2<T>) -> Complex<T> {
    Complex::new(x.y.sin(), x.y.cos())
}

/// Boundary data of `problem` at the collocation points of `mesh`.
pub fn encode_boundary<T: Real>(
    mesh: &BoundaryMesh<T>,
    problem: &Problem<T>,
) -> Result<BoundaryData<T>> {
    let n = mesh.n_points();
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let uncovered = |i: usize, x: Point2<T>| BinnError::BoundaryCondition {
        index: i,
        x: x.x.to_f64().unwrap_or(f64::NAN),
        y: x.y.to_f64().unwrap_or(f64::NAN),
    };
    let zero = Complex::zero();
    match (*problem, mesh.curve.shape) {
        (
            Problem::Case1Dirichlet { k },
            CurveShape::Rectangle {
                width,
                height,
                center,
            },
        ) => {
            for (i, &x) in mesh.points.iter().enumerate() {
                rectangle_side(x, width, height, center).ok_or_else(|| uncovered(i, x))?;
                p.push(Nodal::Known(case1_exact(x, k).0));
                q.push(Nodal::Unknown);
            }
        }
        (
            Problem::Case2Mixed { .. },
            CurveShape::Rectangle {
                width,
                height,
                center,
            },
        ) => {
            for (i, &x) in mesh.points.iter().enumerate() {
                match rectangle_side(x, width, height, center).ok_or_else(|| uncovered(i, x))? {
                    Side::Right => {
                        p.push(Nodal::Known(case2_right_pressure(x)));
                        q.push(Nodal::Unknown);
                    }
                    _ => {
                        p.push(Nodal::Unknown);
                        q.push(Nodal::Known(zero));
                    }
                }
            }
        }
        (Problem::Pulsating { medium, v_bar }, CurveShape::Circle { radius, center }) => {
            // Wall value of dp/dr, projected on the mesh normal.
            let (_, dp_dr) = pulsating_exact(radius, &medium, radius, v_bar)?;
            for (&x, &nx) in mesh.points.iter().zip(&mesh.normals) {
                let radial = (x - center).normalized();
                p.push(Nodal::Unknown);
                q.push(Nodal::Known(dp_dr * nx.dot(radial)));
            }
        }
        (Problem::Scattering { wave }, CurveShape::Circle { .. }) => {
            for (&x, &nx) in mesh.points.iter().zip(&mesh.normals) {
                let (_, q_inc) = plane_wave_trace(&wave, x, nx);
                p.push(Nodal::Unknown);
                q.push(Nodal::Known(-q_inc));
            }
        }
        _ => {
            return Err(BinnError::Config(
                "boundary condition does not match the mesh geometry".into(),
            ))
        }
    }
    BoundaryData::new(mesh.points.clone(), mesh.normals.clone(), p, q)
}

fn complex_of<T: Real>(v: [T; 2]) -> Complex<T> {
    Complex::new(v[0], v[1])
}

/// `n·∇` applied to both network heads.
fn normal_derivative<T: Real>(out: &PointOutput<T>, n: Point2<T>) -> Complex<T> {
    Complex::new(
        out.grad[0][0] * n.x + out.grad[0][1] * n.y,
        out.grad[1][0] * n.x + out.grad[1][1] * n.y,
    )
}

/// Full boundary vectors: prescribed values where known, the network and its
/// normal derivative elsewhere.
pub fn boundary_vectors<T: Real>(
    model: &MlpModel<T>,
    data: &BoundaryData<T>,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let out = model.evaluate_batch(&data.points);
    fill_vectors(&out, data)
}

fn fill_vectors<T: Real>(
    out: &[PointOutput<T>],
    data: &BoundaryData<T>,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let p = (0..data.len())
        .map(|m| {
            data.p[m]
                .known()
                .unwrap_or_else(|| complex_of(out[m].value))
        })
        .collect();
    let q = (0..data.len())
        .map(|m| {
            data.q[m]
                .known()
                .unwrap_or_else(|| normal_derivative(&out[m], data.normals[m]))
        })
        .collect();
    (p, q)
}

fn mean_square<T: Real>(r: &[Complex<T>]) -> Result<T> {
    if let Some(i) = r
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(BinnError::NonFinite { index: i });
    }
    let total = r.iter().fold(T::zero(), |s, &z| s + abs2(z));
    Ok(total / T::from_usize_lossy(r.len().max(1)))
}

/// Mean squared modulus of `H p - G q`.
pub fn loss_plain<T: Real>(
    p: &[Complex<T>],
    q: &[Complex<T>],
    matrices: &InfluenceMatrices<T>,
) -> Result<T> {
    check_len(p.len(), matrices.dim())?;
    check_len(q.len(), matrices.dim())?;
    mean_square(&matrices.residual(p, q))
}

/// Residual of the integral equation with every value taken from the network,
/// plus mean squared misfits of the prescribed pressures and normal
/// derivatives. Terms without constrained points are left out.
pub fn loss_composite<T: Real>(
    model: &MlpModel<T>,
    data: &BoundaryData<T>,
    matrices: &InfluenceMatrices<T>,
) -> Result<T> {
    let obj = Objective::new(LossKind::Composite, data, matrices)?;
    obj.value(model)
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(BinnError::Dimension { expected, got })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Known values substituted, residual of the integral equation only.
    Plain,
    /// Network everywhere plus boundary-condition penalties.
    Composite,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Plain => "plain",
            LossKind::Composite => "composite",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = BinnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(LossKind::Plain),
            "composite" => Ok(LossKind::Composite),
            other => Err(BinnError::Config(format!("unknown loss kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Network-supplied quantity feeding one column of the residual operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    P(usize),
    Q(usize),
}

/// Residual `A u + b` as a function of the network-supplied values `u`.
#[derive(Debug, Clone)]
struct ResidualOperator<T> {
    a: CMatrix<T>,
    b: Vec<Complex<T>>,
    slots: Vec<Slot>,
}

impl<T: Real> ResidualOperator<T> {
    /// Columns of `H` for free pressures and of `-G` for free normal
    /// derivatives; prescribed values are folded into `b`.
    fn new(data: &BoundaryData<T>, matrices: &InfluenceMatrices<T>, all_free: bool) -> Self {
        let n = data.len();
        let mut slots = Vec::new();
        for m in 0..n {
            if all_free || !data.p[m].is_known() {
                slots.push(Slot::P(m));
            }
            if all_free || !data.q[m].is_known() {
                slots.push(Slot::Q(m));
            }
        }
        let a = CMatrix::from_fn(n, slots.len(), |i, j| match slots[j] {
            Slot::P(m) => matrices.h.get(i, m),
            Slot::Q(m) => -matrices.g.get(i, m),
        });
        let b = if all_free {
            vec![Complex::zero(); n]
        } else {
            let p: Vec<Complex<T>> = data
                .p
                .iter()
                .map(|v| v.known().unwrap_or_else(Complex::zero))
                .collect();
            let q: Vec<Complex<T>> = data
                .q
                .iter()
                .map(|v| v.known().unwrap_or_else(Complex::zero))
                .collect();
            matrices.residual(&p, &q)
        };
        Self { a, b, slots }
    }

    fn unknowns(&self, out: &[PointOutput<T>], data: &BoundaryData<T>) -> Vec<Complex<T>> {
        self.slots
            .iter()
            .map(|&s| match s {
                Slot::P(m) => complex_of(out[m].value),
                Slot::Q(m) => normal_derivative(&out[m], data.normals[m]),
            })
            .collect()
    }

    fn residual(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let au = self.a.mul_vec(u);
        au.into_iter().zip(&self.b).map(|(x, &y)| x + y).collect()
    }

    /// Adds `scale · ∂/∂(outputs) Σ|r|²` given `z = Aᴴ r`.
    fn scatter(
        &self,
        z: &[Complex<T>],
        scale: T,
        data: &BoundaryData<T>,
        adj: &mut [PointAdjoint<T>],
    ) {
        for (&s, &zj) in self.slots.iter().zip(z) {
            let (re, im) = (zj.re * scale, zj.im * scale);
            match s {
                Slot::P(m) => {
                    adj[m].value[0] += re;
                    adj[m].value[1] += im;
                }
                Slot::Q(m) => {
                    let n = data.normals[m];
                    adj[m].grad[0][0] += re * n.x;
                    adj[m].grad[0][1] += re * n.y;
                    adj[m].grad[1][0] += im * n.x;
                    adj[m].grad[1][1] += im * n.y;
                }
            }
        }
    }
}

/// A loss bound to fixed boundary data and influence matrices.
#[derive(Debug, Clone)]
pub struct Objective<'a, T> {
    kind: LossKind,
    data: &'a BoundaryData<T>,
    op: ResidualOperator<T>,
}

impl<'a, T: Real> Objective<'a, T> {
    pub fn new(
        kind: LossKind,
        data: &'a BoundaryData<T>,
        matrices: &InfluenceMatrices<T>,
    ) -> Result<Self> {
        check_len(data.len(), matrices.dim())?;
        let op = ResidualOperator::new(data, matrices, kind == LossKind::Composite);
        Ok(Self { kind, data, op })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    /// Loss and its sensitivity to every network output.
    pub fn loss_and_adjoints(&self, out: &[PointOutput<T>]) -> Result<(T, Vec<PointAdjoint<T>>)> {
        check_len(out.len(), self.data.len())?;
        let n = self.data.len();
        let r = self.op.residual(&self.op.unknowns(out, self.data));
        let mut loss = mean_square(&r)?;
        let mut adj = vec![PointAdjoint::default(); n];
        let two = T::cst(2.0);
        let z = self.op.a.adjoint_mul_vec(&r);
        self.op
            .scatter(&z, two / T::from_usize_lossy(n), self.data, &mut adj);
        if self.kind == LossKind::Composite {
            let nd = self.data.n_dirichlet();
            if nd > 0 {
                let w = T::one() / T::from_usize_lossy(nd);
                for m in 0..n {
                    if let Some(pk) = self.data.p[m].known() {
                        let d = complex_of(out[m].value) - pk;
                        loss += abs2(d) * w;
                        adj[m].value[0] += two * w * d.re;
                        adj[m].value[1] += two * w * d.im;
                    }
                }
            }
            let nn = self.data.n_neumann();
            if nn > 0 {
                let w = T::one() / T::from_usize_lossy(nn);
                for m in 0..n {
                    if let Some(qk) = self.data.q[m].known() {
                        let nm = self.data.normals[m];
                        let d = normal_derivative(&out[m], nm) - qk;
                        loss += abs2(d) * w;
                        let (re, im) = (two * w * d.re, two * w * d.im);
                        adj[m].grad[0][0] += re * nm.x;
                        adj[m].grad[0][1] += re * nm.y;
                        adj[m].grad[1][0] += im * nm.x;
                        adj[m].grad[1][1] += im * nm.y;
                    }
                }
            }
        }
        if !loss.is_finite() {
            let idx = adj.iter().position(|a| !adjoint_finite(a)).unwrap_or(0);
            return Err(BinnError::NonFinite { index: idx });
        }
        Ok((loss, adj))
    }

    pub fn value(&self, model: &MlpModel<T>) -> Result<T> {
        let out = model.evaluate_batch(&self.data.points);
        Ok(self.loss_and_adjoints(&out)?.0)
    }

    pub fn value_and_gradient(&self, model: &MlpModel<T>) -> Result<(T, Vec<T>)> {
        let mut failure = None;
        let res =
            model.parameter_gradient(&self.data.points, |out| match self.loss_and_adjoints(out) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    (T::nan(), vec![PointAdjoint::default(); out.len()])
                }
            });
        match failure {
            Some(e) => Err(e),
            None => res,
        }
    }
}

fn adjoint_finite<T: Real>(a: &PointAdjoint<T>) -> bool {
    a.value
        .iter()
        .chain(a.grad.iter().flatten())
        .all(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Total optimizer iterations over both stages.
    pub max_iterations: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Share of the iterations spent in Adam before switching to BFGS;
    /// 1 disables the BFGS stage.
    pub adam_fraction: f64,
    /// Log every `stride` iterations (the first and last are always logged).
    pub stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Plain,
            max_iterations: 10_000,
            learning_rate: 1e-3,
            adam_fraction: 0.05,
            stride: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BinnError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.adam_fraction) {
            return Err(BinnError::Config(format!(
                "adam_fraction must lie in [0, 1], got {}",
                self.adam_fraction
            )));
        }
        if self.stride == 0 {
            return Err(BinnError::Config(
                "logging stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Iterations run with Adam.
    pub fn adam_iterations(&self) -> usize {
        ((self.max_iterations as f64) * self.adam_fraction).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry<T> {
    pub iteration: usize,
    pub loss: T,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory<T> {
    pub entries: Vec<HistoryEntry<T>>,
    /// Lowest loss seen, whose parameters the trained model carries.
    pub best_loss: Option<T>,
    /// Iterations actually performed (BFGS may stop early once it stalls).
    pub iterations: usize,
}

impl<T: Real> TrainHistory<T> {
    pub fn final_loss(&self) -> Option<T> {
        self.best_loss
    }
}

/// Trains `model` in place and returns its history. The model ends up with
/// the best parameters seen.
pub fn train<T: Real>(
    model: &mut MlpModel<T>,
    data: &BoundaryData<T>,
    matrices: &InfluenceMatrices<T>,
    config: &TrainConfig,
) -> Result<TrainHistory<T>> {
    config.validate()?;
    let objective = Objective::new(config.loss, data, matrices)?;
    let start = Instant::now();
    let mut history = TrainHistory::default();

    let mut x = model.params().to_vec();
    let mut probe = model.clone();
    let mut eval = |x: &[T]| -> Result<(T, Vec<T>)> {
        probe.set_params(x)?;
        objective.value_and_gradient(&probe)
    };
    let (mut f, mut g) = eval(&x)?;
    let initial = f;
    let mut best = (f, x.clone());
    let mut diverging = 0;
    let mut log = |it: usize, f: T, history: &mut TrainHistory<T>| -> Result<()> {
        history.entries.push(HistoryEntry {
            iteration: it,
            loss: f,
            seconds: start.elapsed().as_secs_f64(),
        });
        if f > initial * T::cst(DIVERGENCE_FACTOR) {
            diverging += 1;
            if diverging >= DIVERGENCE_PATIENCE {
                let trail = history
                    .entries
                    .iter()
                    .map(|e| (e.iteration, e.loss.to_f64().unwrap_or(f64::NAN)))
                    .collect();
                return Err(BinnError::Divergence {
                    iteration: it,
                    loss: f.to_f64().unwrap_or(f64::NAN),
                    history: trail,
                });
            }
        } else {
            diverging = 0;
        }
        Ok(())
    };
    log(0, f, &mut history)?;

    let adam_iters = config.adam_iterations();
    let mut adam = Adam::new(x.len(), T::cst(config.learning_rate));
    let mut bfgs = Bfgs::new(x.len());
    let mut done = 0;
    for it in 1..=config.max_iterations {
        if it <= adam_iters {
            adam.step(&mut x, &g);
            (f, g) = eval(&x)?;
        } else if bfgs.step(&mut x, &mut f, &mut g, &mut eval)? == BfgsStep::Stalled {
            break;
        }
        done = it;
        if f < best.0 {
            best = (f, x.clone());
        }
        if it % config.stride == 0 || it == config.max_iterations {
            log(it, f, &mut history)?;
        }
    }
    if history.entries.last().map(|e| e.iteration) != Some(done) {
        log(done, f, &mut history)?;
    }
    model.set_params(&best.1)?;
    history.best_loss = Some(best.0);
    history.iterations = done;
    Ok(history)
}

/// Direct solve of the discretized integral equation with one unknown per
/// point. Returns the completed `(p, q)`.
pub fn oracle_solve<T: Real>(
    data: &BoundaryData<T>,
    matrices: &InfluenceMatrices<T>,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    check_len(data.len(), matrices.dim())?;
    for m in 0..data.len() {
        if data.p[m].is_known() == data.q[m].is_known() {
            let x = data.points[m];
            return Err(BinnError::BoundaryCondition {
                index: m,
                x: x.x.to_f64().unwrap_or(f64::NAN),
                y: x.y.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let op = ResidualOperator::new(data, matrices, false);
    let lu = LuFactorization::new(&op.a)?;
    let cond = lu.condition_estimate();
    if !(cond <= T::cst(MAX_CONDITION)) {
        return Err(BinnError::SingularSystem {
            condition: cond.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    let rhs: Vec<Complex<T>> = op.b.iter().map(|&v| -v).collect();
    let u = lu.solve(&rhs);
    let mut p: Vec<Complex<T>> = data
        .p
        .iter()
        .map(|v| v.known().unwrap_or_else(Complex::zero))
        .collect();
    let mut q: Vec<Complex<T>> = data
        .q
        .iter()
        .map(|v| v.known().unwrap_or_else(Complex::zero))
        .collect();
    for (&s, &v) in op.slots.iter().zip(&u) {
        match s {
            Slot::P(m) => p[m] = v,
            Slot::Q(m) => q[m] = v,
        }
    }
    Ok((p, q))
}

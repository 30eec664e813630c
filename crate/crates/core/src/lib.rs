//! Boundary integrated neural networks for the 2D Helmholtz equation.
//!
//! A small fully connected network supplies the unknown boundary pressure or
//! its normal derivative; training drives the residual of the discretized
//! boundary integral equation to zero. The same influence matrices also feed
//! a direct BEM solve used as a reference.
//!
//! Everything is generic over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`.

// `!(x > 0)` style tests are deliberate: they also reject NaN.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::assign_op_pattern,
    clippy::type_complexity
)]

pub mod analytic;
pub mod assembly;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod neural;
pub mod optim;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod special;

pub use error::{BinnError, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type Point = scalar::Point2<f64>;
pub type Curve = geometry::BoundaryCurve<f64>;
pub type Mesh = geometry::BoundaryMesh<f64>;
pub type Element = geometry::QuadraticElement<f64>;
pub type Matrix = linalg::CMatrix<f64>;
pub type Matrices = assembly::InfluenceMatrices<f64>;
pub type Medium = analytic::AcousticMedium<f64>;
pub type Wave = assembly::PlaneWave<f64>;
pub type Model = neural::MlpModel<f64>;
pub type Data = solver::BoundaryData<f64>;
pub type History = solver::TrainHistory<f64>;
pub type BoundaryProblem = solver::Problem<f64>;

//! Configuration-driven runner for the boundary integrated neural network
//! benchmarks: rectangle problems with Dirichlet and mixed conditions, a
//! pulsating cylinder and plane-wave scattering by a rigid cylinder.

pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare, CompareReport, ComparisonRow};
pub use config::{preset, Benchmark, Mode, Overrides, RunConfig};
pub use run::{run, ErrorRow, RunReport};

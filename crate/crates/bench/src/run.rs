//! Single-benchmark pipeline: mesh, assemble, encode, train or solve,
//! evaluate the field and compare against the reference.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use binn_core::analytic::{case1_exact, pulsating_exact, scattering_at, AcousticMedium};
use binn_core::assembly::{assemble, PlaneWave};
use binn_core::field::{
    case1_line, case2_grid, pointwise_errors, pulsating_grid, relative_error,
    relative_error_modulus, scattering_annulus, FieldEvaluator,
};
use binn_core::geometry::{build_mesh, BoundaryCurve};
use binn_core::neural::{init_model, Activation};
use binn_core::solver::{boundary_vectors, encode_boundary, oracle_solve, train, LossKind};
use binn_core::{BinnError, BoundaryProblem, Complex64, Data, History, Matrices, Mesh, Point};
use serde::Serialize;

use crate::config::{Benchmark, Mode, RunConfig};

/// Cylinder radius, m.
pub const RADIUS: f64 = 1.0;
/// Rectangle width and height, m.
pub const RECTANGLE: (f64, f64) = (3.0, 1.5);

/// Discretized problem at one wave number with its sampling points and
/// reference field.
pub struct Case {
    pub k: f64,
    pub mesh: Mesh,
    pub matrices: Matrices,
    pub data: Data,
    pub samples: Vec<Point>,
    pub reference: Reference,
}

pub struct Reference {
    /// `analytic` or `oracle`.
    pub kind: &'static str,
    pub values: Vec<Complex64>,
    /// Sample points whose series hit the order cap before converging.
    pub series_warnings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub re_re: f64,
    pub re_im: f64,
    pub re_modulus: f64,
    pub max_pointwise: f64,
}

pub struct Solution {
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
    /// `None` for the direct solve.
    pub history: Option<History>,
    pub field: Vec<Complex64>,
    pub errors: ErrorSummary,
    pub seconds: f64,
}

impl Solution {
    pub fn final_loss(&self) -> Option<f64> {
        self.history.as_ref().and_then(|h| h.final_loss())
    }

    pub fn iterations(&self) -> Option<usize> {
        self.history.as_ref().map(|h| h.iterations)
    }
}

fn problem(cfg: &RunConfig, k: f64) -> Result<BoundaryProblem> {
    Ok(match cfg.benchmark {
        Benchmark::Case1Dirichlet => BoundaryProblem::Case1Dirichlet { k },
        Benchmark::Case2Mixed => BoundaryProblem::Case2Mixed { k },
        Benchmark::Pulsating => BoundaryProblem::Pulsating {
            medium: medium(cfg, k)?,
            v_bar: v_bar(cfg),
        },
        Benchmark::Scattering | Benchmark::ScatteringSweep => BoundaryProblem::Scattering {
            wave: PlaneWave::unit_x(k),
        },
    })
}

fn medium(cfg: &RunConfig, k: f64) -> Result<AcousticMedium<f64>> {
    Ok(AcousticMedium::new(cfg.medium.rho, cfg.medium.c, k)?)
}

fn v_bar(cfg: &RunConfig) -> Complex64 {
    Complex64::new(cfg.medium.v_bar[0], cfg.medium.v_bar[1])
}

/// Builds mesh, matrices, boundary data, sampling points and reference.
pub fn build_case(cfg: &RunConfig, k: f64) -> Result<Case> {
    let (w, h) = RECTANGLE;
    let curve = if cfg.benchmark.is_interior() {
        BoundaryCurve::rectangle(w, h, Point::new(w / 2.0, h / 2.0))
    } else {
        BoundaryCurve::circle_exterior(RADIUS, Point::zero())
    };
    let mesh = build_mesh(&curve, cfg.elements, cfg.alpha)?;
    let matrices = assemble(&mesh, k).with_context(|| format!("assembling at k = {k}"))?;
    let data = encode_boundary(&mesh, &problem(cfg, k)?)?;
    let samples = match cfg.benchmark {
        Benchmark::Case1Dirichlet => case1_line(),
        Benchmark::Case2Mixed => case2_grid(),
        Benchmark::Pulsating => pulsating_grid(RADIUS),
        Benchmark::Scattering | Benchmark::ScatteringSweep => scattering_annulus(RADIUS),
    };
    let reference = match cfg.benchmark {
        Benchmark::Case1Dirichlet => Reference {
            kind: "analytic",
            values: samples.iter().map(|&x| case1_exact(x, k).0).collect(),
            series_warnings: 0,
        },
        Benchmark::Case2Mixed => {
            let (p, q) =
                oracle_solve(&data, &matrices).context("direct solve for the reference field")?;
            let values = FieldEvaluator::new(&mesh, k)?.eval_many(&samples, &p, &q)?;
            Reference {
                kind: "oracle",
                values: values.iter().map(|s| s.pressure).collect(),
                series_warnings: 0,
            }
        }
        Benchmark::Pulsating => {
            let medium = medium(cfg, k)?;
            let values = samples
                .iter()
                .map(|x| Ok(pulsating_exact(x.norm(), &medium, RADIUS, v_bar(cfg))?.0))
                .collect::<Result<Vec<_>>>()?;
            Reference {
                kind: "analytic",
                values,
                series_warnings: 0,
            }
        }
        Benchmark::Scattering | Benchmark::ScatteringSweep => {
            let series = samples
                .iter()
                .map(|&x| scattering_at(x, k, RADIUS))
                .collect::<Result<Vec<_>, _>>()?;
            Reference {
                kind: "analytic",
                values: series.iter().map(|s| s.value).collect(),
                series_warnings: series.iter().filter(|s| !s.converged).count(),
            }
        }
    };
    Ok(Case {
        k,
        mesh,
        matrices,
        data,
        samples,
        reference,
    })
}

/// Trains a network (or solves directly for [`Mode::Oracle`]) and compares
/// the resulting field with the reference.
pub fn solve(
    case: &Case,
    cfg: &RunConfig,
    mode: Mode,
    hidden: &[usize],
    activation: Activation,
) -> Result<Solution> {
    let start = Instant::now();
    let (p, q, history) = match mode.loss() {
        None => {
            let (p, q) = oracle_solve(&case.data, &case.matrices)?;
            (p, q, None)
        }
        Some(loss) => {
            let mut model = init_model::<f64>(hidden, activation, cfg.seed)?;
            let history = train(
                &mut model,
                &case.data,
                &case.matrices,
                &cfg.train_config(loss),
            )?;
            let (p, q) = boundary_vectors(&model, &case.data);
            (p, q, Some(history))
        }
    };
    let field: Vec<Complex64> = FieldEvaluator::new(&case.mesh, case.k)?
        .eval_many(&case.samples, &p, &q)?
        .iter()
        .map(|s| s.pressure)
        .collect();
    let errors = summarize(&field, &case.reference.values)?;
    Ok(Solution {
        p,
        q,
        history,
        field,
        errors,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn summarize(field: &[Complex64], reference: &[Complex64]) -> Result<ErrorSummary> {
    let (re_re, re_im) = relative_error(field, reference)?;
    let re_modulus = relative_error_modulus(field, reference)?;
    let max_pointwise = pointwise_errors(field, reference)?
        .iter()
        .fold(0.0_f64, |m, &(a, b)| m.max(a).max(b));
    Ok(ErrorSummary {
        re_re,
        re_im,
        re_modulus,
        max_pointwise,
    })
}

/// One row of `error_report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub k: f64,
    pub reference: &'static str,
    pub errors: ErrorSummary,
    pub final_loss: Option<f64>,
    pub iterations: Option<usize>,
    pub seconds: f64,
    pub series_warnings: usize,
}

pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub(crate) fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

/// Headers of the files written by [`run`]. Column order is fixed.
/// Pointwise errors `err_*` divide by the largest reference magnitude of the
/// same component over the sampling set.
pub const LOSS_HISTORY: [&str; 4] = ["k", "iteration", "loss", "seconds"];
pub const BOUNDARY_SOLUTION: [&str; 7] = ["k", "x1", "x2", "re_p", "im_p", "re_q", "im_q"];
pub const FIELD_EVAL: [&str; 12] = [
    "k", "x1", "x2", "re_p", "im_p", "abs_p", "re_ref", "im_ref", "abs_ref", "err_re", "err_im",
    "err_abs",
];
pub const ERROR_REPORT: [&str; 11] = [
    "k",
    "reference",
    "re_re",
    "re_im",
    "re_modulus",
    "max_pointwise",
    "final_loss",
    "iterations",
    "seconds",
    "series_warnings",
    "n_samples",
];

struct Artifacts {
    loss: csv::Writer<File>,
    boundary: csv::Writer<File>,
    field: csv::Writer<File>,
    errors: csv::Writer<File>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self> {
        Ok(Self {
            loss: writer(&dir.join("loss_history.csv"), &LOSS_HISTORY)?,
            boundary: writer(&dir.join("boundary_solution.csv"), &BOUNDARY_SOLUTION)?,
            field: writer(&dir.join("field_eval.csv"), &FIELD_EVAL)?,
            errors: writer(&dir.join("error_report.csv"), &ERROR_REPORT)?,
        })
    }

    fn history(&mut self, k: f64, h: &History) -> Result<()> {
        for e in &h.entries {
            self.loss.write_record([
                k.to_string(),
                e.iteration.to_string(),
                fmt(e.loss),
                format!("{:.3}", e.seconds),
            ])?;
        }
        Ok(())
    }

    fn solution(&mut self, case: &Case, s: &Solution) -> Result<()> {
        for ((x, p), q) in case.data.points.iter().zip(&s.p).zip(&s.q) {
            self.boundary.write_record([
                case.k.to_string(),
                x.x.to_string(),
                x.y.to_string(),
                fmt(p.re),
                fmt(p.im),
                fmt(q.re),
                fmt(q.im),
            ])?;
        }
        let pointwise = pointwise_errors(&s.field, &case.reference.values)?;
        let max_abs = case
            .reference
            .values
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.norm()));
        for (((x, v), r), (e_re, e_im)) in case
            .samples
            .iter()
            .zip(&s.field)
            .zip(&case.reference.values)
            .zip(pointwise)
        {
            self.field.write_record([
                case.k.to_string(),
                x.x.to_string(),
                x.y.to_string(),
                fmt(v.re),
                fmt(v.im),
                fmt(v.norm()),
                fmt(r.re),
                fmt(r.im),
                fmt(r.norm()),
                fmt(e_re),
                fmt(e_im),
                fmt((v - r).norm() / max_abs),
            ])?;
        }
        Ok(())
    }

    fn error_row(&mut self, row: &ErrorRow, n_samples: usize) -> Result<()> {
        let e = &row.errors;
        self.errors.write_record([
            row.k.to_string(),
            row.reference.to_string(),
            fmt(e.re_re),
            fmt(e.re_im),
            fmt(e.re_modulus),
            fmt(e.max_pointwise),
            opt(row.final_loss.map(fmt)),
            opt(row.iterations),
            format!("{:.3}", row.seconds),
            row.series_warnings.to_string(),
            n_samples.to_string(),
        ])?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.loss.flush()?;
        self.boundary.flush()?;
        self.field.flush()?;
        self.errors.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    build: BuildInfo,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct BuildInfo {
    binn_version: &'static str,
    os: &'static str,
    arch: &'static str,
    threads: usize,
}

/// Writes `run_manifest.toml`. Its `[config]` table is a complete run
/// configuration, so `binn run --config run_manifest.toml` repeats the run.
pub fn write_manifest(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let manifest = Manifest {
        build: BuildInfo {
            binn_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        },
        config: cfg,
    };
    let text = toml::to_string(&manifest).context("serializing manifest")?;
    fs::write(dir.join("run_manifest.toml"), text).context("writing run_manifest.toml")
}

fn write_plot_script(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let field = match cfg.benchmark {
        Benchmark::Case1Dirichlet => "\
set output 'field.png'
set xlabel 'x1'
set ylabel 'pressure'
plot 'field_eval.csv' using 2:4 with points title 'Re p', '' using 2:7 with lines title 'Re p (reference)', \\
     '' using 2:5 with points title 'Im p', '' using 2:8 with lines title 'Im p (reference)'
"
        .to_string(),
        Benchmark::ScatteringSweep => "\
set output 'sweep.png'
set logscale y
set xlabel 'k'
set ylabel 'relative error'
plot 'error_report.csv' using 1:3 with linespoints title 'RE(Re)', '' using 1:4 with linespoints title 'RE(Im)'
"
        .to_string(),
        _ => "\
set output 'field_error.png'
set size ratio -1
set xlabel 'x1'
set ylabel 'x2'
set cblabel '|p - p_ref|'
plot 'field_eval.csv' using 2:3:12 with points pt 5 ps 0.6 palette notitle
"
        .to_string(),
    };
    let script = format!(
        "# gnuplot script: run `gnuplot plot.gp` inside this directory.\n\
set datafile separator ','\n\
set key autotitle columnhead\n\
set terminal pngcairo size 900,600\n\
set output 'loss.png'\n\
set logscale y\n\
set xlabel 'iteration'\n\
set ylabel 'loss'\n\
plot 'loss_history.csv' using 2:3 with lines title '{}'\n\
unset logscale\n\
{field}",
        cfg.benchmark.name()
    );
    fs::write(dir.join("plot.gp"), script).context("writing plot.gp")
}

/// Result of [`run`]: one row per wave number.
pub struct RunReport {
    pub out: PathBuf,
    pub rows: Vec<ErrorRow>,
}

/// Runs a configuration end to end and writes every artifact into
/// `cfg.out`. On divergence the loss history and manifest written so far are
/// kept and the error is returned.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let loss = cfg.loss_kind()?;
    let activation = cfg.activation()?;
    let mode = if loss == LossKind::Plain {
        Mode::BinnPlain
    } else {
        Mode::BinnComposite
    };
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    write_manifest(&cfg.out, cfg)?;
    write_plot_script(&cfg.out, cfg)?;
    let mut files = Artifacts::create(&cfg.out)?;
    let mut rows = Vec::new();
    for k in cfg.wave_numbers() {
        let case = build_case(cfg, k)?;
        let solution = match solve(&case, cfg, mode, &cfg.hidden, activation) {
            Ok(s) => s,
            Err(e) => {
                if let Some(BinnError::Divergence { history, .. }) = e.downcast_ref::<BinnError>() {
                    for &(it, l) in history {
                        files.loss.write_record([
                            k.to_string(),
                            it.to_string(),
                            fmt(l),
                            String::new(),
                        ])?;
                    }
                }
                files.flush()?;
                return Err(e.context(format!("k = {k}")));
            }
        };
        if let Some(h) = &solution.history {
            files.history(k, h)?;
        }
        files.solution(&case, &solution)?;
        let row = ErrorRow {
            k,
            reference: case.reference.kind,
            errors: solution.errors,
            final_loss: solution.final_loss(),
            iterations: solution.iterations(),
            seconds: solution.seconds,
            series_warnings: case.reference.series_warnings,
        };
        files.error_row(&row, case.samples.len())?;
        files.flush()?;
        rows.push(row);
    }
    Ok(RunReport {
        out: cfg.out.clone(),
        rows,
    })
}

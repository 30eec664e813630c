use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use binn_bench::config::{preset_summary, COMPARE_PRESETS, RUN_PRESETS};
use binn_bench::{compare, preset, run, Overrides, RunConfig};
use binn_core::BinnError;
use clap::{Args, Parser, Subcommand};

/// Thread count for the worker pool; unset means one per core.
const THREADS_VAR: &str = "BINN_THREADS";

#[derive(Parser)]
#[command(
    name = "binn",
    version,
    about = "Boundary integrated neural network benchmarks for the 2D Helmholtz equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or solve) one benchmark and write its artifacts.
    Run(Source),
    /// Run a grid of modes, architectures and activations.
    Compare(Source),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Source {
    /// TOML configuration file (a run manifest also works).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration name.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Wave number; replaces the sweep list for `scattering_sweep`.
    #[arg(long)]
    k: Option<f64>,
}

impl Source {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => preset(name)
                .ok_or_else(|| anyhow!("unknown preset `{name}`; see `binn presets`"))?,
            (None, None) => bail!("pass --config or --preset"),
        };
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            iterations: self.iterations,
            k: self.k,
        }
        .apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_VAR}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Presets => {
            for name in RUN_PRESETS {
                println!("{name:18} run      {}", preset_summary(name));
            }
            for name in COMPARE_PRESETS {
                println!("{name:18} compare  {}", preset_summary(name));
            }
        }
        Command::Run(src) => {
            let cfg = src.resolve()?;
            let report = run(&cfg)?;
            for r in &report.rows {
                let e = &r.errors;
                println!(
                    "k = {:<5} RE(Re) {:.3e}  RE(Im) {:.3e}  max pointwise {:.3e}  loss {}  iterations {}  ({:.1} s)",
                    r.k,
                    e.re_re,
                    e.re_im,
                    e.max_pointwise,
                    r.final_loss.map(|l| format!("{l:.3e}")).unwrap_or_else(|| "-".into()),
                    r.iterations.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                    r.seconds
                );
                if r.series_warnings > 0 {
                    eprintln!(
                        "warning: k = {}: series reference not converged at {} points",
                        r.k, r.series_warnings
                    );
                }
            }
            println!("artifacts in {}", report.out.display());
        }
        Command::Compare(src) => {
            let cfg = src.resolve()?;
            let report = compare(&cfg)?;
            for r in &report.rows {
                println!(
                    "{:15} {:12} {:8} loss {:>10}  RE(Re) {:.3e}  RE(Im) {:.3e}  iterations {:>5}  ({:.1} s)",
                    r.mode.name(),
                    binn_bench::compare::layer_label(&r.hidden),
                    r.activation,
                    r.final_loss.map(|l| format!("{l:.3e}")).unwrap_or_default(),
                    r.re_re,
                    r.re_im,
                    r.iterations.map(|n| n.to_string()).unwrap_or_default(),
                    r.seconds
                );
            }
            println!("table in {}", report.out.join("comparison.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<BinnError>() {
                Some(BinnError::Divergence { .. }) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

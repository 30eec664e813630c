//! Grid of runs over modes, architectures and activations.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use binn_core::neural::Activation;

use crate::config::{Mode, RunConfig};
use crate::run::{build_case, fmt, solve, write_manifest, writer};

pub const COMPARISON: [&str; 10] = [
    "k",
    "mode",
    "hidden",
    "activation",
    "final_loss",
    "re_re",
    "re_im",
    "max_pointwise",
    "iterations",
    "seconds",
];
pub const COMPARISON_HISTORY: [&str; 7] = [
    "k",
    "mode",
    "hidden",
    "activation",
    "iteration",
    "loss",
    "seconds",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub k: f64,
    pub mode: Mode,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub final_loss: Option<f64>,
    pub re_re: f64,
    pub re_im: f64,
    pub max_pointwise: f64,
    pub iterations: Option<usize>,
    pub seconds: f64,
}

/// Layer sizes written as `2-10-10-2`.
pub fn layer_label(hidden: &[usize]) -> String {
    std::iter::once(2)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(2))
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

pub struct CompareReport {
    pub out: PathBuf,
    pub rows: Vec<ComparisonRow>,
}

/// Writes `comparison.csv` (one row per combination) and
/// `comparison_history.csv` (the loss curve of every trained row).
pub fn compare(cfg: &RunConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let Some(grid) = &cfg.compare else {
        bail!("field `compare`: the configuration has no [compare] table");
    };
    let architectures = if grid.architectures.is_empty() {
        vec![cfg.hidden.clone()]
    } else {
        grid.architectures.clone()
    };
    let activations: Vec<Activation> = if grid.activations.is_empty() {
        vec![cfg.activation()?]
    } else {
        grid.activations
            .iter()
            .map(|a| a.parse())
            .collect::<Result<_, _>>()?
    };
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    write_manifest(&cfg.out, cfg)?;
    let mut table = writer(&cfg.out.join("comparison.csv"), &COMPARISON)?;
    let mut curves = writer(&cfg.out.join("comparison_history.csv"), &COMPARISON_HISTORY)?;
    let mut rows = Vec::new();
    for k in cfg.wave_numbers() {
        let case = build_case(cfg, k)?;
        for &mode in &grid.modes {
            // The direct solve has no network, so it runs once.
            let combos: Vec<(&[usize], Activation)> = if mode == Mode::Oracle {
                vec![(&cfg.hidden, activations[0])]
            } else {
                architectures
                    .iter()
                    .flat_map(|h| activations.iter().map(move |&a| (h.as_slice(), a)))
                    .collect()
            };
            for (hidden, activation) in combos {
                let s = solve(&case, cfg, mode, hidden, activation).with_context(|| {
                    format!(
                        "{} {} {} at k = {k}",
                        mode.name(),
                        layer_label(hidden),
                        activation
                    )
                })?;
                let (label, act) = if mode == Mode::Oracle {
                    (String::new(), String::new())
                } else {
                    (layer_label(hidden), activation.to_string())
                };
                if let Some(h) = &s.history {
                    for e in &h.entries {
                        curves.write_record([
                            k.to_string(),
                            mode.name().to_string(),
                            label.clone(),
                            act.clone(),
                            e.iteration.to_string(),
                            fmt(e.loss),
                            format!("{:.3}", e.seconds),
                        ])?;
                    }
                }
                let row = ComparisonRow {
                    k,
                    mode,
                    hidden: hidden.to_vec(),
                    activation,
                    final_loss: s.final_loss(),
                    re_re: s.errors.re_re,
                    re_im: s.errors.re_im,
                    max_pointwise: s.errors.max_pointwise,
                    iterations: s.iterations(),
                    seconds: s.seconds,
                };
                table.write_record([
                    k.to_string(),
                    mode.name().to_string(),
                    label,
                    act,
                    row.final_loss.map(fmt).unwrap_or_default(),
                    fmt(row.re_re),
                    fmt(row.re_im),
                    fmt(row.max_pointwise),
                    row.iterations.map(|n| n.to_string()).unwrap_or_default(),
                    format!("{:.3}", row.seconds),
                ])?;
                table.flush()?;
                curves.flush()?;
                rows.push(row);
            }
        }
    }
    Ok(CompareReport {
        out: cfg.out.clone(),
        rows,
    })
}

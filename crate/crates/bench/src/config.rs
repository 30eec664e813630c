//! Run configuration: TOML schema, validation, presets and flag overrides.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use binn_core::neural::Activation;
use binn_core::solver::{LossKind, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Case1Dirichlet,
    Case2Mixed,
    Pulsating,
    Scattering,
    ScatteringSweep,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Case1Dirichlet => "case1_dirichlet",
            Benchmark::Case2Mixed => "case2_mixed",
            Benchmark::Pulsating => "pulsating",
            Benchmark::Scattering => "scattering",
            Benchmark::ScatteringSweep => "scattering_sweep",
        }
    }

    /// Interior problems on the rectangle, exterior ones around the cylinder.
    pub fn is_interior(self) -> bool {
        matches!(self, Benchmark::Case1Dirichlet | Benchmark::Case2Mixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    /// Share of the iterations run with Adam before BFGS takes over.
    pub adam_fraction: f64,
    /// Loss logging interval.
    pub stride: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            adam_fraction: t.adam_fraction,
            stride: t.stride,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    /// Density, kg/m³.
    pub rho: f64,
    /// Sound speed, m/s.
    pub c: f64,
    /// Wall velocity amplitude of the pulsating cylinder, `[re, im]` in m/s.
    pub v_bar: [f64; 2],
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            rho: 1.2,
            c: 341.0,
            v_bar: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    BinnPlain,
    BinnComposite,
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::BinnPlain => "binn_plain",
            Mode::BinnComposite => "binn_composite",
            Mode::Oracle => "oracle",
        }
    }

    pub fn loss(self) -> Option<LossKind> {
        match self {
            Mode::BinnPlain => Some(LossKind::Plain),
            Mode::BinnComposite => Some(LossKind::Composite),
            Mode::Oracle => None,
        }
    }
}

/// Grid of runs for the `compare` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub modes: Vec<Mode>,
    /// Hidden-layer widths to try; empty means the run's own `hidden`.
    #[serde(default)]
    pub architectures: Vec<Vec<usize>>,
    /// Activations to try; empty means the run's own `activation`.
    #[serde(default)]
    pub activations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    /// Number of boundary elements (three collocation points each).
    pub elements: usize,
    /// Hidden-layer widths.
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default = "default_loss")]
    pub loss: String,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Wave number, 1/m. Ignored by the sweep.
    pub k: f64,
    /// Wave numbers of the sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_values: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub medium: MediumConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

fn default_activation() -> String {
    "swish".into()
}

fn default_loss() -> String {
    "plain".into()
}

fn default_alpha() -> f64 {
    binn_core::geometry::DEFAULT_ALPHA
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("field `{name}`: must be positive and finite, got {v}");
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file. A run manifest is accepted too; its
    /// `[config]` table is used.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest = toml::from_str::<toml::Table>(&text)
            .ok()
            .and_then(|t| t.get("config").cloned());
        match manifest {
            Some(toml::Value::Table(t)) => {
                let cfg: RunConfig = t
                    .try_into()
                    .with_context(|| format!("{}: invalid [config] table", path.display()))?;
                cfg.validate().with_context(|| path.display().to_string())?;
                Ok(cfg)
            }
            _ => Self::from_toml(&text).with_context(|| path.display().to_string()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn activation(&self) -> Result<Activation> {
        self.activation
            .parse()
            .with_context(|| "field `activation`".to_string())
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        self.loss
            .parse()
            .with_context(|| "field `loss`".to_string())
    }

    pub fn train_config(&self, loss: LossKind) -> TrainConfig {
        TrainConfig {
            loss,
            max_iterations: self.iterations,
            learning_rate: self.optimizer.learning_rate,
            adam_fraction: self.optimizer.adam_fraction,
            stride: self.optimizer.stride,
        }
    }

    /// Wave numbers this run covers, in order.
    pub fn wave_numbers(&self) -> Vec<f64> {
        if self.benchmark == Benchmark::ScatteringSweep {
            self.k_values.clone()
        } else {
            vec![self.k]
        }
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.elements < 4 {
            bail!("field `elements`: need at least 4, got {}", self.elements);
        }
        if self.benchmark.is_interior() && !self.elements.is_multiple_of(6) {
            bail!(
                "field `elements`: the 3 x 1.5 rectangle needs a multiple of 6, got {}",
                self.elements
            );
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            bail!(
                "field `hidden`: need at least one hidden layer of positive width, got {:?}",
                self.hidden
            );
        }
        self.activation()?;
        self.loss_kind()?;
        if self.iterations == 0 {
            bail!("field `iterations`: must be at least 1");
        }
        if self.benchmark == Benchmark::ScatteringSweep {
            if self.k_values.is_empty() {
                bail!("field `k_values`: the sweep needs at least one wave number");
            }
            for &k in &self.k_values {
                positive("k_values", k)?;
            }
        } else {
            positive("k", self.k)?;
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("field `alpha`: must lie in (0, 1), got {}", self.alpha);
        }
        positive("optimizer.learning_rate", self.optimizer.learning_rate)?;
        if !(0.0..=1.0).contains(&self.optimizer.adam_fraction) {
            bail!(
                "field `optimizer.adam_fraction`: must lie in [0, 1], got {}",
                self.optimizer.adam_fraction
            );
        }
        if self.optimizer.stride == 0 {
            bail!("field `optimizer.stride`: must be at least 1");
        }
        positive("medium.rho", self.medium.rho)?;
        positive("medium.c", self.medium.c)?;
        if !self.medium.v_bar.iter().all(|v| v.is_finite()) {
            bail!("field `medium.v_bar`: must be finite");
        }
        if let Some(cmp) = &self.compare {
            if cmp.modes.is_empty() {
                bail!("field `compare.modes`: list at least one mode");
            }
            for h in &cmp.architectures {
                if h.is_empty() || h.contains(&0) {
                    bail!("field `compare.architectures`: invalid entry {h:?}");
                }
            }
            for a in &cmp.activations {
                a.parse::<Activation>()
                    .with_context(|| "field `compare.activations`".to_string())?;
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a file or preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub k: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        if let Some(k) = self.k {
            cfg.k = k;
            if cfg.benchmark == Benchmark::ScatteringSweep {
                cfg.k_values = vec![k];
            }
        }
    }
}

/// Names accepted by `--preset` for `run`.
pub const RUN_PRESETS: [&str; 5] = [
    "case1_dirichlet",
    "case2_mixed",
    "pulsating",
    "scattering",
    "scattering_sweep",
];

/// Names accepted by `--preset` for `compare`.
pub const COMPARE_PRESETS: [&str; 2] = ["loss_forms", "activations"];

fn base(
    benchmark: Benchmark,
    elements: usize,
    hidden: &[usize],
    iterations: usize,
    k: f64,
) -> RunConfig {
    RunConfig {
        benchmark,
        elements,
        hidden: hidden.to_vec(),
        activation: default_activation(),
        loss: default_loss(),
        iterations,
        seed: 1,
        k,
        k_values: Vec::new(),
        alpha: default_alpha(),
        out: PathBuf::from("out").join(benchmark.name()),
        optimizer: OptimizerConfig::default(),
        medium: MediumConfig::default(),
        compare: None,
    }
}

/// Built-in configuration by name.
pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "case1_dirichlet" => base(Benchmark::Case1Dirichlet, 90, &[10], 10_000, 2.0),
        "case2_mixed" => base(Benchmark::Case2Mixed, 96, &[20], 10_000, 2.0),
        "pulsating" => base(Benchmark::Pulsating, 50, &[10, 10], 2000, 1.0),
        "scattering" => base(Benchmark::Scattering, 100, &[10, 10], 5000, 5.0),
        "scattering_sweep" => RunConfig {
            k_values: (1..=20).map(|i| 0.5 * i as f64).collect(),
            ..base(Benchmark::ScatteringSweep, 100, &[10, 10], 5000, 5.0)
        },
        "loss_forms" => RunConfig {
            out: PathBuf::from("out/loss_forms"),
            compare: Some(CompareConfig {
                modes: vec![Mode::BinnPlain, Mode::BinnComposite],
                architectures: vec![vec![10], vec![20], vec![10, 10], vec![20, 20]],
                activations: Vec::new(),
            }),
            ..base(Benchmark::Case1Dirichlet, 90, &[10], 10_000, 2.0)
        },
        "activations" => RunConfig {
            out: PathBuf::from("out/activations"),
            compare: Some(CompareConfig {
                modes: vec![Mode::BinnPlain],
                architectures: Vec::new(),
                activations: Activation::ALL
                    .iter()
                    .map(|a| a.name().to_string())
                    .collect(),
            }),
            ..base(Benchmark::Pulsating, 50, &[10, 10], 2000, 1.0)
        },
        _ => return None,
    };
    Some(cfg)
}

/// One-line description of each preset.
pub fn preset_summary(name: &str) -> &'static str {
    match name {
        "case1_dirichlet" => "rectangle, pressure prescribed everywhere, k = 2, [2,10,2]",
        "case2_mixed" => "rectangle, three rigid sides, k = 2, [2,20,2]",
        "pulsating" => "radiating cylinder, k = 1, [2,10,10,2], 2000 iterations",
        "scattering" => "rigid cylinder in a plane wave, k = 5",
        "scattering_sweep" => "rigid cylinder, k = 0.5, 1, ..., 10",
        "loss_forms" => "four architectures x two losses on the Dirichlet rectangle",
        "activations" => "five activations on the radiating cylinder",
        _ => "",
    }
}

//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [run]
//! kind = "trajectory"
//!
//! [model]
//! alpha = 0.5
//! rho = 1.5
//!
//! [grid]
//! x_max = 4
//! t_max = 5
//! n_x = 200
//! n_t = 4000
//!
//! [cost]
//! variant = "linear"
//!
//! [trajectory]
//! x0 = [0.5, 1.25]
//!
//! [output]
//! dir = "out/traj"
//! ```
//!
//! Every key is optional. `model.beta` and `model.rho` are alternatives
//! (`beta = rho gamma`). Unknown keys are rejected. Parsing validates the
//! model, grid, cost, snapshot times and initial states; options that only
//! matter for one experiment kind are checked by
//! [`ExperimentConfig::validate_for`].

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::control::FeedbackPairing;
use crate::error::{Error, Result};
use crate::hjb::{ExitCost, Grid1D};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Trajectory,
    Converge,
    Sweep,
    Stationary,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => ExperimentKind::Solve,
            "trajectory" => ExperimentKind::Trajectory,
            "converge" => ExperimentKind::Converge,
            "sweep" => ExperimentKind::Sweep,
            "stationary" => ExperimentKind::Stationary,
            _ => return Err(Error::Config(format!("unknown run.kind '{s}'"))),
        })
    }
}

/// Space-time extent and resolution as given in the file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_max: f64,
    pub t_max: f64,
    pub n_x: usize,
    pub n_t: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_max, self.t_max, self.n_x, self.n_t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub cost: ExitCost,
    pub snapshot_times: Vec<f64>,
    pub initial_states: Vec<f64>,
    pub pairing: FeedbackPairing,
    /// Mesh widths of a refinement study.
    pub levels: Vec<f64>,
    pub sweep_alphas: Vec<f64>,
    pub sweep_domains: Vec<f64>,
    pub output_dir: PathBuf,
    pub gnuplot: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// Checks the values every experiment relies on.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build().map_err(config_err)?;
        self.cost.sample(&grid).map_err(config_err)?;
        for &t in &self.snapshot_times {
            if !(0.0..=self.grid.t_max).contains(&t) {
                return Err(Error::Config(format!(
                    "profiles.times entry {t} outside [0, {}]",
                    self.grid.t_max
                )));
            }
        }
        for &x0 in &self.initial_states {
            if !(0.0..=self.grid.x_max).contains(&x0) {
                return Err(Error::Config(format!(
                    "trajectory.x0 entry {x0} outside [0, {}]",
                    self.grid.x_max
                )));
            }
        }
        Ok(())
    }

    /// Checks the options specific to `kind`.
    pub fn validate_for(&self, kind: ExperimentKind) -> Result<()> {
        self.validate()?;
        match kind {
            ExperimentKind::Converge => self.validate_levels(),
            ExperimentKind::Sweep => self.validate_sweep(),
            _ => Ok(()),
        }
    }

    fn validate_levels(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("converge.levels is empty".into()));
        }
        for &dx in &self.levels {
            let n = self.grid.x_max / dx;
            if !(dx > 0.0) || (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 2.0 {
                return Err(Error::Config(format!(
                    "converge.levels entry {dx} must divide grid.x_max = {}",
                    self.grid.x_max
                )));
            }
        }
        Ok(())
    }

    fn validate_sweep(&self) -> Result<()> {
        for &alpha in &self.sweep_alphas {
            self.params_with_alpha(alpha).map_err(config_err)?;
        }
        for &d in &self.sweep_domains {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("sweep.domains entry {d} must be positive")));
            }
            let wide = GridSpec {
                x_max: d,
                ..self.grid
            };
            self.cost.sample(&wide.build().map_err(config_err)?).map_err(config_err)?;
        }
        Ok(())
    }

    /// The configured model with a different order.
    pub fn params_with_alpha(&self, alpha: f64) -> Result<ModelParams> {
        let p = &self.params;
        ModelParams::new(alpha, p.beta(), p.gamma(), p.n_pop(), p.m_alpha())
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        let kind = raw.run.kind;

        let m = raw.model;
        let gamma = m.gamma.unwrap_or(1.0);
        let beta = match (m.beta, m.rho) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give model.beta or model.rho, not both".into()))
            }
            (Some(b), None) => b,
            (None, Some(r)) => r * gamma,
            (None, None) => 1.5 * gamma,
        };
        let params = ModelParams::new(
            m.alpha.unwrap_or(1.0),
            beta,
            gamma,
            m.n_pop.unwrap_or(2.25),
            m.m_alpha.unwrap_or(1.0),
        )
        .map_err(config_err)?;

        let g = raw.grid;
        let grid = GridSpec {
            x_max: g.x_max.unwrap_or(4.0),
            t_max: g.t_max.unwrap_or(5.0),
            n_x: g.n_x.unwrap_or(200),
            n_t: g.n_t.unwrap_or(4000),
        };

        let cost = match (raw.cost.variant.as_deref().unwrap_or("linear"), raw.cost.table) {
            ("table", Some(t)) => ExitCost::table(t).map_err(config_err)?,
            ("table", None) => return Err(Error::Config("cost.variant = \"table\" needs cost.table".into())),
            (_, Some(_)) => {
                return Err(Error::Config("cost.table is only valid with cost.variant = \"table\"".into()))
            }
            ("linear", None) => ExitCost::Linear,
            ("kinked", None) => ExitCost::Kinked,
            ("bump", None) => ExitCost::Bump,
            (other, None) => return Err(Error::Config(format!("unknown cost.variant '{other}'"))),
        };

        let pairing = match raw.trajectory.pairing.as_deref() {
            None | Some("remaining") => FeedbackPairing::RemainingHorizon,
            Some("elapsed") => FeedbackPairing::ElapsedTime,
            Some(other) => {
                return Err(Error::Config(format!(
                    "trajectory.pairing must be 'remaining' or 'elapsed', got '{other}'"
                )))
            }
        };

        let config = ExperimentConfig {
            kind,
            params,
            grid,
            cost,
            snapshot_times: raw.profiles.times.unwrap_or_else(|| vec![0.0, grid.t_max]),
            initial_states: raw.trajectory.x0.unwrap_or_else(|| vec![0.5, 1.25]),
            pairing,
            levels: raw
                .converge
                .levels
                .unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125, 0.00625]),
            sweep_alphas: raw.sweep.alphas.unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]),
            sweep_domains: raw.sweep.domains.unwrap_or_else(|| vec![4.0, 8.0, 16.0]),
            output_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
            gnuplot: raw.output.gnuplot.unwrap_or(false),
        };
        match kind {
            Some(k) => config.validate_for(k)?,
            None => config.validate()?,
        }
        Ok(config)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    run: RawRun,
    model: RawModel,
    grid: RawGrid,
    cost: RawCost,
    profiles: RawProfiles,
    trajectory: RawTrajectory,
    converge: RawConverge,
    sweep: RawSweep,
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawRun {
    kind: Option<ExperimentKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawModel {
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    gamma: Option<f64>,
    n_pop: Option<f64>,
    m_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawGrid {
    x_max: Option<f64>,
    t_max: Option<f64>,
    n_x: Option<usize>,
    n_t: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawCost {
    variant: Option<String>,
    /// `[[x, phi], ...]`
    table: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawProfiles {
    times: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTrajectory {
    x0: Option<Vec<f64>>,
    pairing: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConverge {
    levels: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    alphas: Option<Vec<f64>>,
    domains: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    gnuplot: Option<bool>,
}

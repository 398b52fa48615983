//! Explicit upwind solver for the Hamilton-Jacobi-Bellman equation
//!
//! ```text
//! u_t + H(x, Du) = 0,   H(x, p) = (-b(x) + p/2) p - x^2/2,
//! u(x, 0) = phi(x),     u(0, t) = phi(0)
//! ```
//!
//! on `[0, x_max] x [0, T]`. Here `u(x, t)` is the optimal cost with remaining
//! horizon `t`, so the march runs from the exit cost towards longer horizons.
//!
//! The numerical Hamiltonian picks one-sided differences according to the sign
//! of `-b + p/2`. At the right boundary only the backward branch is used: the
//! optimal dynamics point inwards there, so the forward selector vanishes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{drift, ModelParams};

/// Any `|U|` above this is treated as a CFL blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// CFL ratios above this trigger a warning.
pub const CFL_WARN: f64 = 1.0;

/// Uniform space-time grid `x_i = i dx`, `t_n = n dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_max: f64,
    t_max: f64,
    n_x: usize,
    n_t: usize,
    dx: f64,
    dt: f64,
}

impl Grid1D {
    pub fn new(x_max: f64, t_max: f64, n_x: usize, n_t: usize) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) || !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::BadDimensions(format!(
                "x_max and t_max must be positive, got {x_max} and {t_max}"
            )));
        }
        if n_x < 2 || n_t < 1 {
            return Err(Error::BadDimensions(format!(
                "need n_x >= 2 and n_t >= 1, got {n_x} and {n_t}"
            )));
        }
        Ok(Grid1D {
            x_max,
            t_max,
            n_x,
            n_t,
            dx: x_max / n_x as f64,
            dt: t_max / n_t as f64,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// All `n_x + 1` space nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_x).map(|i| self.x(i)).collect()
    }

    /// Time level closest to `t`.
    pub fn nearest_level(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.n_t)
    }

    /// Same domain and horizon with a different number of time steps.
    pub fn with_time_steps(&self, n_t: usize) -> Result<Self> {
        Grid1D::new(self.x_max, self.t_max, self.n_x, n_t)
    }
}

pub fn build_grid(x_max: f64, t_max: f64, n_x: usize, n_t: usize) -> Result<Grid1D> {
    Grid1D::new(x_max, t_max, n_x, n_t)
}

/// Exit (terminal) cost `phi`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExitCost {
    /// `phi(x) = x`
    Linear,
    /// `phi(x) = min(2x + 1/2, 6x^2)`, concave kink at `x = 1/2`.
    Kinked,
    /// `phi(x) = x + exp(-40 (x - 1/2)^2)`, penalising a band around `1/2`.
    Bump,
    /// Piecewise linear through tabulated `(x, phi)` samples.
    Table(Vec<(f64, f64)>),
}

impl ExitCost {
    /// Builds a tabulated cost; abscissae must be strictly increasing.
    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidExitCost("table needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidExitCost("table abscissae must be strictly increasing".into()));
        }
        if samples.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidExitCost("table contains non-finite values".into()));
        }
        Ok(ExitCost::Table(samples))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExitCost::Linear => "linear",
            ExitCost::Kinked => "kinked",
            ExitCost::Bump => "bump",
            ExitCost::Table(_) => "table",
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match self {
            ExitCost::Linear => x,
            ExitCost::Kinked => (2.0 * x + 0.5).min(6.0 * x * x),
            ExitCost::Bump => x + (-40.0 * (x - 0.5) * (x - 0.5)).exp(),
            ExitCost::Table(s) => {
                let (lo, hi) = (s[0].0, s[s.len() - 1].0);
                if x < lo || x > hi {
                    return Err(Error::OutOfRange { x, lo, hi });
                }
                let k = s.partition_point(|&(xs, _)| xs <= x).clamp(1, s.len() - 1);
                let (x0, y0) = s[k - 1];
                let (x1, y1) = s[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
    }

    /// Samples `phi` on the grid and checks it is finite, nonnegative and
    /// minimal at `x = 0`.
    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let values = (0..=grid.n_x())
            .map(|i| self.eval(grid.x(i)))
            .collect::<Result<Vec<_>>>()?;
        let phi0 = values[0];
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidExitCost(format!(
                    "phi({}) = {v} must be finite and nonnegative",
                    grid.x(i)
                )));
            }
            if v < phi0 {
                return Err(Error::InvalidExitCost(format!(
                    "phi must attain its minimum at 0, but phi({}) = {v} < phi(0) = {phi0}",
                    grid.x(i)
                )));
            }
        }
        Ok(values)
    }
}

pub fn exit_cost_eval(cost: &ExitCost, x: f64) -> Result<f64> {
    cost.eval(x)
}

/// Upwind numerical Hamiltonian
/// `(-b + dl/2)^+ dl + (-b + dr/2)^- dr - x^2/2`.
#[inline]
pub fn numerical_hamiltonian(x: f64, b: f64, d_left: f64, d_right: f64) -> f64 {
    backward_branch(b, d_left) + forward_branch(b, d_right) - 0.5 * x * x
}

#[inline]
fn backward_branch(b: f64, d_left: f64) -> f64 {
    (-b + 0.5 * d_left).max(0.0) * d_left
}

#[inline]
fn forward_branch(b: f64, d_right: f64) -> f64 {
    (-b + 0.5 * d_right).min(0.0) * d_right
}

/// Which levels of the march to keep.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SnapshotPolicy {
    #[default]
    None,
    /// Nearest grid level to each requested time.
    Times(Vec<f64>),
    /// Every level `0..=n_t`, as needed for trajectory synthesis.
    AllLevels,
}

/// Value function samples `U^n_i` with stored snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: Grid1D,
    pub current: Vec<f64>,
    pub snapshots: BTreeMap<usize, Vec<f64>>,
    pub step_index: usize,
    pub phi0: f64,
}

impl ValueField {
    /// Level 0 of the march: `U^0_i = phi(x_i)`.
    pub fn initial(grid: Grid1D, cost: &ExitCost) -> Result<Self> {
        let current = cost.sample(&grid)?;
        let phi0 = current[0];
        Ok(ValueField {
            grid,
            current,
            snapshots: BTreeMap::new(),
            step_index: 0,
            phi0,
        })
    }

    pub fn level(&self, n: usize) -> Result<&[f64]> {
        if n == self.step_index {
            return Ok(&self.current);
        }
        self.snapshots
            .get(&n)
            .map(Vec::as_slice)
            .ok_or(Error::HistoryMissing(n))
    }

    /// Linear interpolation of the current level at `x` (clamped to the grid).
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_nodes(&self.current, self.grid.dx(), x)
    }
}

/// Piecewise linear interpolation of nodal values on `0, dx, 2dx, ...`.
pub fn interpolate_nodes(values: &[f64], dx: f64, x: f64) -> f64 {
    let last = values.len() - 1;
    let s = (x / dx).clamp(0.0, last as f64);
    let k = (s.floor() as usize).min(last - 1);
    let w = s - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// `max_i |U^{n+1}_i - U^n_i|`
    pub sup_change: f64,
    /// CFL ratio of the level that was advanced.
    pub cfl: f64,
    pub min_value: f64,
}

/// CFL history of a march.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub initial: f64,
    pub max: f64,
    pub final_ratio: f64,
}

impl CflReport {
    pub fn exceeded(&self) -> bool {
        self.max > CFL_WARN
    }
}

/// Result of a full march.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ValueField,
    pub cfl: CflReport,
    /// `sup_change` of every step, indexed by the level produced minus one.
    pub step_changes: Vec<f64>,
    /// Smallest value observed over all levels.
    pub min_value: f64,
}

impl Solution {
    /// First level `n` with `max_i |U^n - U^{n-1}| < tol`, if any.
    pub fn stabilization_level(&self, tol: f64) -> Option<usize> {
        self.step_changes.iter().position(|&c| c < tol).map(|k| k + 1)
    }
}

/// Time marcher for one parameter set on one grid. The drift is sampled once.
#[derive(Debug, Clone)]
pub struct HjbSolver {
    grid: Grid1D,
    drift: Vec<f64>,
    nodes: Vec<f64>,
}

impl HjbSolver {
    pub fn new(params: &ModelParams, grid: Grid1D) -> Self {
        let nodes = grid.nodes();
        let drift = nodes.iter().map(|&x| drift(params, x)).collect();
        HjbSolver { grid, drift, nodes }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn drift_samples(&self) -> &[f64] {
        &self.drift
    }

    /// Advances `U^n` to `U^{n+1}` into `next`. Returns the statistics of the step.
    fn advance(&self, current: &[f64], next: &mut [f64], phi0: f64) -> StepStats {
        let nx = self.grid.n_x();
        let inv_dx = 1.0 / self.grid.dx();
        let dt = self.grid.dt();
        let mut sup_change: f64 = 0.0;
        let mut speed: f64 = 0.0;
        let mut min_value = phi0;
        next[0] = phi0;
        let mut d_left = (current[1] - current[0]) * inv_dx;
        for i in 1..=nx {
            let b = self.drift[i];
            let x = self.nodes[i];
            let h = if i < nx {
                let d_right = (current[i + 1] - current[i]) * inv_dx;
                let h = numerical_hamiltonian(x, b, d_left, d_right);
                speed = speed.max((d_left - b).abs()).max((d_right - b).abs());
                d_left = d_right;
                h
            } else {
                speed = speed.max((d_left - b).abs());
                backward_branch(b, d_left) - 0.5 * x * x
            };
            let u = current[i] - dt * h;
            next[i] = u;
            sup_change = sup_change.max((u - current[i]).abs());
            min_value = min_value.min(u);
        }
        StepStats {
            sup_change,
            cfl: speed * dt * inv_dx,
            min_value,
        }
    }

    /// One explicit step of the scheme, in place.
    pub fn step(&self, field: &mut ValueField) -> Result<StepStats> {
        if field.step_index >= self.grid.n_t() {
            return Err(Error::BadDimensions(format!(
                "field already at final level {}",
                field.step_index
            )));
        }
        let mut next = vec![0.0; field.current.len()];
        let stats = self.advance(&field.current, &mut next, field.phi0);
        check_blowup(&next, field.step_index + 1)?;
        field.current = next;
        field.step_index += 1;
        Ok(stats)
    }

    /// Marches from `U^0 = phi` through all `n_t` levels.
    pub fn solve(&self, cost: &ExitCost, snapshots: &SnapshotPolicy) -> Result<Solution> {
        let grid = self.grid;
        let mut field = ValueField::initial(grid, cost)?;
        let keep: Vec<bool> = match snapshots {
            SnapshotPolicy::None => vec![false; grid.n_t() + 1],
            SnapshotPolicy::AllLevels => vec![true; grid.n_t() + 1],
            SnapshotPolicy::Times(ts) => {
                let mut keep = vec![false; grid.n_t() + 1];
                for &t in ts {
                    if !(t >= 0.0 && t <= grid.t_max() * (1.0 + 1e-12)) {
                        return Err(Error::BadDimensions(format!(
                            "snapshot time {t} outside [0, {}]",
                            grid.t_max()
                        )));
                    }
                    keep[grid.nearest_level(t)] = true;
                }
                keep
            }
        };
        if keep[0] {
            field.snapshots.insert(0, field.current.clone());
        }
        let initial_cfl = cfl_ratio(&grid, &self.drift, &field.current);
        let mut max_cfl = initial_cfl;
        let mut last_cfl = initial_cfl;
        let mut min_value = field.current.iter().copied().fold(f64::INFINITY, f64::min);
        let mut step_changes = Vec::with_capacity(grid.n_t());
        let mut warned = false;
        let mut next = vec![0.0; field.current.len()];
        for n in 0..grid.n_t() {
            let stats = self.advance(&field.current, &mut next, field.phi0);
            check_blowup(&next, n + 1)?;
            std::mem::swap(&mut field.current, &mut next);
            field.step_index = n + 1;
            if keep[n + 1] {
                field.snapshots.insert(n + 1, field.current.clone());
            }
            max_cfl = max_cfl.max(stats.cfl);
            last_cfl = stats.cfl;
            min_value = min_value.min(stats.min_value);
            step_changes.push(stats.sup_change);
            if stats.cfl > CFL_WARN && !warned {
                log::warn!(
                    "CFL ratio {:.3} exceeds {CFL_WARN} at level {n} (dx = {}, dt = {})",
                    stats.cfl,
                    grid.dx(),
                    grid.dt()
                );
                warned = true;
            }
        }
        let final_cfl = cfl_ratio(&grid, &self.drift, &field.current);
        Ok(Solution {
            field,
            cfl: CflReport {
                initial: initial_cfl,
                max: max_cfl.max(final_cfl),
                final_ratio: last_cfl,
            },
            step_changes,
            min_value,
        })
    }
}

fn check_blowup(values: &[f64], step: usize) -> Result<()> {
    if let Some(&v) = values
        .iter()
        .find(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD)
    {
        return Err(Error::NumericalBlowup { step, value: v.abs() });
    }
    Ok(())
}

/// Marches the equation and stores the requested snapshots.
pub fn solve(
    params: &ModelParams,
    grid: Grid1D,
    cost: &ExitCost,
    snapshots: &SnapshotPolicy,
) -> Result<Solution> {
    HjbSolver::new(params, grid).solve(cost, snapshots)
}

/// One step of the scheme for `field` under `params`.
pub fn step(field: &mut ValueField, params: &ModelParams) -> Result<StepStats> {
    HjbSolver::new(params, field.grid).step(field)
}

/// `dt/dx * max_i max_p |-b(x_i) + p|` over the one-sided slopes `p` at each node.
pub fn cfl_ratio(grid: &Grid1D, drift: &[f64], values: &[f64]) -> f64 {
    let inv_dx = 1.0 / grid.dx();
    let last = values.len() - 1;
    let mut speed: f64 = 0.0;
    for i in 1..=last {
        let d_left = (values[i] - values[i - 1]) * inv_dx;
        speed = speed.max((d_left - drift[i]).abs());
        if i < last {
            let d_right = (values[i + 1] - values[i]) * inv_dx;
            speed = speed.max((d_right - drift[i]).abs());
        }
    }
    speed * grid.dt() * inv_dx
}

pub fn cfl_number(params: &ModelParams, grid: &Grid1D, field: &ValueField) -> f64 {
    let drift: Vec<f64> = grid.nodes().iter().map(|&x| drift(params, x)).collect();
    cfl_ratio(grid, &drift, &field.current)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x,<column>` rows for nodal values.
pub fn write_nodal_csv(
    path: &std::path::Path,
    column: &str,
    nodes: &[f64],
    values: &[f64],
) -> Result<()> {
    use std::io::Write;
    if nodes.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: nodes.len(),
            right: values.len(),
        });
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,{column}")?;
    for (x, v) in nodes.iter().zip(values) {
        writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
    }
    out.flush()?;
    Ok(())
}

/// File name of the value snapshot at time `t`.
pub fn snapshot_file_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t}.csv")
}

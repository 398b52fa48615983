//! Feedback reconstruction and optimal trajectories.
//!
//! The optimal control is `xi = -Du`. On the grid the two one-sided slopes are
//! merged as `(D_L U)^+ + (D_R U)^-` and interpolated linearly in space.
//!
//! Since `u(x, t)` is the cost with remaining horizon `t`, the optimal feedback
//! at physical time `s` comes from the level with remaining horizon `T - s`:
//! step `n` reads level `n_t - n` ([`FeedbackPairing::RemainingHorizon`]).
//! [`FeedbackPairing::ElapsedTime`] instead pairs step `n` with level `n`, which
//! is what the recursion `y^{n+1} = y^n + dt (b(y^n) + xi^n(y^n))` reads when
//! `xi^n` is taken from `U^n` literally. It does not follow the optimal
//! feedback of the horizon-`T` problem, but reproduces the short-lived
//! reversed controls seen with non-monotone exit costs.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hjb::{fmt_f64, interpolate_nodes, ExitCost, Grid1D, ValueField};
use crate::model::{drift, ModelParams};

/// Nodal feedback `xi_i = -[(D_L U)_i^+ + (D_R U)_i^-]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackField {
    dx: f64,
    values: Vec<f64>,
}

impl FeedbackField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation of the nodal feedback; `x` is clamped to the grid.
    pub fn query(&self, x: f64) -> f64 {
        interpolate_nodes(&self.values, self.dx, x)
    }
}

/// Builds the feedback from one level of the value function.
///
/// Node 0 has no backward neighbour and node `n_x` no forward one, so only the
/// available branch contributes there.
pub fn feedback(level: &[f64], grid: &Grid1D) -> Result<FeedbackField> {
    let n = level.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if n != grid.n_x() + 1 {
        return Err(Error::LengthMismatch {
            left: n,
            right: grid.n_x() + 1,
        });
    }
    let inv_dx = 1.0 / grid.dx();
    let values = (0..n)
        .map(|i| {
            let back = if i > 0 {
                ((level[i] - level[i - 1]) * inv_dx).max(0.0)
            } else {
                0.0
            };
            let fwd = if i + 1 < n {
                ((level[i + 1] - level[i]) * inv_dx).min(0.0)
            } else {
                0.0
            };
            -(back + fwd)
        })
        .collect();
    Ok(FeedbackField {
        dx: grid.dx(),
        values,
    })
}

/// Time series of an optimal (or uncontrolled) trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub controls: Vec<f64>,
    /// `(y^2 + xi^2) / 2` at each time.
    pub running_cost: Vec<f64>,
    /// Number of steps whose state had to be clamped into `[0, x_max]`.
    pub clamp_events: usize,
}

impl TrajectoryRecord {
    pub(crate) fn uncontrolled(times: Vec<f64>, states: Vec<f64>) -> Self {
        let running_cost = states.iter().map(|y| 0.5 * y * y).collect();
        let controls = vec![0.0; states.len()];
        TrajectoryRecord {
            times,
            states,
            controls,
            running_cost,
            clamp_events: 0,
        }
    }

    pub fn final_state(&self) -> f64 {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn max_abs_control(&self) -> f64 {
        self.controls.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `max |xi|` over times in `[t0, t1]`.
    pub fn max_abs_control_within(&self, t0: f64, t1: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.controls)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .fold(0.0, |m, (_, c)| m.max(c.abs()))
    }

    /// Writes `t,y,xi,running_cost` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,y,xi,running_cost")?;
        for k in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.states[k]),
                fmt_f64(self.controls[k]),
                fmt_f64(self.running_cost[k])
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Forward Euler integration of `y' = b(y) + control(n, y)` on the grid's
/// time levels, clamping the state into `[0, x_max]`.
fn euler_with<F>(p: &ModelParams, grid: &Grid1D, x0: f64, mut control: F) -> Result<TrajectoryRecord>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    if !(0.0..=grid.x_max()).contains(&x0) {
        return Err(Error::OutOfRange {
            x: x0,
            lo: 0.0,
            hi: grid.x_max(),
        });
    }
    let n_t = grid.n_t();
    let dt = grid.dt();
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(n_t + 1),
        states: Vec::with_capacity(n_t + 1),
        controls: Vec::with_capacity(n_t + 1),
        running_cost: Vec::with_capacity(n_t + 1),
        clamp_events: 0,
    };
    let mut y = x0;
    for n in 0..=n_t {
        let xi = control(n, y)?;
        rec.times.push(grid.t(n));
        rec.states.push(y);
        rec.controls.push(xi);
        rec.running_cost.push(0.5 * (y * y + xi * xi));
        if n == n_t {
            break;
        }
        let next = y + dt * (drift(p, y) + xi);
        let clamped = next.clamp(0.0, grid.x_max());
        if clamped != next {
            rec.clamp_events += 1;
        }
        y = clamped;
    }
    Ok(rec)
}

/// How trajectory steps are matched with value levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackPairing {
    /// Step `n` uses level `n_t - n`.
    #[default]
    RemainingHorizon,
    /// Step `n` uses level `n`.
    ElapsedTime,
}

impl FeedbackPairing {
    fn level(self, n: usize, n_t: usize) -> usize {
        match self {
            FeedbackPairing::RemainingHorizon => n_t - n,
            FeedbackPairing::ElapsedTime => n,
        }
    }
}

/// Feedback fields for every level of a march, shared read-only between
/// trajectories.
#[derive(Debug, Clone)]
pub struct FeedbackHistory {
    grid: Grid1D,
    fields: Vec<FeedbackField>,
}

impl FeedbackHistory {
    /// Requires every level `0..=n_t` to be stored in `history`.
    pub fn new(history: &ValueField) -> Result<Self> {
        let grid = history.grid;
        let fields = (0..=grid.n_t())
            .map(|n| feedback(history.level(n)?, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeedbackHistory { grid, fields })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn level(&self, n: usize) -> &FeedbackField {
        &self.fields[n]
    }

    pub fn trajectory(&self, p: &ModelParams, x0: f64, pairing: FeedbackPairing) -> Result<TrajectoryRecord> {
        let n_t = self.grid.n_t();
        euler_with(p, &self.grid, x0, |n, y| Ok(self.fields[pairing.level(n, n_t)].query(y)))
    }
}

/// Synthesises the optimal trajectory from `x0` using every stored level of
/// `history` (see [`crate::hjb::SnapshotPolicy::AllLevels`]).
pub fn euler_trajectory(p: &ModelParams, history: &ValueField, x0: f64) -> Result<TrajectoryRecord> {
    FeedbackHistory::new(history)?.trajectory(p, x0, FeedbackPairing::RemainingHorizon)
}

/// Same integrator with the control forced to zero.
pub fn euler_uncontrolled(p: &ModelParams, grid: &Grid1D, x0: f64) -> Result<TrajectoryRecord> {
    euler_with(p, grid, x0, |_, _| Ok(0.0))
}

/// Trapezoidal quadrature of the running cost plus the exit cost at the end.
pub fn trajectory_cost(traj: &TrajectoryRecord, cost: &ExitCost) -> Result<f64> {
    if traj.times.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let running: f64 = traj
        .times
        .windows(2)
        .zip(traj.running_cost.windows(2))
        .map(|(t, c)| 0.5 * (t[1] - t[0]) * (c[0] + c[1]))
        .sum();
    Ok(running + cost.eval(traj.final_state())?)
}

/// Writes the trajectory CSV and a `<name>.meta` sidecar with the total cost.
pub fn write_trajectory(dir: &Path, name: &str, traj: &TrajectoryRecord, total_cost: f64) -> Result<()> {
    traj.write_csv(&dir.join(format!("{name}.csv")))?;
    let mut meta = std::fs::File::create(dir.join(format!("{name}.meta")))?;
    writeln!(meta, "total_cost={}", fmt_f64(total_cost))?;
    writeln!(meta, "final_state={}", fmt_f64(traj.final_state()))?;
    writeln!(meta, "max_abs_xi={}", fmt_f64(traj.max_abs_control()))?;
    writeln!(meta, "clamp_events={}", traj.clamp_events)?;
    Ok(())
}

//! Batch experiments and their on-disk artifacts.
//!
//! Each experiment kind has a `run_*` function returning plain data and a
//! writer for its CSV output. [`run`] dispatches on the kind and writes
//! everything into one output directory. Independent solves (refinement
//! levels, sweep cells, trajectories) run in parallel; results are collected
//! in input order, so outputs do not depend on scheduling.

mod config;
mod convergence;
mod profiles;
mod scenarios;
mod sweep;

use std::io::Write;
use std::path::Path;

pub use config::{ExperimentConfig, ExperimentKind, GridSpec};
pub use convergence::{fit_order, run_convergence_study, write_report_csv, ConvergenceReport, LevelResult};
pub use profiles::{locate_kink, run_profiles, write_profiles, KinkDiagnostic, Profile, ProfileRun, KINK_RATIO};
pub use scenarios::{run_trajectory_scenarios, write_scenarios, ScenarioResult, TrajectoryStudy};
pub use sweep::{horizon_doubling, run_alpha_sweep, write_sweep_csv, SweepCell};

use crate::error::{Error, Result};
use crate::hjb::{cfl_ratio, solve, ExitCost, Grid1D, SnapshotPolicy, Solution};
use crate::model::{drift, ModelParams};
use crate::stationary::{closed_form_alpha1, stationary_value, write_stationary_csv};

/// Target for the a-priori CFL estimate when choosing `n_t`.
pub const CFL_TARGET: f64 = 0.9;

/// How often `n_t` is doubled before giving up.
const MAX_DOUBLINGS: u32 = 24;

/// A-priori CFL ratio of `grid`, using the slopes of both the exit cost and
/// the stationary solution against the drift. The marched value moves
/// between the two, so their speeds bracket the ones met during the march.
pub fn estimated_cfl(p: &ModelParams, grid: &Grid1D, cost: &ExitCost) -> Result<f64> {
    let nodes = grid.nodes();
    let b: Vec<f64> = nodes.iter().map(|&x| drift(p, x)).collect();
    let phi = cost.sample(grid)?;
    let v_bar = stationary_value(p, phi[0], &nodes)?;
    Ok(cfl_ratio(grid, &b, &phi).max(cfl_ratio(grid, &b, &v_bar.values)))
}

/// Doubles `n_t` (starting from `n_t_min`) until [`estimated_cfl`] is at most
/// [`CFL_TARGET`].
pub fn stable_grid(
    p: &ModelParams,
    x_max: f64,
    t_max: f64,
    n_x: usize,
    n_t_min: usize,
    cost: &ExitCost,
) -> Result<Grid1D> {
    let mut grid = Grid1D::new(x_max, t_max, n_x, n_t_min.max(1))?;
    for _ in 0..MAX_DOUBLINGS {
        if estimated_cfl(p, &grid, cost)? <= CFL_TARGET {
            return Ok(grid);
        }
        grid = grid.with_time_steps(grid.n_t() * 2)?;
    }
    Err(Error::BadDimensions(format!(
        "no stable time step found for dx = {}",
        grid.dx()
    )))
}

/// Solves on `grid`, doubling `n_t` and retrying while the monitored CFL
/// ratio exceeds one or the march blows up.
pub fn solve_stable(
    p: &ModelParams,
    mut grid: Grid1D,
    cost: &ExitCost,
    snapshots: &SnapshotPolicy,
) -> Result<Solution> {
    for attempt in 0..4 {
        match solve(p, grid, cost, snapshots) {
            Ok(sol) if !sol.cfl.exceeded() => return Ok(sol),
            Ok(_) | Err(Error::NumericalBlowup { .. }) if attempt < 3 => {
                log::info!("retrying with n_t = {}", grid.n_t() * 2);
                grid = grid.with_time_steps(grid.n_t() * 2)?;
            }
            other => return other,
        }
    }
    unreachable!("the last attempt always returns")
}

/// Runs `kind` with `config`, writing artifacts into `out_dir`. Returns a
/// short human-readable summary.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    std::fs::create_dir_all(out_dir)?;
    let p = &config.params;
    match kind {
        ExperimentKind::Solve => {
            let run = run_profiles(p, config.grid.build()?, &config.cost, &config.snapshot_times)?;
            write_profiles(out_dir, &run, config.gnuplot)?;
            let mut summary = format!(
                "solved {} levels, CFL max {:.3}, min value {:.6}",
                run.grid.n_t(),
                run.cfl.max,
                run.min_value
            );
            for prof in &run.profiles {
                summary += &format!(
                    "\n  t = {}: kink {} at x = {:.3} (peak/median {:.1})",
                    prof.t,
                    if prof.kink.present { "present" } else { "absent" },
                    prof.kink.x,
                    prof.kink.ratio()
                );
            }
            Ok(summary)
        }
        ExperimentKind::Trajectory => {
            let study = run_trajectory_scenarios(
                p,
                config.grid.build()?,
                &config.cost,
                &config.initial_states,
                config.pairing,
            )?;
            write_scenarios(out_dir, &study, config.gnuplot)?;
            let mut summary = format!("{} scenarios, CFL max {:.3}", study.results.len(), study.cfl.max);
            for r in &study.results {
                summary += &format!(
                    "\n  x0 = {}: controlled y(T) = {:.4}, cost {:.5} (U = {:.5}); uncontrolled y(T) = {:.4}, cost {:.5}",
                    r.x0,
                    r.controlled.final_state(),
                    r.controlled_cost,
                    r.value_at_x0,
                    r.uncontrolled.final_state(),
                    r.uncontrolled_cost
                );
            }
            Ok(summary)
        }
        ExperimentKind::Converge => {
            let report = run_convergence_study(p, config.grid.x_max, config.grid.t_max, &config.cost, &config.levels)?;
            write_report_csv(&out_dir.join("report.csv"), &report)?;
            Ok(format!(
                "{} levels, observed order {:.3} (L-inf), {:.3} (L2 squared)",
                report.levels.len(),
                report.order_linf,
                report.order_l2
            ))
        }
        ExperimentKind::Sweep => {
            let cells = run_alpha_sweep(p, &config.grid, &config.cost, &config.sweep_alphas, &config.sweep_domains)?;
            write_sweep_csv(&out_dir.join("sweep.csv"), &cells)?;
            Ok(format!("{} sweep cells", cells.len()))
        }
        ExperimentKind::Stationary => {
            let grid = config.grid.build()?;
            let phi0 = config.cost.eval(0.0)?;
            let field = stationary_value(p, phi0, &grid.nodes())?;
            write_stationary_csv(&out_dir.join("v_bar.csv"), &field)?;
            let mut summary = format!(
                "v_bar(x_max) = {:.6}",
                field.values.last().expect("grid has nodes")
            );
            if p.alpha() == 1.0 && p.m_alpha() == 1.0 {
                let dev = field
                    .nodes
                    .iter()
                    .zip(&field.values)
                    .map(|(&x, &v)| closed_form_alpha1(p, phi0, x).map(|c| (c - v).abs()))
                    .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))?;
                summary += &format!(", max deviation from closed form {dev:.3e}");
            }
            Ok(summary)
        }
    }
}

/// Writes `key=value` lines.
pub(crate) fn write_meta(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for (k, v) in entries {
        writeln!(out, "{k}={v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_grid_meets_the_target() {
        let p = ModelParams::reference(1.0, 1.5).unwrap();
        let grid = stable_grid(&p, 4.0, 5.0, 200, 100, &ExitCost::Linear).unwrap();
        assert!(estimated_cfl(&p, &grid, &ExitCost::Linear).unwrap() <= CFL_TARGET);
        assert!(grid.n_t() >= 100 && grid.n_t().is_multiple_of(100));
        // the reference grid is already stable
        let base = stable_grid(&p, 4.0, 5.0, 200, 4000, &ExitCost::Linear).unwrap();
        assert_eq!(base.n_t(), 4000);
    }

    #[test]
    fn solve_stable_recovers_from_blowup() {
        let p = ModelParams::reference(1.0, 1.5).unwrap();
        let grid = Grid1D::new(4.0, 5.0, 200, 1000).unwrap();
        let first = solve(&p, grid, &ExitCost::Linear, &SnapshotPolicy::None);
        assert!(first.map_or(true, |s| s.cfl.exceeded()));
        let sol = solve_stable(&p, grid, &ExitCost::Linear, &SnapshotPolicy::None).unwrap();
        assert!(!sol.cfl.exceeded());
        assert!(sol.field.grid.n_t() > 1000);
    }
}

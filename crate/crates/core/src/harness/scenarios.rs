//! Controlled versus uncontrolled trajectories from several initial states.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::control::{euler_uncontrolled, trajectory_cost, write_trajectory, FeedbackHistory, FeedbackPairing, TrajectoryRecord};
use crate::error::Result;
use crate::hjb::{fmt_f64, interpolate_nodes, solve, CflReport, ExitCost, Grid1D, SnapshotPolicy};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub x0: f64,
    pub controlled: TrajectoryRecord,
    pub controlled_cost: f64,
    pub uncontrolled: TrajectoryRecord,
    pub uncontrolled_cost: f64,
    /// `U(x0, T)`, the predicted optimal cost.
    pub value_at_x0: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryStudy {
    pub grid: Grid1D,
    pub cost_name: &'static str,
    pub pairing: FeedbackPairing,
    pub cfl: CflReport,
    pub results: Vec<ScenarioResult>,
}

/// Solves once on `grid` keeping every level, then integrates one controlled
/// and one uncontrolled trajectory per initial state.
pub fn run_trajectory_scenarios(
    p: &ModelParams,
    grid: Grid1D,
    cost: &ExitCost,
    initial_states: &[f64],
    pairing: FeedbackPairing,
) -> Result<TrajectoryStudy> {
    let sol = solve(p, grid, cost, &SnapshotPolicy::AllLevels)?;
    let history = FeedbackHistory::new(&sol.field)?;
    let results = initial_states
        .par_iter()
        .map(|&x0| {
            let controlled = history.trajectory(p, x0, pairing)?;
            let uncontrolled = euler_uncontrolled(p, &grid, x0)?;
            Ok(ScenarioResult {
                x0,
                controlled_cost: trajectory_cost(&controlled, cost)?,
                uncontrolled_cost: trajectory_cost(&uncontrolled, cost)?,
                controlled,
                uncontrolled,
                value_at_x0: interpolate_nodes(&sol.field.current, grid.dx(), x0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryStudy {
        grid,
        cost_name: cost.name(),
        pairing,
        cfl: sol.cfl,
        results,
    })
}

/// Trajectory file stem, e.g. `traj_x0.5_controlled`.
fn stem(x0: f64, mode: &str) -> String {
    format!("traj_x{x0}_{mode}")
}

/// Writes each trajectory with its `.meta` sidecar and a `scenarios.csv`
/// summary of `x0,mode,final_state,total_cost,value_at_x0,max_abs_xi,clamp_events`.
pub fn write_scenarios(dir: &Path, study: &TrajectoryStudy, gnuplot: bool) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("scenarios.csv"))?);
    writeln!(out, "x0,mode,final_state,total_cost,value_at_x0,max_abs_xi,clamp_events")?;
    for r in &study.results {
        for (mode, traj, total) in [
            ("controlled", &r.controlled, r.controlled_cost),
            ("uncontrolled", &r.uncontrolled, r.uncontrolled_cost),
        ] {
            write_trajectory(dir, &stem(r.x0, mode), traj, total)?;
            writeln!(
                out,
                "{},{mode},{},{},{},{},{}",
                fmt_f64(r.x0),
                fmt_f64(traj.final_state()),
                fmt_f64(total),
                fmt_f64(r.value_at_x0),
                fmt_f64(traj.max_abs_control()),
                traj.clamp_events
            )?;
        }
    }
    out.flush()?;
    if gnuplot {
        let mut gp = std::fs::File::create(dir.join("trajectories.gp"))?;
        writeln!(gp, "set datafile separator ','")?;
        writeln!(gp, "set key autotitle columnhead")?;
        writeln!(gp, "set xlabel 't'")?;
        let plots: Vec<String> = study
            .results
            .iter()
            .flat_map(|r| {
                ["controlled", "uncontrolled"]
                    .map(|m| format!("'{}.csv' using 1:2 with lines title '{m} x0={}'", stem(r.x0, m), r.x0))
            })
            .collect();
        writeln!(gp, "plot {}", plots.join(", \\\n     "))?;
    }
    Ok(())
}

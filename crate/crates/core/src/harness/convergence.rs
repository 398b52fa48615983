//! Mesh refinement against the stationary solution.
//!
//! Each level uses `n_x = x_max / dx` and starts from `dt = 3.125 dx^2` (the
//! ratio of the reference grid), doubling `n_t` until the CFL estimate and
//! monitor are satisfied. The horizon should be long enough for the march to
//! reach its discrete steady state, which does not depend on `dt`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hjb::{fmt_f64, ExitCost, SnapshotPolicy};
use crate::model::ModelParams;
use crate::stationary::{compare_fields, stationary_value, ErrorNorms};

use super::{solve_stable, stable_grid};

/// `dt / dx^2` of the reference grid `(x_max, T, n_x, n_t) = (4, 5, 200, 4000)`.
pub const BASE_DT_OVER_DX2: f64 = 3.125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelResult {
    pub dx: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub norms: ErrorNorms,
    pub max_cfl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
    /// Fitted order of the maximum error.
    pub order_linf: f64,
    /// Fitted order of the squared L2 error [`ErrorNorms::l_2_sq`].
    pub order_l2: f64,
}

/// Least-squares slope of `log err` against `log dx`.
pub fn fit_order(dx: &[f64], err: &[f64]) -> Result<f64> {
    if dx.len() != err.len() {
        return Err(Error::LengthMismatch {
            left: dx.len(),
            right: err.len(),
        });
    }
    if dx.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: dx.len(),
        });
    }
    if dx.iter().chain(err).any(|&v| !(v > 0.0)) {
        return Err(Error::BadDimensions("orders need positive mesh widths and errors".into()));
    }
    let xs: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::BadDimensions("mesh widths must differ".into()));
    }
    Ok(sxy / sxx)
}

pub fn run_convergence_study(
    p: &ModelParams,
    x_max: f64,
    t_max: f64,
    cost: &ExitCost,
    levels: &[f64],
) -> Result<ConvergenceReport> {
    let results = levels
        .par_iter()
        .map(|&dx| run_level(p, x_max, t_max, cost, dx))
        .collect::<Result<Vec<_>>>()?;
    let dxs: Vec<f64> = results.iter().map(|r| r.dx).collect();
    let linf: Vec<f64> = results.iter().map(|r| r.norms.l_inf).collect();
    let l2: Vec<f64> = results.iter().map(|r| r.norms.l_2_sq).collect();
    Ok(ConvergenceReport {
        order_linf: fit_order(&dxs, &linf)?,
        order_l2: fit_order(&dxs, &l2)?,
        levels: results,
    })
}

fn run_level(p: &ModelParams, x_max: f64, t_max: f64, cost: &ExitCost, dx: f64) -> Result<LevelResult> {
    let n_x = (x_max / dx).round() as usize;
    let n_t_min = (t_max / (BASE_DT_OVER_DX2 * dx * dx)).ceil() as usize;
    let grid = stable_grid(p, x_max, t_max, n_x, n_t_min, cost)?;
    let sol = solve_stable(p, grid, cost, &SnapshotPolicy::None)?;
    let grid = sol.field.grid;
    let v_bar = stationary_value(p, sol.field.phi0, &grid.nodes())?;
    let norms = compare_fields(&sol.field.current, &v_bar.values, grid.dx())?;
    log::info!(
        "dx = {dx}: n_t = {}, L-inf {:.5}, L2^2 {:.6}, CFL max {:.3}",
        grid.n_t(),
        norms.l_inf,
        norms.l_2_sq,
        sol.cfl.max
    );
    Ok(LevelResult {
        dx: grid.dx(),
        n_x,
        n_t: grid.n_t(),
        norms,
        max_cfl: sol.cfl.max,
    })
}

/// Writes `dx,linf,l2` rows, where `l2` is the squared discrete norm.
pub fn write_report_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "dx,linf,l2")?;
    for r in &report.levels {
        writeln!(out, "{},{},{}", fmt_f64(r.dx), fmt_f64(r.norms.l_inf), fmt_f64(r.norms.l_2_sq))?;
    }
    out.flush()?;
    Ok(())
}

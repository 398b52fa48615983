//! Order sweep over growing domains.
//!
//! Every cell solves on `[0, D] x [0, D]`, scaling the base grid so that `n_x`
//! grows like `D` and `n_t` like `D^2`. When the drift grows faster than
//! linearly the CFL ratio still rises with `D`, so `n_t` is doubled further as
//! needed.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::control::feedback;
use crate::error::Result;
use crate::hjb::{fmt_f64, ExitCost, SnapshotPolicy};
use crate::model::ModelParams;

use super::{solve_stable, stable_grid, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    /// `x_max = T`
    pub domain: f64,
    pub n_x: usize,
    pub n_t: usize,
    /// `max_i |U_i|` at the final level.
    pub u_norm: f64,
    /// `max_i |(D_L U)_i^+ + (D_R U)_i^-|` at the final level.
    pub du_norm: f64,
    pub max_cfl: f64,
}

/// One solve per `(alpha, domain)` pair; other model parameters come from
/// `base_params`. Cells are returned alpha-major.
pub fn run_alpha_sweep(
    base_params: &ModelParams,
    base: &GridSpec,
    cost: &ExitCost,
    alphas: &[f64],
    domains: &[f64],
) -> Result<Vec<SweepCell>> {
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| domains.iter().map(move |&d| (a, d)))
        .collect();
    pairs
        .par_iter()
        .map(|&(alpha, domain)| {
            let p = ModelParams::new(
                alpha,
                base_params.beta(),
                base_params.gamma(),
                base_params.n_pop(),
                base_params.m_alpha(),
            )?;
            run_cell(&p, base, cost, domain)
        })
        .collect()
}

fn run_cell(p: &ModelParams, base: &GridSpec, cost: &ExitCost, domain: f64) -> Result<SweepCell> {
    let n_x = ((base.n_x as f64) * domain / base.x_max).round().max(2.0) as usize;
    let n_t_min = ((base.n_t as f64) * domain * domain / (base.x_max * base.t_max)).ceil() as usize;
    let grid = stable_grid(p, domain, domain, n_x, n_t_min, cost)?;
    let sol = solve_stable(p, grid, cost, &SnapshotPolicy::None)?;
    let grid = sol.field.grid;
    let u_norm = sol.field.current.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let du_norm = feedback(&sol.field.current, &grid)?
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    log::info!(
        "alpha = {}, D = {domain}: n_t = {}, |U| = {u_norm:.5}, |DU| = {du_norm:.5}",
        p.alpha(),
        grid.n_t()
    );
    Ok(SweepCell {
        alpha: p.alpha(),
        domain,
        n_x,
        n_t: grid.n_t(),
        u_norm,
        du_norm,
        max_cfl: sol.cfl.max,
    })
}

/// `(T, max_i |U_i(T)|)` for `T = t_start, 2 t_start, ...` (`count` horizons)
/// on a fixed spatial grid, keeping `dt` fixed.
pub fn horizon_doubling(
    p: &ModelParams,
    base: &GridSpec,
    cost: &ExitCost,
    t_start: f64,
    count: usize,
) -> Result<Vec<(f64, f64)>> {
    let dt = base.t_max / base.n_t as f64;
    let horizons: Vec<f64> = (0..count).map(|k| t_start * f64::from(1u32 << k)).collect();
    horizons
        .par_iter()
        .map(|&t| {
            let n_t = (t / dt).round().max(1.0) as usize;
            let grid = stable_grid(p, base.x_max, t, base.n_x, n_t, cost)?;
            let sol = solve_stable(p, grid, cost, &SnapshotPolicy::None)?;
            Ok((t, sol.field.current.iter().fold(0.0f64, |m, u| m.max(u.abs()))))
        })
        .collect()
}

/// Writes `alpha,domain,u_norm,du_norm` rows.
pub fn write_sweep_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "alpha,domain,u_norm,du_norm")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(c.alpha),
            fmt_f64(c.domain),
            fmt_f64(c.u_norm),
            fmt_f64(c.du_norm)
        )?;
    }
    out.flush()?;
    Ok(())
}

//! Time slices of the value function and feedback, with a kink locator.

use std::io::Write;
use std::path::Path;

use crate::control::feedback;
use crate::error::{Error, Result};
use crate::hjb::{fmt_f64, snapshot_file_name, write_nodal_csv, CflReport, ExitCost, Grid1D, SnapshotPolicy};
use crate::model::ModelParams;

use super::write_meta;

/// A kink is reported when the largest second difference exceeds the median
/// one by this factor.
pub const KINK_RATIO: f64 = 10.0;

/// Location and strength of the sharpest interior second difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkDiagnostic {
    pub index: usize,
    pub x: f64,
    pub peak: f64,
    pub median: f64,
    pub present: bool,
}

impl KinkDiagnostic {
    pub fn ratio(&self) -> f64 {
        if self.median > 0.0 {
            self.peak / self.median
        } else if self.peak > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Finds `argmax_i |U_{i+1} - 2 U_i + U_{i-1}|` over interior nodes.
pub fn locate_kink(values: &[f64], dx: f64) -> Result<KinkDiagnostic> {
    if values.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: values.len(),
        });
    }
    let second: Vec<f64> = values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .collect();
    let (k, &peak) = second
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one interior node");
    let mut sorted = second.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let mut diag = KinkDiagnostic {
        index: k + 1,
        x: (k + 1) as f64 * dx,
        peak,
        median,
        present: false,
    };
    diag.present = diag.ratio() > KINK_RATIO;
    Ok(diag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// Requested time.
    pub t: f64,
    pub level: usize,
    pub values: Vec<f64>,
    pub feedback: Vec<f64>,
    pub kink: KinkDiagnostic,
}

#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub grid: Grid1D,
    pub cost_name: &'static str,
    pub cfl: CflReport,
    pub min_value: f64,
    pub phi0: f64,
    pub profiles: Vec<Profile>,
}

/// Solves on `grid` and extracts value and feedback at the nearest level to
/// each of `times`.
pub fn run_profiles(p: &ModelParams, grid: Grid1D, cost: &ExitCost, times: &[f64]) -> Result<ProfileRun> {
    let sol = crate::hjb::solve(p, grid, cost, &SnapshotPolicy::Times(times.to_vec()))?;
    let profiles = times
        .iter()
        .map(|&t| {
            let level = grid.nearest_level(t);
            let values = sol.field.level(level)?.to_vec();
            Ok(Profile {
                t,
                level,
                feedback: feedback(&values, &grid)?.values().to_vec(),
                kink: locate_kink(&values, grid.dx())?,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileRun {
        grid,
        cost_name: cost.name(),
        cfl: sol.cfl,
        min_value: sol.min_value,
        phi0: sol.field.phi0,
        profiles,
    })
}

/// Writes `u_t<t>.csv`, `xi_t<t>.csv`, `kinks.csv` and a `solve.meta`
/// summary, plus `profiles.gp` when requested.
pub fn write_profiles(dir: &Path, run: &ProfileRun, gnuplot: bool) -> Result<()> {
    let nodes = run.grid.nodes();
    let mut kinks = std::io::BufWriter::new(std::fs::File::create(dir.join("kinks.csv"))?);
    writeln!(kinks, "t,x_kink,peak,median,present")?;
    for prof in &run.profiles {
        write_nodal_csv(&dir.join(snapshot_file_name("u", prof.t)), "u", &nodes, &prof.values)?;
        write_nodal_csv(&dir.join(snapshot_file_name("xi", prof.t)), "xi", &nodes, &prof.feedback)?;
        writeln!(
            kinks,
            "{},{},{},{},{}",
            fmt_f64(prof.t),
            fmt_f64(prof.kink.x),
            fmt_f64(prof.kink.peak),
            fmt_f64(prof.kink.median),
            prof.kink.present
        )?;
    }
    kinks.flush()?;
    write_meta(
        &dir.join("solve.meta"),
        &[
            ("cost", run.cost_name.to_string()),
            ("x_max", fmt_f64(run.grid.x_max())),
            ("t_max", fmt_f64(run.grid.t_max())),
            ("n_x", run.grid.n_x().to_string()),
            ("n_t", run.grid.n_t().to_string()),
            ("cfl_initial", fmt_f64(run.cfl.initial)),
            ("cfl_max", fmt_f64(run.cfl.max)),
            ("cfl_final", fmt_f64(run.cfl.final_ratio)),
            ("min_value", fmt_f64(run.min_value)),
            ("phi0", fmt_f64(run.phi0)),
        ],
    )?;
    if gnuplot {
        let mut gp = std::fs::File::create(dir.join("profiles.gp"))?;
        writeln!(gp, "set datafile separator ','")?;
        writeln!(gp, "set xlabel 'x'")?;
        for (prefix, label) in [("u", "U"), ("xi", "xi")] {
            let plots: Vec<String> = run
                .profiles
                .iter()
                .map(|prof| {
                    format!(
                        "'{}' using 1:2 with lines title '{label}, t={}'",
                        snapshot_file_name(prefix, prof.t),
                        prof.t
                    )
                })
                .collect();
            writeln!(gp, "plot {}", plots.join(", \\\n     "))?;
            writeln!(gp, "pause -1")?;
        }
    }
    Ok(())
}

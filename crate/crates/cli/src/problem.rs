use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use groundstate::oracle::{fd_richardson, Boundary};
use groundstate::squarewell::exact_ground;
use groundstate::trial::{harmonic_trial, quartic_trial, tabulated_trial, truncation_radius, QuarticTrial};
use groundstate::{build_grid, Potential, ProblemSpec, RadialGrid, Side, SquareWellModel, TrialFunction};
use serde::Deserialize;

use crate::config::{Problem, Resolved};
use crate::failure::Failure;

/// Offset added to `h` by `--inject-corruption`.
pub const CORRUPTION_OFFSET: f64 = 0.1;

/// Relative fall of `φ²` that fixes the default outer radius.
const TRUNCATION_RATIO: f64 = 1e-30;

/// A configured problem ready to iterate.
pub struct Setup {
    pub trial: TrialFunction,
    /// Absent for tabulated trials, which carry no potential.
    pub spec: Option<ProblemSpec>,
    pub model: Option<SquareWellModel>,
    pub rmax: f64,
}

pub fn quartic_rmax(g: f64, a: f64) -> Result<f64, Failure> {
    let q = QuarticTrial::new(g, a)?;
    Ok(truncation_radius(|x| q.log_phi(x, Side::Left), TRUNCATION_RATIO, 20.0 * a.max(1.0)))
}

fn harmonic_rmax(g: f64) -> f64 {
    truncation_radius(|r| -0.5 * g * r * r, TRUNCATION_RATIO, 20.0 / g.sqrt())
}

#[derive(Deserialize)]
struct TableRow {
    r: f64,
    log_phi: f64,
    h: f64,
}

fn read_table(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot open table {}", path.display()))?;
    let (mut r, mut lp, mut h) = (Vec::new(), Vec::new(), Vec::new());
    for row in reader.deserialize() {
        let row: TableRow = row.with_context(|| format!("bad row in {}", path.display()))?;
        r.push(row.r);
        lp.push(row.log_phi);
        h.push(row.h);
    }
    Ok((r, lp, h))
}

fn grid(cfg: &Resolved, rmax: f64, breakpoints: &[f64]) -> Result<Arc<RadialGrid>, Failure> {
    Ok(build_grid(cfg.dim, rmax, cfg.nodes, breakpoints)?)
}

pub fn setup(cfg: &Resolved) -> Result<Setup, Failure> {
    let mut s = match cfg.problem {
        Problem::Quartic { g, a } => {
            let rmax = cfg.rmax.map_or_else(|| quartic_rmax(g, a), Ok)?;
            let breaks: &[f64] = if a < rmax { &[a] } else { &[] };
            let trial = quartic_trial(g, a, &grid(cfg, rmax, breaks)?)?;
            let spec = ProblemSpec { dimension: 1, potential: Potential::Quartic { g, a } };
            Setup { trial, spec: Some(spec), model: None, rmax }
        }
        Problem::Harmonic { g } => {
            let rmax = cfg.rmax.unwrap_or_else(|| harmonic_rmax(g));
            let trial = harmonic_trial(g, &grid(cfg, rmax, &[])?)?;
            let spec = ProblemSpec { dimension: cfg.dim, potential: Potential::Harmonic { g } };
            Setup { trial, spec: Some(spec), model: None, rmax }
        }
        Problem::Squarewell { g2, l, big_l } => {
            let model = SquareWellModel::new(g2, l, Some(big_l))?;
            let rmax = model.width()?;
            if cfg.rmax.is_some_and(|r| (r - rmax).abs() > 1e-12 * rmax) {
                return Err(Failure::config(format!("the square-well grid ends at the wall, rmax = {rmax}")));
            }
            let trial = model.trial(&model.grid(cfg.nodes)?)?;
            Setup { trial, spec: Some(model.problem()?), model: Some(model), rmax }
        }
        Problem::CustomTabulated { ref table, e0 } => {
            let (r, lp, h) = read_table(table)?;
            let rmax = match (cfg.rmax, r.last()) {
                (Some(v), _) => v,
                (None, Some(&last)) => last,
                (None, None) => return Err(Failure::config("table is empty")),
            };
            let trial = tabulated_trial(&grid(cfg, rmax, &[])?, &r, &lp, &h, e0)?;
            Setup { trial, spec: None, model: None, rmax }
        }
    };
    if cfg.inject_corruption {
        s.trial = s.trial.with_h_offset(CORRUPTION_OFFSET);
    }
    Ok(s)
}

/// Potential of an analytic problem.
pub fn potential(problem: &Problem) -> Option<Potential> {
    match *problem {
        Problem::Quartic { g, a } => Some(Potential::Quartic { g, a }),
        Problem::Harmonic { g } => Some(Potential::Harmonic { g }),
        Problem::Squarewell { g2, l, big_l } => Some(Potential::SquareWell { g2, l, big_l }),
        Problem::CustomTabulated { .. } => None,
    }
}

/// Intervals on the coarsest level of the finite-difference oracle.
pub const ORACLE_INTERVALS: usize = 4000;

pub struct Reference {
    pub energy: f64,
    /// Zero for exact values; the Richardson error estimate otherwise.
    pub uncertainty: f64,
    pub kind: &'static str,
}

/// Reference ground energy: exact where known, otherwise the extrapolated
/// finite-difference oracle.
pub fn reference_energy(cfg: &Resolved, setup: &Setup) -> Result<Option<Reference>, Failure> {
    let exact = |energy| Some(Reference { energy, uncertainty: 0.0, kind: "exact" });
    Ok(match cfg.problem {
        Problem::Squarewell { .. } => {
            let model = setup.model.as_ref().expect("square-well setup carries its model");
            exact(exact_ground(model)?.energy)
        }
        Problem::Harmonic { g } => exact(0.5 * g * cfg.dim as f64),
        Problem::Quartic { .. } => {
            let pot = potential(&cfg.problem).expect("analytic potential");
            let est = fd_richardson(|x| pot.eval(x, Side::Left), 1, setup.rmax, ORACLE_INTERVALS, Boundary::Neumann)?;
            Some(Reference { energy: est.extrapolated, uncertainty: est.error_estimate, kind: "oracle" })
        }
        Problem::CustomTabulated { .. } => None,
    })
}

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use groundstate::hierarchy::TOLERANCE_FLOOR;
use groundstate::Case;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Quartic,
    Squarewell,
    Harmonic,
    CustomTabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CaseArg {
    A,
    B,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Settings shared by every subcommand. The same keys are accepted in the
/// JSON config file; flags override file values.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// JSON file with default values for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Coupling of the quartic or harmonic potential
    #[arg(long)]
    pub g: Option<f64>,
    /// Position of the quartic minimum
    #[arg(long)]
    pub a: Option<f64>,
    /// Distance from the well edge to the hard wall
    #[arg(long = "big-l")]
    pub big_l: Option<f64>,
    /// Half-width of the square well
    #[arg(long)]
    pub l: Option<f64>,
    /// Square-well depth parameter g²
    #[arg(long)]
    pub g2: Option<f64>,
    /// Spatial dimension N
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Report path; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the random perturbation probes
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV table with columns r, log_phi, h for the tabulated problem
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Trial energy of the tabulated problem
    #[arg(long)]
    pub e0: Option<f64>,
    /// Comma-separated sweep: g²l² for the square well, g for the quartic
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub sweep: Option<Vec<f64>>,
    /// Spectral parameter of the resolvent kernel
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Add a constant offset to h so that the trial checks must fail
    #[arg(long)]
    #[serde(default)]
    pub inject_corruption: bool,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    /// File values (if any) with the flags laid over them.
    pub fn load(flags: &Settings) -> Result<Settings, Failure> {
        let mut base = match &flags.config {
            Some(path) => read_config(path)?,
            None => Settings::default(),
        };
        overlay!(base, flags; problem, g, a, big_l, l, g2, dim, rmax, nodes, case, nmax, tol, format, out,
            seed, table, e0, sweep, lambda);
        base.inject_corruption |= flags.inject_corruption;
        base.config = flags.config.clone();
        Ok(base)
    }
}

fn read_config(path: &Path) -> Result<Settings, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
}

/// Check thresholds embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub charge: f64,
    pub ordering_floor: f64,
    pub closed_form: f64,
    pub polynomial: f64,
    pub trial_defect: f64,
    pub greens_defect: f64,
    pub mode_sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            charge: 1e-10,
            ordering_floor: TOLERANCE_FLOOR,
            closed_form: 1e-8,
            polynomial: 1e-7,
            trial_defect: 1e-3,
            greens_defect: 1e-6,
            mode_sum: 1e-6,
        }
    }
}

/// Problem parameters after defaults and validation.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "problem", rename_all = "kebab-case")]
pub enum Problem {
    Quartic { g: f64, a: f64 },
    Squarewell { g2: f64, l: f64, big_l: f64 },
    Harmonic { g: f64 },
    CustomTabulated { table: PathBuf, e0: f64 },
}

/// Everything a run depends on.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    #[serde(flatten)]
    pub problem: Problem,
    pub dim: usize,
    pub rmax: Option<f64>,
    pub nodes: usize,
    pub case: CaseArg,
    pub nmax: usize,
    pub tol: f64,
    pub format: Format,
    pub seed: u64,
    pub sweep: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub inject_corruption: bool,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::config(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if finite(name, v)? > 0.0 {
        Ok(v)
    } else {
        Err(Failure::config(format!("{name} must be positive, got {v}")))
    }
}

fn required(name: &str, v: Option<f64>) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::config(format!("missing parameter {name}")))
}

impl Resolved {
    pub fn with_rmax(&self, rmax: f64) -> Self {
        Self { rmax: Some(rmax), ..self.clone() }
    }

    pub fn from_settings(s: &Settings) -> Result<Self, Failure> {
        let kind = s.problem.ok_or_else(|| Failure::config("missing --problem"))?;
        let problem = match kind {
            ProblemKind::Quartic => Problem::Quartic {
                g: positive("g", required("g", s.g)?)?,
                a: positive("a", s.a.unwrap_or(1.0))?,
            },
            ProblemKind::Harmonic => Problem::Harmonic { g: positive("g", required("g", s.g)?)? },
            ProblemKind::Squarewell => {
                let g2 = finite("g2", required("g2", s.g2)?)?;
                if g2 < 0.0 {
                    return Err(Failure::config(format!("g2 must be non-negative, got {g2}")));
                }
                Problem::Squarewell {
                    g2,
                    l: positive("l", s.l.unwrap_or(1.0))?,
                    big_l: positive("big-l", s.big_l.unwrap_or(1.0))?,
                }
            }
            ProblemKind::CustomTabulated => Problem::CustomTabulated {
                table: s.table.clone().ok_or_else(|| Failure::config("missing parameter table"))?,
                e0: finite("e0", required("e0", s.e0)?)?,
            },
        };
        let dim = s.dim.unwrap_or(1);
        if dim == 0 {
            return Err(Failure::config("dim must be at least 1"));
        }
        if dim > 1 && matches!(problem, Problem::Quartic { .. } | Problem::Squarewell { .. }) {
            return Err(Failure::config("quartic and square-well problems are one-dimensional"));
        }
        if let Some(r) = s.rmax {
            positive("rmax", r)?;
        }
        let tol = finite("tol", s.tol.unwrap_or(1e-9))?;
        if tol < 0.0 {
            return Err(Failure::config("tol must be non-negative"));
        }
        let nmax = s.nmax.unwrap_or(50);
        if nmax == 0 {
            return Err(Failure::config("nmax must be at least 1"));
        }
        if let Some(sweep) = &s.sweep {
            for &v in sweep {
                finite("sweep value", v)?;
            }
        }
        if let Some(lam) = s.lambda {
            finite("lambda", lam)?;
        }
        for (name, v) in [("g", s.g), ("a", s.a), ("big-l", s.big_l), ("l", s.l), ("g2", s.g2), ("e0", s.e0)] {
            if let Some(v) = v {
                finite(name, v)?;
            }
        }
        Ok(Self {
            problem,
            dim,
            rmax: s.rmax,
            nodes: s.nodes.unwrap_or(4001),
            case: s.case.unwrap_or(CaseArg::A),
            nmax,
            tol,
            format: s.format.unwrap_or(Format::Json),
            seed: s.seed.unwrap_or(0),
            sweep: s.sweep.clone(),
            lambda: s.lambda,
            inject_corruption: s.inject_corruption,
            tolerances: Tolerances::default(),
            out: s.out.clone(),
        })
    }
}

//! The ground-state iteration.
//!
//! With `χ = r^{(N-1)/2} φ` and `[F] = ∫ χ² F dr`, step `n` computes
//!
//! * `ℰ_n = [h f_{n-1}] / [f_{n-1}]`,
//! * the charge `ρ_n = (h − ℰ_n) χ² f_{n-1}`, whose total vanishes,
//! * the displacement `𝒟_n(r) = ∫_0^r ρ_n = −∫_r^∞ ρ_n`,
//! * the iterate from `f_n' = −2 𝒟_n / χ²`, normalised by `f_n(r_max) = 1`
//!   (Case A) or `f_n(0) = 1` (Case B).
//!
//! Then `E_n = E0 − ℰ_n`. Weights `χ²` are scaled to unit peak; `𝒟/χ²` is
//! accumulated directly in scaled form so it stays finite where `χ²`
//! underflows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    cumulative_from_tail, cumulative_from_zero, derivative, integrate, scaled_cumulative_from_tail,
    scaled_cumulative_from_zero, GridFunction, Side,
};
use crate::hierarchy::{crossing_point, Crossing};
use crate::trial::TrialFunction;

/// Normalisation of the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `f_n(r_max) = 1`.
    #[serde(rename = "a")]
    A,
    /// `f_n(0) = 1`.
    #[serde(rename = "b")]
    B,
}

/// `ln χ` with its peak value and the unit-peak weight `χ²/χ²_max`.
#[derive(Debug, Clone)]
pub struct Chi {
    pub log: GridFunction,
    pub peak: f64,
    /// `2 (ln χ − peak)`.
    pub log_weight: GridFunction,
    pub weight: GridFunction,
}

pub fn chi(trial: &TrialFunction) -> Chi {
    let grid = trial.grid();
    let half = 0.5 * (grid.dimension() as f64 - 1.0);
    let log = trial
        .phi
        .zip_map(&GridFunction::from_fn(grid, |r| r), |lp, r| {
            if half == 0.0 {
                lp
            } else {
                lp + half * r.ln()
            }
        })
        .into_log_scale();
    let peak = log.max();
    let log_weight = log.map(|l| 2.0 * (l - peak));
    let weight = log_weight.map(f64::exp);
    Chi { log, peak, log_weight, weight }
}

/// `[F] = ∫ χ² F dr` in absolute units.
pub fn weighted_moment(f: &GridFunction, chi: &Chi) -> f64 {
    integrate(&f.zip_map(&chi.weight, |a, w| a * w)) * (2.0 * chi.peak).exp()
}

/// `ℰ = [h f] / [f]`.
pub fn energy_step(f_prev: &GridFunction, h: &GridFunction, chi: &Chi) -> Result<f64> {
    let wf = f_prev.zip_map(&chi.weight, |a, w| a * w);
    let den = integrate(&wf);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::ZeroNorm { n: 0 });
    }
    let num = integrate(&wf.zip_map(h, |a, b| a * b));
    Ok(num / den)
}

/// `ρ = (h − ℰ) χ² f` with unit-peak `χ²`.
pub fn charge_density(f_prev: &GridFunction, h: &GridFunction, cal_e: f64, chi: &Chi) -> GridFunction {
    let hf = h.zip_map(f_prev, |hv, fv| (hv - cal_e) * fv);
    hf.zip_map(&chi.weight, |a, w| a * w)
}

/// `|∫ρ| / ∫|ρ|`, zero when `ρ ≡ 0`.
pub fn charge_residual(rho: &GridFunction) -> f64 {
    let total = integrate(rho).abs();
    let abs = integrate(&rho.map(f64::abs));
    if abs == 0.0 {
        0.0
    } else {
        total / abs
    }
}

#[derive(Debug, Clone)]
pub struct Displacement {
    /// `𝒟` in absolute units; underflows to zero deep in the tail.
    pub d: GridFunction,
    /// `𝒟 / χ²`, finite everywhere.
    pub slope: GridFunction,
    pub crossing: Option<Crossing>,
    /// `|𝒟_zero − 𝒟_tail| / max|𝒟|` at the crossing node.
    pub mismatch: f64,
}

/// Both routes to `𝒟`: from the origin up to the crossing of `h` with `ℰ`,
/// from the tail above it.
pub fn displacement(f_prev: &GridFunction, h: &GridFunction, cal_e: f64, chi: &Chi) -> Displacement {
    let grid = f_prev.grid();
    let n = grid.len();
    let rho = charge_density(f_prev, h, cal_e, chi);
    let q = h.zip_map(f_prev, |hv, fv| (hv - cal_e) * fv);
    let scale = (2.0 * chi.peak).exp();
    let flat = q.max_abs() <= 1e-14 * (cal_e.abs() + h.max_abs());
    let crossing = if flat { None } else { crossing_point(h, cal_e) };
    let Some(cross) = crossing else {
        let zero = GridFunction::constant(grid, 0.0);
        return Displacement { d: zero.clone(), slope: zero, crossing: None, mismatch: 0.0 };
    };
    let split = cross.node;

    let dz = cumulative_from_zero(&rho);
    let dt = cumulative_from_tail(&rho).map(|v| -v);
    let sz = scaled_cumulative_from_zero(&q, &chi.log_weight);
    let st = scaled_cumulative_from_tail(&q, &chi.log_weight).map(|v| -v);

    let pick = |zero: &GridFunction, tail: &GridFunction, mult: f64| {
        let vals: Vec<f64> = (0..n)
            .map(|i| mult * if i <= split { zero.value(i) } else { tail.value(i) })
            .collect();
        GridFunction::from_values(grid, vals).expect("grid length")
    };
    let d_norm = pick(&dz, &dt, 1.0);
    let max_d = d_norm.max_abs();
    let mismatch = if max_d > 0.0 {
        (dz.value(split) - dt.value(split)).abs() / max_d
    } else {
        0.0
    };
    let slope = pick(&sz, &st, 1.0);
    let d = d_norm.map(|v| v * scale);
    Displacement { d, slope, crossing, mismatch }
}

/// Integrate `f' = −2 𝒟/χ²` with the normalisation of `case`.
pub fn f_step(disp: &Displacement, case: Case) -> GridFunction {
    match case {
        Case::A => cumulative_from_tail(&disp.slope).map(|v| 1.0 + 2.0 * v),
        Case::B => cumulative_from_zero(&disp.slope).map(|v| 1.0 - 2.0 * v),
    }
}

/// Data kept for iteration `n`.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub n: usize,
    pub cal_e: f64,
    pub f: GridFunction,
    pub displacement: Displacement,
    pub charge_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    #[serde(rename = "calE")]
    pub cal_e: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub charge_residual: f64,
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub n: usize,
    pub kind: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: Case,
    pub n_max: usize,
    /// Stop once `|ℰ_n − ℰ_{n-1}| < tol (1 + |ℰ_n|)`; with zero, only an
    /// exactly repeated iterate stops early.
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { case: Case::A, n_max: 50, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub case: Case,
    pub e0: f64,
    pub h0: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub final_e: f64,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub states: Vec<IterationState>,
}

impl RunReport {
    /// `f_0 = 1` followed by every iterate.
    pub fn iterates(&self) -> Vec<GridFunction> {
        let mut out = Vec::with_capacity(self.states.len() + 1);
        if let Some(s) = self.states.first() {
            out.push(GridFunction::constant(s.f.grid(), 1.0));
        }
        out.extend(self.states.iter().map(|s| s.f.clone()));
        out
    }

    pub fn slopes(&self) -> Vec<GridFunction> {
        self.states.iter().map(|s| s.displacement.slope.clone()).collect()
    }
}

/// `h` must be non-negative and non-increasing.
pub fn check_h_admissible(h: &GridFunction) -> Result<()> {
    let grid = h.grid();
    let x = grid.nodes();
    let tol = 1e-12 * (1.0 + h.max_abs());
    for i in 0..x.len() {
        for side in [Side::Left, Side::Right] {
            let v = h.side_value(i, side);
            if v < -tol {
                return Err(Error::NegativeH { r: x[i], value: v });
            }
        }
        let (l, r) = (h.side_value(i, Side::Left), h.side_value(i, Side::Right));
        if r > l + tol {
            return Err(Error::NonMonotoneH { r0: x[i], h0: l, r1: x[i], h1: r });
        }
        if i + 1 < x.len() {
            let next = h.side_value(i + 1, Side::Left);
            if next > r + tol {
                return Err(Error::NonMonotoneH { r0: x[i], h0: r, r1: x[i + 1], h1: next });
            }
        }
    }
    Ok(())
}

/// Run the iteration from `f_0 = 1`.
pub fn iterate_ground(trial: &TrialFunction, config: &RunConfig) -> Result<RunReport> {
    if config.n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    if !(config.tol >= 0.0) {
        return Err(Error::Config("tol must be non-negative".into()));
    }
    check_h_admissible(&trial.h)?;
    let grid = trial.grid();
    let chi = chi(trial);
    let mut f_prev = GridFunction::constant(grid, 1.0);
    let mut records = Vec::new();
    let mut states: Vec<IterationState> = Vec::new();
    let mut violations = Vec::new();
    let mut converged = false;

    for n in 1..=config.n_max {
        let cal_e = energy_step(&f_prev, &trial.h, &chi).map_err(|_| Error::ZeroNorm { n })?;
        let rho = charge_density(&f_prev, &trial.h, cal_e, &chi);
        let residual = charge_residual(&rho);
        let disp = displacement(&f_prev, &trial.h, cal_e, &chi);
        let f = f_step(&disp, config.case);

        if config.case == Case::B {
            let (k, &min_f) = f
                .values()
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty grid");
            if min_f <= 0.0 {
                return Err(Error::CaseBPositivity { n, min_f, at: grid.nodes()[k] });
            }
        }

        let mut flag = |kind: &str, magnitude: f64| {
            violations.push(Violation { n, kind: kind.to_string(), magnitude })
        };
        if residual > 1e-10 {
            flag("charge", residual);
        }
        let bound_ok = if trial.h0 == 0.0 {
            cal_e.abs() < 1e-10
        } else {
            cal_e > 0.0 && cal_e < trial.h0
        };
        if !bound_ok {
            flag("energy-bound", cal_e);
        }
        let d_min = disp.d.min();
        if d_min < -1e-12 * disp.d.max_abs() {
            flag("displacement-sign", d_min);
        }
        if disp.mismatch > 1e-9 {
            flag("crossing-mismatch", disp.mismatch);
        }
        if let Some(prev) = records.last().map(|r: &IterationRecord| r.cal_e) {
            let ordered = match config.case {
                Case::A => cal_e > prev,
                Case::B => {
                    let before = if n >= 3 { Some(records[n - 3].cal_e) } else { None };
                    let parity_ok = (n % 2 == 0) == (cal_e > prev);
                    let trend_ok = match before {
                        Some(b) if n % 2 == 1 => cal_e > b,
                        Some(b) => cal_e < b,
                        None => true,
                    };
                    parity_ok && trend_ok
                }
            };
            if !ordered && trial.h0 != 0.0 {
                flag("energy-order", cal_e - prev);
            }
        }

        let change = f.max_abs_diff(&f_prev);
        records.push(IterationRecord {
            n,
            cal_e,
            e: trial.e0 - cal_e,
            charge_residual: residual,
            f_min: f.min(),
            f_max: f.max(),
        });
        states.push(IterationState {
            n,
            cal_e,
            f: f.clone(),
            displacement: disp,
            charge_residual: residual,
        });

        let energy_settled = n >= 2 && {
            let prev = records[n - 2].cal_e;
            (cal_e - prev).abs() < config.tol * (1.0 + cal_e.abs())
        };
        if energy_settled || change <= config.tol {
            converged = true;
            break;
        }
        f_prev = f;
    }

    let final_e = records.last().map(|r| r.e).unwrap_or(trial.e0);
    Ok(RunReport {
        case: config.case,
        e0: trial.e0,
        h0: trial.h0,
        records,
        converged,
        final_e,
        violations,
        states,
    })
}

/// `I(f) = ∫ {¼ χ² (f')² − ρ f} dr` with the unit-peak `χ²` used for `ρ`.
pub fn action_functional(f: &GridFunction, chi: &Chi, rho: &GridFunction) -> f64 {
    let df = derivative(f);
    let kinetic = df.zip_map(&chi.weight, |d, w| 0.25 * w * d * d);
    let source = rho.zip_map(f, |p, v| p * v);
    integrate(&kinetic.zip_map(&source, |k, s| k - s))
}

/// `max |f − F[f]|`, where `F` rebuilds `f` from the charge of `f` at the
/// fixed `ℰ` using the single integration route of `case`.
pub fn fixed_point_residual(
    f: &GridFunction,
    cal_e: f64,
    h: &GridFunction,
    chi: &Chi,
    case: Case,
) -> f64 {
    let q = h.zip_map(f, |hv, fv| (hv - cal_e) * fv);
    let rebuilt = match case {
        Case::A => {
            let slope = scaled_cumulative_from_tail(&q, &chi.log_weight).map(|v| -v);
            cumulative_from_tail(&slope).map(|v| 1.0 + 2.0 * v)
        }
        Case::B => {
            let slope = scaled_cumulative_from_zero(&q, &chi.log_weight);
            cumulative_from_zero(&slope).map(|v| 1.0 - 2.0 * v)
        }
    };
    f.max_abs_diff(&rebuilt)
}

/// Smallest increase `I(f + ε b) − I(f)` over `count` random Gaussian
/// bumps `b`; non-negative when `f` minimises `I`.
pub fn convexity_probe(
    f: &GridFunction,
    chi: &Chi,
    rho: &GridFunction,
    count: usize,
    eps: f64,
    seed: u64,
) -> f64 {
    let grid = f.grid();
    let base = action_functional(f, chi, rho);
    // bumps are centred where the weight is not negligible
    let reach = grid
        .nodes()
        .iter()
        .zip(chi.weight.values())
        .filter(|(_, &w)| w > 1e-8)
        .map(|(&r, _)| r)
        .fold(0.0, f64::max)
        .max(grid.nodes()[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let centre = rng.gen_range(0.0..reach);
        let width = rng.gen_range(0.02..0.3) * reach;
        let amp = rng.gen_range(-1.0..1.0);
        let bumped = f.zip_map(&GridFunction::from_fn(grid, |r| r), |v, r| {
            v + eps * amp * (-((r - centre) / width).powi(2)).exp()
        });
        worst = worst.min(action_functional(&bumped, chi, rho) - base);
    }
    worst
}

/// Power `p` in `f(r) − f(∞) ∝ r^{-p}`, from a log-log fit of `𝒟/χ²`
/// (which falls like `r^{-p-1}`) over `[r_lo, r_hi]`.
pub fn tail_exponent(slope: &GridFunction, r_lo: f64, r_hi: f64) -> f64 {
    let x = slope.grid().nodes();
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(slope.values())
        .filter(|(&r, &s)| r >= r_lo && r <= r_hi && s > 0.0)
        .map(|(&r, &s)| (r.ln(), s.ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    -(num / den) - 1.0
}

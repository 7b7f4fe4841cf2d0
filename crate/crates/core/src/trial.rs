//! Trial functions and their companion potentials `h`.
//!
//! A trial `φ` with energy `E0` defines `h` through
//! `(T + V + h) φ = E0 φ`. The quartic double-well trial is built from the
//! semiclassical pieces `S0` and `S1` and carries a jump in `h` at the
//! minimum `x = a`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_from_zero, GridFunction, RadialGrid, Side};

/// Potentials understood by the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// `½ g² (x² − a²)²`.
    Quartic { g: f64, a: f64 },
    /// `½ g² r²`.
    Harmonic { g: f64 },
    /// `−g²/2` for `x < l`, zero up to the wall at `L + l`.
    SquareWell { g2: f64, l: f64, big_l: f64 },
    /// Linear interpolation through tabulated samples.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

impl Potential {
    pub fn eval(&self, r: f64, side: Side) -> f64 {
        match self {
            Potential::Quartic { g, a } => 0.5 * g * g * (r * r - a * a).powi(2),
            Potential::Harmonic { g } => 0.5 * g * g * r * r,
            Potential::SquareWell { g2, l, .. } => {
                if r < *l || (r == *l && side == Side::Left) {
                    -0.5 * g2
                } else {
                    0.0
                }
            }
            Potential::Tabulated { r: xs, v } => linear_lookup(xs, v, r),
        }
    }
}

/// Problem definition: dimension plus potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub potential: Potential,
}

/// Trial wavefunction sampled on a grid.
#[derive(Debug, Clone)]
pub struct TrialFunction {
    /// `ln φ`; `-inf` only where `φ` vanishes at a domain end.
    pub phi: GridFunction,
    /// Companion potential, with one-sided limits at its jumps.
    pub h: GridFunction,
    pub e0: f64,
    pub h_breakpoints: Vec<f64>,
    /// `h(0)`, the upper limit for every iterate energy shift.
    pub h0: f64,
}

impl TrialFunction {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.phi.grid()
    }

    /// Copy with `h` shifted by a constant; the result no longer solves the
    /// defining equation.
    pub fn with_h_offset(&self, offset: f64) -> Self {
        let mut t = self.clone();
        t.h = self.h.map(|v| v + offset);
        t.h0 += offset;
        t
    }
}

/// `S0(x) = (x−1)²(x+2)/3`.
pub fn quartic_s0(x: f64) -> f64 {
    (x - 1.0).powi(2) * (x + 2.0) / 3.0
}

/// `S1(x) = ln((x+1)/2)`.
pub fn quartic_s1(x: f64) -> f64 {
    ((x + 1.0) / 2.0).ln()
}

/// `S2(x) = 3/16 − (x+2)/(4(x+1)²)`.
pub fn quartic_s2(x: f64) -> f64 {
    3.0 / 16.0 - (x + 2.0) / (4.0 * (x + 1.0).powi(2))
}

/// Closed-form quartic trial in the scaled variable `y = x/a` with coupling
/// `G = g a³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarticTrial {
    pub g: f64,
    pub a: f64,
}

impl QuarticTrial {
    pub fn new(g: f64, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Config(format!("a must be positive, got {a}")));
        }
        let t = Self { g, a };
        if !(t.coupling() > 1.0) {
            return Err(Error::Config(format!(
                "the quartic trial needs g a³ > 1, got {}",
                t.coupling()
            )));
        }
        Ok(t)
    }

    /// `G = g a³`.
    pub fn coupling(&self) -> f64 {
        self.g * self.a.powi(3)
    }

    fn c(&self) -> f64 {
        let g = self.coupling();
        (g - 1.0) / (g + 1.0)
    }

    fn inner(&self, y: f64, side: Side) -> bool {
        y < 1.0 || (y == 1.0 && side == Side::Left)
    }

    /// `w = 2 G S0 − 4G/3 ≤ 0` on `[0, 1]`.
    fn w(&self, y: f64) -> f64 {
        let g = self.coupling();
        2.0 * g * quartic_s0(y) - 4.0 * g / 3.0
    }

    pub fn log_phi(&self, x: f64, side: Side) -> f64 {
        let y = x / self.a;
        let g = self.coupling();
        let base = (2.0 / (1.0 + y)).ln() - g * quartic_s0(y);
        if self.inner(y, side) {
            base + (self.c() * self.w(y).exp()).ln_1p()
        } else {
            base + (self.c() * (-4.0 * g / 3.0).exp()).ln_1p()
        }
    }

    /// `d ln φ / dx`.
    pub fn dlog_phi(&self, x: f64, side: Side) -> f64 {
        let y = x / self.a;
        let g = self.coupling();
        let s0p = y * y - 1.0;
        let d = if self.inner(y, side) {
            let e = self.c() * self.w(y).exp();
            -1.0 / (1.0 + y) + g * s0p * (e - 1.0) / (1.0 + e)
        } else {
            -1.0 / (1.0 + y) - g * s0p
        };
        d / self.a
    }

    pub fn h(&self, x: f64, side: Side) -> f64 {
        let y = x / self.a;
        let g = self.coupling();
        let u = 1.0 / (1.0 + y).powi(2);
        let hat = if self.inner(y, side) {
            let e = self.w(y).exp();
            2.0 * g * (g - 1.0) * e / ((g + 1.0) + (g - 1.0) * e)
        } else {
            0.0
        };
        (u + hat) / (self.a * self.a)
    }

    pub fn e0(&self) -> f64 {
        self.coupling() / (self.a * self.a)
    }

    pub fn potential(&self) -> Potential {
        Potential::Quartic { g: self.g, a: self.a }
    }
}

/// Quartic trial on `grid`, which must carry a breakpoint at `x = a`.
pub fn quartic_trial(g: f64, a: f64, grid: &Arc<RadialGrid>) -> Result<TrialFunction> {
    let q = QuarticTrial::new(g, a)?;
    if grid.dimension() != 1 {
        return Err(Error::Config("the quartic trial is one-dimensional".into()));
    }
    if !grid.breakpoints().iter().any(|&i| grid.nodes()[i] == a) {
        return Err(Error::Grid(format!("grid needs a breakpoint at x = {a}")));
    }
    Ok(TrialFunction {
        phi: GridFunction::from_sided_fn(grid, |x, s| q.log_phi(x, s)).into_log_scale(),
        h: GridFunction::from_sided_fn(grid, |x, s| q.h(x, s)),
        e0: q.e0(),
        h_breakpoints: vec![a],
        h0: q.h(0.0, Side::Right),
    })
}

/// Exact Gaussian ground state of `½ g² r²` in `N` dimensions; `h ≡ 0`.
pub fn harmonic_trial(g: f64, grid: &Arc<RadialGrid>) -> Result<TrialFunction> {
    if !(g > 0.0) {
        return Err(Error::Config(format!("g must be positive, got {g}")));
    }
    Ok(TrialFunction {
        phi: GridFunction::from_fn(grid, |r| -0.5 * g * r * r).into_log_scale(),
        h: GridFunction::constant(grid, 0.0),
        e0: 0.5 * g * grid.dimension() as f64,
        h_breakpoints: vec![],
        h0: 0.0,
    })
}

fn linear_lookup(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&t| t <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Trial given as a table of `r`, `ln φ` and `h`, interpolated linearly.
pub fn tabulated_trial(
    grid: &Arc<RadialGrid>,
    r: &[f64],
    log_phi: &[f64],
    h: &[f64],
    e0: f64,
) -> Result<TrialFunction> {
    if r.len() < 2 || r.len() != log_phi.len() || r.len() != h.len() {
        return Err(Error::Config("table columns must have equal length ≥ 2".into()));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("table radii must increase strictly".into()));
    }
    let hv = GridFunction::from_fn(grid, |x| linear_lookup(r, h, x));
    Ok(TrialFunction {
        phi: GridFunction::from_fn(grid, |x| linear_lookup(r, log_phi, x)).into_log_scale(),
        h0: hv.value(0),
        h: hv,
        e0,
        h_breakpoints: vec![],
    })
}

/// Smallest radius beyond the peak of `φ` where `φ²` has fallen by `ratio`.
pub fn truncation_radius(log_phi: impl Fn(f64) -> f64, ratio: f64, upper: f64) -> f64 {
    let steps = 20_000;
    let dr = upper / steps as f64;
    let mut peak = f64::NEG_INFINITY;
    for k in 0..=steps {
        let r = k as f64 * dr;
        let l = log_phi(r);
        peak = peak.max(l);
        if 2.0 * (l - peak) < ratio.ln() {
            return r;
        }
    }
    upper
}

/// Semiclassical expansion of a one-dimensional well about its minimum.
#[derive(Debug, Clone, Serialize)]
pub struct HjExpansion {
    pub nodes: Vec<f64>,
    pub s0: Vec<f64>,
    /// Present for order ≥ 1.
    pub s1: Option<Vec<f64>>,
    pub e0: f64,
    pub e1: Option<f64>,
}

/// Leading Hamilton–Jacobi terms for `v` on `[0, x_max]`, `v(0) = 0` the
/// minimum: `S0 = ∫ √(2v)`, `E0 = ½ S0''(0)`,
/// `S1 = ∫ (½ S0'' − E0)/S0'`, `E1 = ½ (S1'' − S1'²)(0)`.
///
/// The origin data come from a least-squares fit
/// `v ≈ Σ_{j=2..7} c_j x^j` near `x = 0`.
pub fn hj_expansion_1d(
    v: impl Fn(f64) -> f64,
    order: usize,
    x_max: f64,
    node_count: usize,
) -> Result<HjExpansion> {
    if order > 1 {
        return Err(Error::Config("orders above 1 are not supported".into()));
    }
    if v(0.0).abs() > 1e-12 {
        return Err(Error::Config("v must vanish at the origin".into()));
    }
    let grid = crate::grid::build_grid(1, x_max, node_count, &[])?;
    let nodes = grid.nodes().to_vec();

    let c = taylor_fit(&v, (x_max / 40.0).min(0.05))?;
    if !(c[0] > 0.0) {
        return Err(Error::Config("v must have a positive curvature at the origin".into()));
    }
    let omega = (2.0 * c[0]).sqrt();
    let e0 = 0.5 * omega;
    // S0' = ω x (1 + α x + β x² + …)
    let alpha = c[1] / (2.0 * c[0]);
    let beta = c[2] / (2.0 * c[0]) - c[1] * c[1] / (8.0 * c[0] * c[0]);

    let s0p = GridFunction::from_fn(&grid, |x| (2.0 * v(x).max(0.0)).sqrt());
    let s0 = cumulative_from_zero(&s0p).values().to_vec();

    let (s1, e1) = if order == 1 {
        let s1p = GridFunction::from_fn(&grid, |x| {
            if x == 0.0 {
                return alpha;
            }
            let d = 1e-5 * (1.0 + x);
            let sp = (2.0 * v(x)).sqrt();
            let spp = ((2.0 * v(x + d)).sqrt() - (2.0 * v((x - d).max(0.0))).sqrt())
                / (x + d - (x - d).max(0.0));
            (0.5 * spp - e0) / sp
        });
        let s1 = cumulative_from_zero(&s1p).values().to_vec();
        // S1'(0) = α, S1''(0) = 3β/2 − α²
        let e1 = 0.5 * ((1.5 * beta - alpha * alpha) - alpha * alpha);
        (Some(s1), Some(e1))
    } else {
        (None, None)
    };
    Ok(HjExpansion { nodes, s0, s1, e0, e1 })
}

/// Coefficients `c_2..c_7` of `v` near the origin.
fn taylor_fit(v: &impl Fn(f64) -> f64, delta: f64) -> Result<[f64; 6]> {
    use nalgebra::{DMatrix, DVector};
    let samples = 16;
    let mut a = DMatrix::zeros(samples, 6);
    let mut b = DVector::zeros(samples);
    for k in 0..samples {
        let t = (k + 1) as f64 / samples as f64;
        let x = delta * t;
        for j in 0..6 {
            // columns scaled by δ^{j+2}
            a[(k, j)] = t.powi(j as i32 + 2);
        }
        b[k] = v(x);
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Config(format!("Taylor fit failed: {e}")))?;
    let mut c = [0.0; 6];
    for j in 0..6 {
        c[j] = sol[j] / delta.powi(j as i32 + 2);
    }
    Ok(c)
}

/// Coefficients of the large-`g` series `E = g a − 1/(4a²) − 9/(64 g a⁵) − …`.
pub const QUARTIC_SERIES: [f64; 4] = [1.0, -0.25, -9.0 / 64.0, -89.0 / 512.0];

/// Partial sum of the large-`g` series through `order` terms (1 to 4).
pub fn perturbative_energy_quartic(g: f64, a: f64, order: usize) -> Result<f64> {
    if !(1..=4).contains(&order) {
        return Err(Error::Config(format!("series order must be 1..=4, got {order}")));
    }
    let terms = [
        g * a,
        1.0 / (a * a),
        1.0 / (g * a.powi(5)),
        1.0 / (g * g * a.powi(8)),
    ];
    Ok((0..order).map(|k| QUARTIC_SERIES[k] * terms[k]).sum())
}

/// Pointwise check of `(T + V + h − E0) φ = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct TrialDefect {
    /// Largest `|(T + V + h − E0) φ| / φ` over panel-interior nodes.
    pub max_relative_defect: f64,
    /// Largest `|(T + V + h − E0) φ| / max φ`, from the three-point stencil
    /// on `φ` itself; stays accurate where `φ` vanishes at a wall.
    pub max_weighted_defect: f64,
    /// `max_relative_defect` restricted to each panel.
    pub panel_defects: Vec<f64>,
    /// Largest jump of `ln φ` across a breakpoint.
    pub max_log_phi_jump: f64,
    /// One-sided slope `d ln φ/dr` at the origin.
    pub slope_at_origin: f64,
}

/// Evaluate the defining equation of `h` by finite differences of `ln φ`
/// and of `φ`. Panel end nodes and nodes where `φ` vanishes are skipped.
pub fn verify_trial(trial: &TrialFunction, problem: &ProblemSpec) -> TrialDefect {
    let grid = trial.grid();
    let n_dim = grid.dimension() as f64;
    let lp = trial.phi.values();
    let x = grid.nodes();
    let peak = lp.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let mut worst: f64 = 0.0;
    let mut weighted: f64 = 0.0;
    let mut panel_defects = Vec::with_capacity(grid.panels().len());
    for p in grid.panels() {
        let h = p.step;
        let mut panel_worst: f64 = 0.0;
        for i in p.start + 1..p.end {
            if !lp[i].is_finite() {
                continue;
            }
            let v = problem.potential.eval(x[i], Side::Left);
            let rest = v + trial.h.value(i) - trial.e0;
            let radial = if n_dim > 1.0 { (n_dim - 1.0) / x[i] } else { 0.0 };

            let (up, down) = ((lp[i + 1] - lp[i]).exp(), (lp[i - 1] - lp[i]).exp());
            let lap = (up - 2.0 + down) / (h * h);
            let grad = (up - down) / (2.0 * h);
            let direct = -0.5 * (lap + radial * grad) + rest;
            weighted = weighted.max(direct.abs() * (lp[i] - peak).exp());

            if !(lp[i - 1].is_finite() && lp[i + 1].is_finite()) {
                continue;
            }
            let d1 = (lp[i + 1] - lp[i - 1]) / (2.0 * h);
            let d2 = (lp[i + 1] - 2.0 * lp[i] + lp[i - 1]) / (h * h);
            let defect = -0.5 * (d2 + d1 * d1 + radial * d1) + rest;
            panel_worst = panel_worst.max(defect.abs());
        }
        worst = worst.max(panel_worst);
        panel_defects.push(panel_worst);
    }
    let jump = grid
        .breakpoints()
        .iter()
        .zip(trial.phi.right_limits())
        .map(|(&i, &r)| (lp[i] - r).abs())
        .fold(0.0, f64::max);
    let p0 = grid.panels()[0];
    let slope = (-3.0 * lp[0] + 4.0 * lp[1] - lp[2]) / (2.0 * p0.step);
    TrialDefect {
        max_relative_defect: worst,
        max_weighted_defect: weighted,
        panel_defects,
        max_log_phi_jump: jump,
        slope_at_origin: slope,
    }
}

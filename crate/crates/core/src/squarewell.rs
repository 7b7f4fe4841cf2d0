//! The finite square well inside a box: depth `g²/2` on `|x| < l`, flat up
//! to hard walls at `|x| = L + l`.
//!
//! The trial is the free box ground state `cos(px)`, `p(L+l) = π/2`, so `h`
//! is a step: `g²/2` inside the well and zero outside. Every iterate then has
//! the form `P(x) + tan(px) Q(x)` with polynomials `P`, `Q` on each side of
//! the step.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{build_grid, integrate, GridFunction, RadialGrid, Side};
use crate::iterate::{iterate_ground, RunConfig, RunReport};
use crate::oracle::root_bracket;
use crate::trial::{Potential, ProblemSpec, TrialFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareWellModel {
    pub g2: f64,
    pub l: f64,
    /// Width of the flat region; `None` for an unbounded exterior.
    pub big_l: Option<f64>,
}

impl SquareWellModel {
    pub fn new(g2: f64, l: f64, big_l: Option<f64>) -> Result<Self> {
        if !(g2 >= 0.0) || !g2.is_finite() {
            return Err(Error::Config(format!("g² must be non-negative, got {g2}")));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Config(format!("l must be positive, got {l}")));
        }
        if let Some(bl) = big_l {
            if !(bl > 0.0) || !bl.is_finite() {
                return Err(Error::Config(format!("L must be positive, got {bl}")));
            }
        }
        Ok(Self { g2, l, big_l })
    }

    fn finite_l(&self) -> Result<f64> {
        self.big_l
            .ok_or_else(|| Error::Config("this operation needs a finite L".into()))
    }

    /// Wall position `L + l`.
    pub fn width(&self) -> Result<f64> {
        Ok(self.finite_l()? + self.l)
    }

    /// `p = π / (2(L + l))`.
    pub fn p(&self) -> Result<f64> {
        Ok(FRAC_PI_2 / self.width()?)
    }

    /// Trial energy `p²/2`.
    pub fn e0(&self) -> Result<f64> {
        let p = self.p()?;
        Ok(0.5 * p * p)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            dimension: 1,
            potential: Potential::SquareWell { g2: self.g2, l: self.l, big_l: self.finite_l()? },
        })
    }

    /// Grid on `[0, L + l]` with a breakpoint at the well edge.
    pub fn grid(&self, node_count: usize) -> Result<Arc<RadialGrid>> {
        build_grid(1, self.width()?, node_count, &[self.l])
    }

    pub fn trial(&self, grid: &Arc<RadialGrid>) -> Result<TrialFunction> {
        let w = self.width()?;
        if (grid.r_max() - w).abs() > 1e-12 * w {
            return Err(Error::Grid("grid must end at the wall L + l".into()));
        }
        let p = self.p()?;
        let l = self.l;
        let half = 0.5 * self.g2;
        let last = grid.len() - 1;
        let mut phi = GridFunction::from_fn(grid, |x| (p * x).cos().ln());
        let mut vals = phi.values().to_vec();
        vals[last] = f64::NEG_INFINITY;
        phi = GridFunction::from_values(grid, vals)?.into_log_scale();
        let h = GridFunction::from_sided_fn(grid, |x, side| {
            if x < l || (x == l && side == Side::Left) {
                half
            } else {
                0.0
            }
        });
        Ok(TrialFunction { phi, h, e0: self.e0()?, h_breakpoints: vec![l], h0: half })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Zero,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactGround {
    pub energy: f64,
    pub branch: Branch,
    /// Interior wavenumber.
    pub q: f64,
    /// Exterior wavenumber `k` (E > 0) or decay rate `κ` (E < 0).
    pub outer: f64,
}

const ROOT_TOL: f64 = 1e-15;

/// Critical depth `q0` with `q0 tan(q0 l) = 1/L`, where `E = 0`.
pub fn critical_depth(l: f64, big_l: f64) -> Result<f64> {
    let f = |q: f64| q * (q * l).tan() - 1.0 / big_l;
    let hi = FRAC_PI_2 / l * (1.0 - 1e-15);
    Ok(root_bracket(f, 0.0, hi, ROOT_TOL)?.root)
}

/// Exact even ground state of the well.
pub fn exact_ground(model: &SquareWellModel) -> Result<ExactGround> {
    let g2 = model.g2;
    let g = g2.sqrt();
    let l = model.l;
    let q_cap = FRAC_PI_2 / l;
    match model.big_l {
        None => {
            if g2 == 0.0 {
                return Err(Error::Config("an unbounded well needs g² > 0".into()));
            }
            // κ = q tan(ql), g² = q² + κ²
            let hi = g.min(q_cap) * (1.0 - 1e-15);
            let f = |q: f64| q * (q * l).tan() - (g2 - q * q).max(0.0).sqrt();
            let q = root_bracket(f, 0.0, hi, ROOT_TOL)?.root;
            let kappa = (g2 - q * q).sqrt();
            Ok(ExactGround { energy: -0.5 * kappa * kappa, branch: Branch::Negative, q, outer: kappa })
        }
        Some(big_l) => {
            let q0 = critical_depth(l, big_l)?;
            let g0sq = q0 * q0;
            if (g2 - g0sq).abs() <= 1e-14 * g0sq {
                return Ok(ExactGround { energy: 0.0, branch: Branch::Zero, q: q0, outer: 0.0 });
            }
            if g2 < g0sq {
                // q tan(ql) = k cot(kL), q² = g² + k²
                let kmax = (PI / big_l).min((q_cap * q_cap - g2).max(0.0).sqrt()) * (1.0 - 1e-15);
                let f = |k: f64| {
                    let q = (g2 + k * k).sqrt();
                    let cot = if k == 0.0 { 1.0 / big_l } else { k / (k * big_l).tan() };
                    q * (q * l).tan() - cot
                };
                let k = root_bracket(f, 0.0, kmax, ROOT_TOL)?.root;
                let q = (g2 + k * k).sqrt();
                Ok(ExactGround { energy: 0.5 * k * k, branch: Branch::Positive, q, outer: k })
            } else {
                // q tan(ql) = κ coth(κL), q² = g² − κ²
                let hi = g.min(q_cap) * (1.0 - 1e-15);
                let f = |q: f64| {
                    let kappa = (g2 - q * q).max(0.0).sqrt();
                    let coth = if kappa == 0.0 { 1.0 / big_l } else { kappa / (kappa * big_l).tanh() };
                    q * (q * l).tan() - coth
                };
                let q = root_bracket(f, 0.0, hi, ROOT_TOL)?.root;
                let kappa = (g2 - q * q).sqrt();
                Ok(ExactGround { energy: -0.5 * kappa * kappa, branch: Branch::Negative, q, outer: kappa })
            }
        }
    }
}

/// Closed-form first step from `f_0 = 1` (Case A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstIterate {
    pub model: SquareWellModel,
    pub cal_e1: f64,
}

pub fn first_iterate_closed_form(model: &SquareWellModel) -> Result<FirstIterate> {
    let p = model.p()?;
    let w = model.width()?;
    let l = model.l;
    let cal_e1 = model.g2 / (2.0 * w) * (l + (2.0 * p * l).sin() / (2.0 * p));
    Ok(FirstIterate { model: *model, cal_e1 })
}

impl FirstIterate {
    fn parts(&self) -> (f64, f64, f64, f64) {
        let p = self.model.p().expect("finite model");
        let big_l = self.model.big_l.expect("finite model");
        (p, big_l, self.model.l, self.model.g2)
    }

    /// `𝒟_1(x)`.
    pub fn d1(&self, x: f64) -> f64 {
        let (p, big_l, l, g2) = self.parts();
        let pre = g2 / (4.0 * (big_l + l));
        let s = (2.0 * p * l).sin() / (2.0 * p);
        let sx = (2.0 * p * x).sin() / (2.0 * p);
        if x <= l {
            pre * (x + sx) * (big_l - s)
        } else {
            pre * (l + s) * (big_l + l - x - sx)
        }
    }

    /// `f_1(x)` with `f_1(L + l) = 1`.
    pub fn f1(&self, x: f64) -> f64 {
        let (p, big_l, l, g2) = self.parts();
        let e1 = self.cal_e1;
        let w = big_l + l;
        let outer = |x: f64| {
            let t = if (w - x).abs() < 1e-300 {
                1.0 / p
            } else {
                (w - x) * (p * x).tan()
            };
            1.0 + e1 / (p * p) * (1.0 - p * t)
        };
        if x >= l {
            outer(x)
        } else {
            let f0 = outer(l) + (0.5 * g2 - e1) / p * l * (p * l).tan();
            f0 - (0.5 * g2 - e1) / p * x * (p * x).tan()
        }
    }
}

/// Coefficients of the rational polynomial `r_n(u)` with `r_0 = 1`,
/// `r_n'' − r_n' = −r_{n-1}` and `r_n(0) = 0`, lowest degree first.
pub fn r_coefficients(n: usize) -> Vec<BigRational> {
    let mut r = vec![BigRational::one()];
    for _ in 0..n {
        // s = Σ_k D^k r solves s − s' = r; then r_new = ∫_0^u s
        let mut s = vec![BigRational::zero(); r.len()];
        let mut term = r.clone();
        while !term.is_empty() {
            for (i, c) in term.iter().enumerate() {
                s[i] += c;
            }
            term = (1..term.len())
                .map(|i| &term[i] * BigRational::from_integer(BigInt::from(i)))
                .collect();
        }
        let mut next = vec![BigRational::zero()];
        for (i, c) in s.into_iter().enumerate() {
            next.push(c / BigRational::from_integer(BigInt::from(i + 1)));
        }
        r = next;
    }
    r
}

/// `r'' − r' + r_prev` in exact arithmetic; all zero for a valid pair.
pub fn r_recursion_defect(r: &[BigRational], r_prev: &[BigRational]) -> Vec<BigRational> {
    let len = r.len().max(r_prev.len());
    let at = |v: &[BigRational], i: usize| v.get(i).cloned().unwrap_or_else(BigRational::zero);
    (0..len)
        .map(|k| {
            let d2 = at(r, k + 2) * BigRational::from_integer(BigInt::from((k + 2) * (k + 1)));
            let d1 = at(r, k + 1) * BigRational::from_integer(BigInt::from(k + 1));
            d2 - d1 + at(r_prev, k)
        })
        .collect()
}

fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("finite rational")
}

/// Monomial coefficients of `R_n(x|q) = q^{2n} r_n(x/q)`.
#[allow(non_snake_case)]
pub fn poly_family_R(n: usize, q: Complex64) -> Vec<Complex64> {
    r_coefficients(n)
        .iter()
        .enumerate()
        .map(|(k, c)| q.powi(2 * n as i32 - k as i32) * to_f64(c))
        .collect()
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    (1..c.len()).map(|k| k as f64 * c[k]).collect()
}

/// `P + tan(px) Q` on one side of the well edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPolys {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `Δ_n` of the region.
    pub delta: f64,
    /// Integration constants `(A, B)` added at this step.
    pub constants: (f64, f64),
}

impl RegionPolys {
    fn eval(&self, p: f64, x: f64, wall: f64) -> f64 {
        let base = poly_eval(&self.p, x);
        if (x - wall).abs() < 1e-300 {
            // tan(px) Q(x) → −Q'(wall)/p
            return base - poly_eval(&poly_deriv(&self.q), x) / p;
        }
        base + (p * x).tan() * poly_eval(&self.q, x)
    }

    fn slope(&self, p: f64, x: f64) -> f64 {
        let t = (p * x).tan();
        poly_eval(&poly_deriv(&self.p), x)
            + p * (1.0 + t * t) * poly_eval(&self.q, x)
            + t * poly_eval(&poly_deriv(&self.q), x)
    }
}

/// Iterate `f_n` assembled from the polynomial family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyIterate {
    pub n: usize,
    pub inner: RegionPolys,
    pub outer: RegionPolys,
    /// Largest imaginary part left after combining the conjugate pair.
    pub imaginary_residual: f64,
    /// `|f'(l⁻) − f'(l⁺)|`; vanishes when `ℰ_n` zeroes the total charge.
    pub slope_mismatch: f64,
    p_wave: f64,
    l: f64,
    wall: f64,
}

impl PolyIterate {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.l {
            self.inner.eval(self.p_wave, x, self.wall)
        } else {
            self.outer.eval(self.p_wave, x, self.wall)
        }
    }

    /// `ℰ_{n+1} = [h f_n]/[f_n]` by fine Simpson quadrature of the closed form.
    pub fn next_energy(&self, g2: f64) -> Result<f64> {
        let grid = build_grid(1, self.wall, 40_001, &[self.l])?;
        let p = self.p_wave;
        let last = grid.len() - 1;
        let wf = GridFunction::from_values(
            &grid,
            grid.nodes()
                .iter()
                .enumerate()
                .map(|(i, &x)| if i == last { 0.0 } else { (p * x).cos().powi(2) * self.eval(x) })
                .collect(),
        )?;
        let inside = GridFunction::from_sided_fn(&grid, |x, s| {
            if x < self.l || (x == self.l && s == Side::Left) {
                0.5 * g2
            } else {
                0.0
            }
        });
        Ok(integrate(&wf.zip_map(&inside, |a, b| a * b)) / integrate(&wf))
    }
}

/// Coefficients of `P^±` in the basis `R_k^±`, per region.
#[derive(Clone)]
struct PairState {
    inner: Vec<Complex64>,
    outer: Vec<Complex64>,
}

/// Assemble `f_1 … f_m` (Case A) from shifts `ℰ_1 … ℰ_m`.
pub fn assemble_iterate_polys(model: &SquareWellModel, cal_es: &[f64]) -> Result<Vec<PolyIterate>> {
    let p = model.p()?;
    let wall = model.width()?;
    let l = model.l;
    let qp = Complex64::new(0.0, 1.0 / (2.0 * p));
    let qm = qp.conj();
    let m = cal_es.len();
    let fam_p: Vec<Vec<Complex64>> = (0..=m).map(|k| poly_family_R(k, qp)).collect();
    let fam_m: Vec<Vec<Complex64>> = (0..=m).map(|k| poly_family_R(k, qm)).collect();

    let monomials = |a: &[Complex64], fam: &[Vec<Complex64>]| {
        let mut out = vec![Complex64::zero(); a.len()];
        for (k, ak) in a.iter().enumerate() {
            for (j, c) in fam[k].iter().enumerate() {
                out[j] += ak * c;
            }
        }
        out
    };
    // P = P⁺ + P⁻, Q = i(P⁺ − P⁻)
    let combine = |ap: &[Complex64], am: &[Complex64]| {
        let pp = monomials(ap, &fam_p);
        let pm = monomials(am, &fam_m);
        let i = Complex64::new(0.0, 1.0);
        let pc: Vec<Complex64> = pp.iter().zip(&pm).map(|(a, b)| a + b).collect();
        let qc: Vec<Complex64> = pp.iter().zip(&pm).map(|(a, b)| i * (a - b)).collect();
        let scale = pc.iter().chain(&qc).map(|c| c.norm()).fold(1.0, f64::max);
        let imag = pc.iter().chain(&qc).map(|c| c.im.abs()).fold(0.0, f64::max) / scale;
        (
            RegionPolys {
                p: pc.iter().map(|c| c.re).collect(),
                q: qc.iter().map(|c| c.re).collect(),
                delta: 0.0,
                constants: (0.0, 0.0),
            },
            imag,
        )
    };

    let half = Complex64::new(0.5, 0.0);
    let mut plus = PairState { inner: vec![half], outer: vec![half] };
    let mut minus = plus.clone();
    let mut out = Vec::with_capacity(m);
    for (idx, &cal_e) in cal_es.iter().enumerate() {
        let delta_in = model.g2 - 2.0 * cal_e;
        let delta_out = -2.0 * cal_e;
        let shift = |v: &[Complex64], d: f64| {
            let mut w = vec![Complex64::zero()];
            w.extend(v.iter().map(|c| c * d));
            w
        };
        plus = PairState { inner: shift(&plus.inner, delta_in), outer: shift(&plus.outer, delta_out) };
        minus = PairState { inner: shift(&minus.inner, delta_in), outer: shift(&minus.outer, delta_out) };

        let (inner0, _) = combine(&plus.inner, &minus.inner);
        let (outer0, _) = combine(&plus.outer, &minus.outer);
        let b_in = -poly_eval(&poly_deriv(&inner0.p), 0.0) / p - poly_eval(&inner0.q, 0.0);
        let b_out = -poly_eval(&outer0.q, wall);
        let a_out = 1.0 - poly_eval(&outer0.p, wall) + poly_eval(&poly_deriv(&outer0.q), wall) / p;
        let with = |r: &RegionPolys, a: f64, b: f64| {
            let mut r = r.clone();
            r.p[0] += a;
            r.q[0] += b;
            r
        };
        let outer_fixed = with(&outer0, a_out, b_out);
        let inner_b = with(&inner0, 0.0, b_in);
        let a_in = outer_fixed.eval(p, l, wall) - inner_b.eval(p, l, wall);
        if !a_in.is_finite() || !a_out.is_finite() {
            return Err(Error::Config("junction system is singular".into()));
        }
        let i = Complex64::new(0.0, 1.0);
        let c_in = (Complex64::new(a_in, 0.0) - i * b_in) * 0.5;
        let c_out = (Complex64::new(a_out, 0.0) - i * b_out) * 0.5;
        plus.inner[0] += c_in;
        plus.outer[0] += c_out;
        minus.inner[0] += c_in.conj();
        minus.outer[0] += c_out.conj();

        let (mut inner, im_in) = combine(&plus.inner, &minus.inner);
        let (mut outer, im_out) = combine(&plus.outer, &minus.outer);
        inner.delta = delta_in;
        inner.constants = (a_in, b_in);
        outer.delta = delta_out;
        outer.constants = (a_out, b_out);
        let slope_mismatch = (inner.slope(p, l) - outer.slope(p, l)).abs();
        out.push(PolyIterate {
            n: idx + 1,
            inner,
            outer,
            imaginary_residual: im_in.max(im_out),
            slope_mismatch,
            p_wave: p,
            l,
            wall,
        });
    }
    Ok(out)
}

/// Case-A iteration on a grid of `node_count` nodes over `[0, L + l]`.
pub fn iterate_squarewell(model: &SquareWellModel, node_count: usize, config: &RunConfig) -> Result<RunReport> {
    let grid = model.grid(node_count)?;
    let trial = model.trial(&grid)?;
    iterate_ground(&trial, config)
}

/// Nearest singularities of the weak-coupling expansion for `L = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Singularity {
    /// `z = iy` on the imaginary branch, real `z` otherwise.
    pub z: f64,
    pub g2l2: f64,
    /// `|z tan z + 1|` (or `|y tanh y − 1|`) at the root.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityBranch {
    Imaginary,
    Real,
}

/// Root of `z tan z + 1 = 0` with `g²l² = 1 + z²`.
pub fn singularity_locator(branch: SingularityBranch) -> Result<Singularity> {
    match branch {
        SingularityBranch::Imaginary => {
            // z = iy: −y tanh y + 1 = 0, g²l² = 1 − y²
            let f = |y: f64| y * y.tanh() - 1.0;
            let r = root_bracket(f, 0.5, 3.0, ROOT_TOL)?;
            Ok(Singularity { z: r.root, g2l2: 1.0 - r.root * r.root, residual: f(r.root).abs() })
        }
        SingularityBranch::Real => {
            let f = |z: f64| z * z.tan() + 1.0;
            let r = root_bracket(f, FRAC_PI_2 * (1.0 + 1e-12), PI, ROOT_TOL)?;
            Ok(Singularity { z: r.root, g2l2: 1.0 + r.root * r.root, residual: f(r.root).abs() })
        }
    }
}

/// All real and imaginary roots with `|z| < bound`, ordered by `|g²l²|`.
pub fn singularities_within(bound: f64) -> Result<Vec<Singularity>> {
    let mut out = vec![singularity_locator(SingularityBranch::Imaginary)?];
    let f = |z: f64| z * z.tan() + 1.0;
    let mut k = 1;
    while (k as f64 - 0.5) * PI < bound {
        let lo = (k as f64 - 0.5) * PI * (1.0 + 1e-12);
        let hi = (k as f64 * PI).min(bound);
        if let Ok(r) = root_bracket(f, lo, hi, ROOT_TOL) {
            out.push(Singularity { z: r.root, g2l2: 1.0 + r.root * r.root, residual: f(r.root).abs() });
        }
        k += 1;
    }
    out.sort_by(|a, b| a.g2l2.abs().total_cmp(&b.g2l2.abs()));
    Ok(out)
}

/// Convergence radius in `g²l²` of the weak-coupling series.
pub fn convergence_radius() -> Result<f64> {
    Ok(singularity_locator(SingularityBranch::Imaginary)?.g2l2.abs())
}

/// Radius of the weak-coupling disk and where `model` sits relative to it.
pub fn perturbative_radius(model: &SquareWellModel) -> Result<(f64, RadiusVerdict)> {
    if model.big_l.is_some() {
        return Err(Error::Config("the perturbative radius is defined for L = ∞".into()));
    }
    let radius = convergence_radius()?;
    Ok((radius, classify(model.g2 * model.l * model.l, radius)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusVerdict {
    Inside,
    Boundary,
    Outside,
}

/// Relative half-width of the band counted as the boundary of the disk.
pub const BOUNDARY_BAND: f64 = 0.02;

pub fn classify(g2l2: f64, radius: f64) -> RadiusVerdict {
    let x = g2l2.abs();
    if (x - radius).abs() <= BOUNDARY_BAND * radius {
        RadiusVerdict::Boundary
    } else if x < radius {
        RadiusVerdict::Inside
    } else {
        RadiusVerdict::Outside
    }
}

//! Independent reference values: a finite-difference ground state, a
//! bracketing root finder and an orthonormality probe for box eigenbases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::BoxEigenbasis;
use crate::grid::{build_grid, integrate, GridFunction, RadialGrid};

/// Condition imposed on the reduced radial function at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdGroundState {
    pub energy: f64,
    pub nodes: Vec<f64>,
    /// Reduced radial function `u = r^{(N-1)/2} ψ`, positive, `∫u² dr = 1`.
    pub psi: Vec<f64>,
    /// `‖(H - E)u‖ / ‖u‖` on the discrete operator.
    pub residual: f64,
}

/// Lowest eigenpair of the three-point discretisation of
/// `-½u'' + [V + (N-1)(N-3)/(8r²)] u` on a uniform grid, with `u(r_max) = 0`.
pub fn fd_ground_state(
    potential: impl Fn(f64) -> f64,
    grid: &RadialGrid,
    bc0: Boundary,
) -> Result<FdGroundState> {
    let (step, spread) = grid.spacing_spread();
    if spread > 1e-9 {
        return Err(Error::Grid(
            "finite-difference oracle needs uniform spacing".into(),
        ));
    }
    let n_dim = grid.dimension();
    if n_dim > 1 && bc0 == Boundary::Neumann {
        return Err(Error::Config(
            "radial problems with N > 1 need a Dirichlet condition at r = 0".into(),
        ));
    }
    let nodes = grid.nodes();
    let first = if bc0 == Boundary::Neumann { 0 } else { 1 };
    let last = nodes.len() - 2;
    let h2 = step * step;
    let centrifugal = ((n_dim as f64 - 1.0) * (n_dim as f64 - 3.0)) / 8.0;

    let diag: Vec<f64> = (first..=last)
        .map(|i| {
            let r = nodes[i];
            let extra = if centrifugal != 0.0 { centrifugal / (r * r) } else { 0.0 };
            1.0 / h2 + potential(r) + extra
        })
        .collect();
    let mut off = vec![-0.5 / h2; diag.len() - 1];
    if bc0 == Boundary::Neumann {
        off[0] = -1.0 / (std::f64::consts::SQRT_2 * h2);
    }

    let energy = lowest_eigenvalue(&diag, &off);
    let mut v = inverse_iteration(&diag, &off, energy);
    let residual = tridiagonal_residual(&diag, &off, energy, &v);

    if bc0 == Boundary::Neumann {
        v[0] *= std::f64::consts::SQRT_2;
    }
    let mut psi = vec![0.0; nodes.len()];
    psi[first..=last].copy_from_slice(&v);
    if psi.iter().sum::<f64>() < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let norm = integrate(&GridFunction::from_values(
        &std::sync::Arc::new(grid.clone()),
        psi.iter().map(|x| x * x).collect(),
    )?)
    .sqrt();
    psi.iter_mut().for_each(|x| *x /= norm);

    Ok(FdGroundState {
        energy,
        nodes: nodes.to_vec(),
        psi,
        residual,
    })
}

/// Number of eigenvalues below `x` (Sturm count of the LDLᵀ pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q == 0.0 { f64::EPSILON * (diag[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn inverse_iteration(diag: &[f64], off: &[f64], shift: f64) -> Vec<f64> {
    let n = diag.len();
    let mut v = vec![1.0; n];
    for _ in 0..4 {
        // Thomas algorithm for (T - shift) y = v
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let tiny = 1e-300;
        let mut b = diag[0] - shift;
        if b.abs() < tiny {
            b = tiny;
        }
        c[0] = if n > 1 { off[0] / b } else { 0.0 };
        d[0] = v[0] / b;
        for i in 1..n {
            let mut m = diag[i] - shift - off[i - 1] * c[i - 1];
            if m.abs() < tiny {
                m = tiny;
            }
            c[i] = if i + 1 < n { off[i] / m } else { 0.0 };
            d[i] = (v[i] - off[i - 1] * d[i - 1]) / m;
        }
        let mut y = vec![0.0; n];
        y[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = d[i] - c[i] * y[i + 1];
        }
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = y.into_iter().map(|x| x / norm).collect();
    }
    v
}

fn tridiagonal_residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut r2 = 0.0;
    let mut v2 = 0.0;
    for i in 0..n {
        let mut t = (diag[i] - lambda) * v[i];
        if i > 0 {
            t += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            t += off[i] * v[i + 1];
        }
        r2 += t * t;
        v2 += v[i] * v[i];
    }
    (r2 / v2).sqrt()
}

/// Oracle energies on three successively halved grids.
#[derive(Debug, Clone, Serialize)]
pub struct RichardsonEstimate {
    pub energies: [f64; 3],
    pub extrapolated: f64,
    /// Observed convergence order from the three levels.
    pub order: f64,
    /// `|extrapolated - finest|`.
    pub error_estimate: f64,
}

/// Ground-state energy on `intervals`, `2·intervals` and `4·intervals`
/// uniform intervals, extrapolated assuming second-order convergence.
pub fn fd_richardson(
    potential: impl Fn(f64) -> f64 + Copy,
    dimension: usize,
    r_max: f64,
    intervals: usize,
    bc0: Boundary,
) -> Result<RichardsonEstimate> {
    let mut energies = [0.0; 3];
    for (k, e) in energies.iter_mut().enumerate() {
        let g = build_grid(dimension, r_max, (intervals << k) + 1, &[])?;
        *e = fd_ground_state(potential, &g, bc0)?.energy;
    }
    let d1 = energies[1] - energies[0];
    let d2 = energies[2] - energies[1];
    let order = (d1 / d2).abs().log2();
    let extrapolated = energies[2] + d2 / 3.0;
    Ok(RichardsonEstimate {
        energies,
        extrapolated,
        order,
        error_estimate: (extrapolated - energies[2]).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootResult {
    pub root: f64,
    pub function_value: f64,
    pub iterations: usize,
    pub bracket_width: f64,
}

/// Bisection on a sign-changing bracket, run until the bracket is narrower
/// than `tol` or cannot shrink further.
pub fn root_bracket(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<RootResult> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(RootResult { root: lo, function_value: 0.0, iterations: 0, bracket_width: 0.0 });
    }
    if fhi == 0.0 {
        return Ok(RootResult { root: hi, function_value: 0.0, iterations: 0, bracket_width: 0.0 });
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::NoBracket { a: lo, b: hi });
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < 400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(RootResult { root: mid, function_value: 0.0, iterations, bracket_width: hi - lo });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(RootResult {
        root,
        function_value: f(root),
        iterations,
        bracket_width: hi - lo,
    })
}

/// Largest entry of `|Gram - I|` for the first `count` basis functions,
/// integrated with Simpson on `grid`.
pub fn orthonormal_check(basis: &BoxEigenbasis, grid: &std::sync::Arc<RadialGrid>, count: usize) -> f64 {
    let modes: Vec<GridFunction> = (0..count)
        .map(|n| GridFunction::from_fn(grid, |x| basis.mode(n, x)))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..count {
        for j in i..count {
            let g = integrate(&modes[i].zip_map(&modes[j], |a, b| a * b));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

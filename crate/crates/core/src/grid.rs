//! Radial grids and panel-wise quadrature.
//!
//! A grid covers `[0, r_max]` and is split into panels at caller-supplied
//! breakpoints. Nodes are uniform inside each panel and every panel holds an
//! even number of intervals, so composite Simpson applies panel by panel and
//! no quadrature stencil ever reaches across a breakpoint.
//!
//! Functions with a jump at a breakpoint store both one-sided limits: the
//! node value is the limit from the left and a separate slot holds the limit
//! from the right.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Side of a breakpoint node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A run of uniformly spaced nodes `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub start: usize,
    pub end: usize,
    pub step: f64,
}

impl Panel {
    pub fn intervals(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dimension: usize,
    nodes: Vec<f64>,
    breakpoints: Vec<usize>,
    panels: Vec<Panel>,
}

/// Build a grid on `[0, r_max]` for radial dimension `dimension`.
///
/// Each panel receives a share of `node_count - 1` intervals proportional to
/// its length, rounded to an even count of at least four. The realised node
/// count can therefore differ from the request by a few nodes.
pub fn build_grid(
    dimension: usize,
    r_max: f64,
    node_count: usize,
    breakpoints: &[f64],
) -> Result<Arc<RadialGrid>> {
    if dimension == 0 {
        return Err(Error::Grid("dimension must be at least 1".into()));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::Grid(format!("r_max must be positive, got {r_max}")));
    }
    if node_count < 17 {
        return Err(Error::Grid(format!(
            "node_count must be at least 17, got {node_count}"
        )));
    }
    let mut cuts: Vec<f64> = breakpoints.to_vec();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    for &b in &cuts {
        if !(b > 0.0 && b < r_max) {
            return Err(Error::Grid(format!(
                "breakpoint {b} lies outside the open interval (0, {r_max})"
            )));
        }
    }

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(&cuts);
    edges.push(r_max);

    let total = (node_count - 1) as f64;
    let mut nodes = vec![0.0];
    let mut panels = Vec::with_capacity(edges.len() - 1);
    let mut bp_index = Vec::with_capacity(cuts.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let share = total * (b - a) / r_max;
        let count = ((share / 2.0).round() as usize * 2).max(4);
        let start = nodes.len() - 1;
        for k in 1..count {
            nodes.push(a + (b - a) * (k as f64) / (count as f64));
        }
        nodes.push(b);
        let end = nodes.len() - 1;
        panels.push(Panel {
            start,
            end,
            step: (b - a) / count as f64,
        });
        if b < r_max {
            bp_index.push(end);
        }
    }
    if nodes.len() - 1 < 16 {
        return Err(Error::Grid("grid must contain at least 16 intervals".into()));
    }
    Ok(Arc::new(RadialGrid {
        dimension,
        nodes,
        breakpoints: bp_index,
        panels,
    }))
}

impl RadialGrid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Node indices of the interior breakpoints, ascending.
    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Position of node `i` in the breakpoint list, if it is a breakpoint.
    pub fn breakpoint_slot(&self, i: usize) -> Option<usize> {
        self.breakpoints.binary_search(&i).ok()
    }

    /// Panel containing the interval `[i, i+1]`.
    pub fn panel_of_interval(&self, i: usize) -> usize {
        self.breakpoints.partition_point(|&b| b <= i)
    }

    /// Largest node spacing, relative spread of spacings across panels.
    pub fn spacing_spread(&self) -> (f64, f64) {
        let max = self.panels.iter().map(|p| p.step).fold(0.0, f64::max);
        let min = self.panels.iter().map(|p| p.step).fold(f64::INFINITY, f64::min);
        (max, (max - min) / max)
    }

    /// Four-node stencil inside the panel of interval `[i, i+1]`.
    fn stencil(&self, i: usize) -> [usize; 4] {
        let p = self.panels[self.panel_of_interval(i)];
        let lo = if i == p.start {
            i
        } else if i + 1 == p.end {
            i - 2
        } else {
            i - 1
        };
        [lo, lo + 1, lo + 2, lo + 3]
    }
}

/// Samples of a function on a grid.
///
/// With `log_scale` set the samples hold the natural logarithm of a positive
/// function; `-inf` marks an endpoint where the function vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    right: Vec<f64>,
    log_scale: bool,
}

impl GridFunction {
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_sided_fn(grid, |r, _| f(r))
    }

    /// Sample a piecewise function; breakpoint nodes are evaluated once from
    /// each side.
    pub fn from_sided_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64, Side) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r, Side::Left)).collect();
        let right = grid
            .breakpoints
            .iter()
            .map(|&i| f(grid.nodes[i], Side::Right))
            .collect();
        Self {
            grid: Arc::clone(grid),
            values,
            right,
            log_scale: false,
        }
    }

    pub fn from_values(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let right = grid.breakpoints.iter().map(|&i| values[i]).collect();
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            right,
            log_scale: false,
        })
    }

    pub fn constant(grid: &Arc<RadialGrid>, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// Replace the right-hand limits at the breakpoints.
    pub fn with_right_limits(mut self, right: Vec<f64>) -> Result<Self> {
        if right.len() != self.grid.breakpoints.len() {
            return Err(Error::Grid("one right limit per breakpoint expected".into()));
        }
        self.right = right;
        Ok(self)
    }

    /// Mark the samples as logarithms.
    pub fn into_log_scale(mut self) -> Self {
        self.log_scale = true;
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn right_limits(&self) -> &[f64] {
        &self.right
    }

    pub fn is_log_scale(&self) -> bool {
        self.log_scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn side_value(&self, i: usize, side: Side) -> f64 {
        match (side, self.grid.breakpoint_slot(i)) {
            (Side::Right, Some(k)) => self.right[k],
            _ => self.values[i],
        }
    }

    /// Sample at node `i` as seen from inside the panel of interval
    /// `[interval, interval+1]`.
    fn panel_value(&self, interval: usize, i: usize) -> f64 {
        let pi = self.grid.panel_of_interval(interval);
        if pi > 0 && i == self.grid.panels[pi].start {
            self.right[pi - 1]
        } else {
            self.values[i]
        }
    }

    /// Largest jump between the one-sided limits.
    pub fn max_jump(&self) -> f64 {
        self.grid
            .breakpoints
            .iter()
            .zip(&self.right)
            .map(|(&i, &r)| (self.values[i] - r).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            right: self.right.iter().map(|&v| f(v)).collect(),
            log_scale: false,
        }
    }

    /// Pointwise combination; both one-sided limits are combined separately.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid);
        Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            right: self
                .right
                .iter()
                .zip(&other.right)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            log_scale: false,
        }
    }

    /// Linear samples; exponentiates log-scale samples.
    pub fn to_linear(&self) -> Self {
        if self.log_scale {
            self.map(f64::exp)
        } else {
            self.clone()
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.right)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.right)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.right)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute pointwise difference, both sides included.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.zip_map(other, |a, b| a - b).max_abs()
    }

    /// Local cubic interpolation inside the panel holding `r`.
    pub fn interpolate(&self, r: f64, side: Side) -> f64 {
        let nodes = &self.grid.nodes;
        let n = nodes.len();
        let r = r.clamp(0.0, self.grid.r_max());
        let mut i = nodes.partition_point(|&x| x <= r).saturating_sub(1).min(n - 2);
        if nodes[i] == r {
            if let Some(k) = self.grid.breakpoint_slot(i) {
                return if side == Side::Right {
                    self.right[k]
                } else {
                    self.values[i]
                };
            }
            if side == Side::Left && i > 0 {
                i -= 1;
            }
        }
        let st = self.grid.stencil(i);
        let xs = st.map(|j| nodes[j]);
        let ys = st.map(|j| self.panel_value(i, j));
        let mut acc = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (r - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += l * ys[a];
        }
        acc
    }
}

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Integral over each interval `[r_i, r_{i+1}]`.
///
/// The two halves of every Simpson pair use the three-point rules
/// `(5, 8, -1)/12` and `(-1, 8, 5)/12`, which add up to Simpson exactly.
pub fn interval_integrals(f: &GridFunction) -> Vec<f64> {
    let f = f.to_linear();
    let grid = &f.grid;
    let mut out = vec![0.0; grid.len() - 1];
    for p in &grid.panels {
        let h12 = p.step / 12.0;
        let mut i = p.start;
        while i < p.end {
            let f0 = if i == p.start {
                f.panel_value(i, i)
            } else {
                f.values[i]
            };
            let f1 = f.values[i + 1];
            let f2 = f.values[i + 2];
            out[i] = h12 * (5.0 * f0 + 8.0 * f1 - f2);
            out[i + 1] = h12 * (-f0 + 8.0 * f1 + 5.0 * f2);
            i += 2;
        }
    }
    out
}

/// Composite Simpson over the whole grid.
pub fn integrate(f: &GridFunction) -> f64 {
    let mut s = CompensatedSum::default();
    for c in interval_integrals(f) {
        s.add(c);
    }
    s.value()
}

/// `F(r_i) = ∫_0^{r_i} f`, with `F(0) = 0` exactly.
pub fn cumulative_from_zero(f: &GridFunction) -> GridFunction {
    let parts = interval_integrals(f);
    let mut out = Vec::with_capacity(parts.len() + 1);
    let mut s = CompensatedSum::default();
    out.push(0.0);
    for c in parts {
        s.add(c);
        out.push(s.value());
    }
    GridFunction::from_values(&f.grid, out).expect("length matches grid")
}

/// `F(r_i) = ∫_{r_i}^{r_max} f`, with `F(r_max) = 0` exactly.
pub fn cumulative_from_tail(f: &GridFunction) -> GridFunction {
    let parts = interval_integrals(f);
    let mut out = vec![0.0; parts.len() + 1];
    let mut s = CompensatedSum::default();
    for (i, c) in parts.iter().enumerate().rev() {
        s.add(*c);
        out[i] = s.value();
    }
    GridFunction::from_values(&f.grid, out).expect("length matches grid")
}

/// `m_k(s) = ∫_0^1 u^k e^{s u} du` for `k = 0..4`.
fn exp_moments(s: f64) -> [f64; 4] {
    let mut m = [0.0; 4];
    if s.abs() < 1.0 {
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut acc = 0.0;
            for n in 0..40 {
                if n > 0 {
                    term *= s / n as f64;
                }
                acc += term / (k + n + 1) as f64;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            *mk = acc;
        }
    } else {
        let es = s.exp();
        m[0] = s.exp_m1() / s;
        for k in 1..4 {
            m[k] = (es - k as f64 * m[k - 1]) / s;
        }
    }
    m
}

/// `∫_0^1 L_j(u) e^{s u} du` for the cubic Lagrange basis on `us`.
fn lagrange_weights(us: [f64; 4], s: f64) -> [f64; 4] {
    let m = exp_moments(s);
    let mut w = [0.0; 4];
    for j in 0..4 {
        let mut coef = [1.0, 0.0, 0.0, 0.0];
        let mut deg = 0;
        let mut denom = 1.0;
        for k in 0..4 {
            if k == j {
                continue;
            }
            // multiply by (u - us[k])
            for d in (0..=deg).rev() {
                coef[d + 1] += coef[d];
                coef[d] *= -us[k];
            }
            deg += 1;
            denom *= us[j] - us[k];
        }
        w[j] = (0..4).map(|d| coef[d] * m[d]).sum::<f64>() / denom;
    }
    w
}

/// `∫_{r_i}^{r_{i+1}} q e^{w}` returned as `(value, w_ref)` with the integral
/// equal to `value * e^{w_ref}`.
fn weighted_interval(q: &GridFunction, w: &GridFunction, i: usize) -> (f64, f64) {
    let grid = &q.grid;
    let st = grid.stencil(i);
    let xs = st.map(|j| grid.nodes[j]);
    let qs = st.map(|j| q.panel_value(i, j));
    let ws = st.map(|j| w.panel_value(i, j));
    let ia = st.iter().position(|&j| j == i).unwrap();
    let (wa, wb) = (ws[ia], ws[ia + 1]);
    let h = xs[ia + 1] - xs[ia];
    if wa == f64::NEG_INFINITY && wb == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    if ws.iter().any(|v| !v.is_finite()) {
        // polynomial rule on the weighted integrand itself
        let wref = wa.max(wb);
        let us = xs.map(|x| (x - xs[ia]) / h);
        let lw = lagrange_weights(us, 0.0);
        let mut v = 0.0;
        for j in 0..4 {
            if ws[j].is_finite() {
                v += lw[j] * qs[j] * (ws[j] - wref).exp();
            }
        }
        return (h * v, wref);
    }
    let (a, sigma) = if wb > wa { (ia + 1, -1.0) } else { (ia, 1.0) };
    let b = if a == ia { ia + 1 } else { ia };
    let s = ws[b] - ws[a];
    let us = xs.map(|x| sigma * (x - xs[a]) / h);
    let lw = lagrange_weights(us, s);
    let mut v = 0.0;
    for j in 0..4 {
        let g = qs[j] * (ws[j] - ws[a] - s * us[j]).exp();
        v += lw[j] * g;
    }
    (h * v, ws[a])
}

/// Fill non-finite entries at the ends from the three nearest valid nodes.
fn extrapolate_ends(out: &mut [f64]) {
    let n = out.len();
    if n >= 4 && !out[0].is_finite() {
        out[0] = 3.0 * out[1] - 3.0 * out[2] + out[3];
    }
    if n >= 4 && !out[n - 1].is_finite() {
        out[n - 1] = 3.0 * out[n - 2] - 3.0 * out[n - 3] + out[n - 4];
    }
}

/// `S(r_i) = e^{-w(r_i)} ∫_{r_i}^{r_max} q(z) e^{w(z)} dz`.
///
/// Each interval is integrated with a cubic rule that is exact for
/// `e^{βz}` times a cubic, `β` being the local slope of `w`, so steep
/// weights stay accurate without resolving them. Nodes where `w = -inf`
/// receive the limit by extrapolation.
pub fn scaled_cumulative_from_tail(q: &GridFunction, w: &GridFunction) -> GridFunction {
    let n = q.len();
    let q = q.to_linear();
    let mut out = vec![f64::NAN; n];
    let wv = &w.values;
    out[n - 1] = if wv[n - 1].is_finite() { 0.0 } else { f64::NAN };
    let mut prev = 0.0;
    for i in (0..n - 1).rev() {
        let (v, wref) = weighted_interval(&q, w, i);
        if !wv[i].is_finite() {
            continue;
        }
        let carry = if wv[i + 1].is_finite() {
            prev * (wv[i + 1] - wv[i]).exp()
        } else {
            0.0
        };
        out[i] = carry + v * (wref - wv[i]).exp();
        prev = out[i];
    }
    extrapolate_ends(&mut out);
    GridFunction::from_values(q.grid(), out).expect("length matches grid")
}

/// `S(r_i) = e^{-w(r_i)} ∫_0^{r_i} q(z) e^{w(z)} dz`.
pub fn scaled_cumulative_from_zero(q: &GridFunction, w: &GridFunction) -> GridFunction {
    let n = q.len();
    let q = q.to_linear();
    let mut out = vec![f64::NAN; n];
    let wv = &w.values;
    out[0] = if wv[0].is_finite() { 0.0 } else { f64::NAN };
    let mut prev = 0.0;
    for i in 1..n {
        let (v, wref) = weighted_interval(&q, w, i - 1);
        if !wv[i].is_finite() {
            continue;
        }
        let carry = if wv[i - 1].is_finite() {
            prev * (wv[i - 1] - wv[i]).exp()
        } else {
            0.0
        };
        out[i] = carry + v * (wref - wv[i]).exp();
        prev = out[i];
    }
    extrapolate_ends(&mut out);
    GridFunction::from_values(q.grid(), out).expect("length matches grid")
}

/// Second-order derivative inside each panel, one-sided at panel ends.
/// Breakpoint nodes carry both one-sided derivatives.
pub fn derivative(f: &GridFunction) -> GridFunction {
    let f = f.to_linear();
    let grid = &f.grid;
    let mut vals = vec![0.0; grid.len()];
    let mut right = vec![0.0; grid.breakpoints.len()];
    for (pi, p) in grid.panels.iter().enumerate() {
        let h = p.step;
        let y = |j: usize| {
            if j == p.start && pi > 0 {
                f.right[pi - 1]
            } else {
                f.values[j]
            }
        };
        let d0 = (-3.0 * y(p.start) + 4.0 * y(p.start + 1) - y(p.start + 2)) / (2.0 * h);
        if pi > 0 {
            right[pi - 1] = d0;
        } else {
            vals[p.start] = d0;
        }
        for j in p.start + 1..p.end {
            vals[j] = (y(j + 1) - y(j - 1)) / (2.0 * h);
        }
        vals[p.end] = (3.0 * y(p.end) - 4.0 * y(p.end - 1) + y(p.end - 2)) / (2.0 * h);
    }
    GridFunction::from_values(grid, vals)
        .and_then(|g| g.with_right_limits(right))
        .expect("shape matches grid")
}

//! Green's functions of `H0 = -½ d²/dx²` on a box `[0, R]` with Dirichlet
//! walls: the one-sided Sturm kernel, the full resolvent and the reduced
//! kernel with the ground mode projected out. Closed forms are checked
//! against mode sums and against the discrete defect equations.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Sine modes `u_n(x) = c sin(k_n x)`, `k_n = (n+1)π/R`, `e_n = k_n²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxEigenbasis {
    pub width: f64,
    /// Prefactor `c`; `sqrt(2/R)` for an orthonormal basis.
    pub normalization: f64,
}

impl BoxEigenbasis {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Config(format!("box width must be positive, got {width}")));
        }
        Ok(Self {
            width,
            normalization: (2.0 / width).sqrt(),
        })
    }

    pub fn wavenumber(&self, n: usize) -> f64 {
        (n + 1) as f64 * PI / self.width
    }

    pub fn energy(&self, n: usize) -> f64 {
        let k = self.wavenumber(n);
        0.5 * k * k
    }

    pub fn mode(&self, n: usize, x: f64) -> f64 {
        self.normalization * (self.wavenumber(n) * x).sin()
    }

    fn phi(&self, x: f64) -> f64 {
        (PI * x / self.width).sin()
    }

    fn phi_hat(&self, x: f64) -> f64 {
        (PI * x / self.width).cos()
    }

    /// Dirichlet Green's function of `-½ d²/dx²` alone.
    fn static_kernel(&self, x: f64, z: f64) -> f64 {
        let (lo, hi) = if x < z { (x, z) } else { (z, x) };
        2.0 * lo * (self.width - hi) / self.width
    }
}

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    /// `(2R/π)[φ(x)φ̂(z) − φ(z)φ̂(x)]` for `x < z`, zero for `x > z`.
    Sturm,
    /// `(H0 − λ)^{-1}`.
    Resolvent { lambda: f64 },
    /// `(H0 − E0)^{-1}` restricted to the complement of the ground mode.
    Reduced,
}

impl KernelKind {
    pub fn eval(&self, basis: &BoxEigenbasis, x: f64, z: f64) -> f64 {
        match *self {
            KernelKind::Sturm => sturm_kernel(basis, x, z),
            KernelKind::Resolvent { lambda } => resolvent_kernel(basis, lambda, x, z),
            KernelKind::Reduced => reduced_kernel(basis, x, z),
        }
    }

    /// Energy subtracted in the defect equation.
    pub fn shift(&self, basis: &BoxEigenbasis) -> f64 {
        match *self {
            KernelKind::Resolvent { lambda } => lambda,
            _ => basis.energy(0),
        }
    }
}

pub fn sturm_kernel(basis: &BoxEigenbasis, x: f64, z: f64) -> f64 {
    if x > z {
        return 0.0;
    }
    let r = basis.width;
    2.0 * r / PI * (basis.phi(x) * basis.phi_hat(z) - basis.phi(z) * basis.phi_hat(x))
}

pub fn resolvent_kernel(basis: &BoxEigenbasis, lambda: f64, x: f64, z: f64) -> f64 {
    let r = basis.width;
    let (lo, hi) = if x < z { (x, z) } else { (z, x) };
    let (minus, plus, wronskian) = if lambda > 0.0 {
        let p = (2.0 * lambda).sqrt();
        ((p * lo).sin(), (p * (r - hi)).sin(), p * (p * r).sin())
    } else if lambda < 0.0 {
        let k = (-2.0 * lambda).sqrt();
        ((k * lo).sinh(), (k * (r - hi)).sinh(), k * (k * r).sinh())
    } else {
        (lo, r - hi, r)
    };
    2.0 * minus * plus / wronskian
}

pub fn reduced_kernel(basis: &BoxEigenbasis, x: f64, z: f64) -> f64 {
    let r = basis.width;
    let (px, pz) = (basis.phi(x), basis.phi(z));
    let (qx, qz) = (basis.phi_hat(x), basis.phi_hat(z));
    let step = if x < z { px * qz } else { pz * qx };
    r / (PI * PI) * px * pz - 2.0 / PI * (px * z * qz + pz * x * qx) + 2.0 * r / PI * step
}

/// Reject `λ` that sits on the box spectrum.
pub fn validate_lambda(basis: &BoxEigenbasis, lambda: f64) -> Result<()> {
    let n_near = ((2.0 * lambda.max(0.0)).sqrt() * basis.width / PI).round() as usize;
    for n in n_near.saturating_sub(1)..=n_near {
        let e = basis.energy(n);
        if (lambda - e).abs() < 1e-8 {
            return Err(Error::NearEigenvalue {
                lambda,
                eigenvalue: e,
                gap: 1e-8,
            });
        }
    }
    Ok(())
}

/// How to truncate a mode sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSum {
    /// `Σ_{n<N}` as written.
    Plain,
    /// The `λ`-independent part is summed in closed form through the static
    /// kernel, leaving terms that decay like `n^{-4}`.
    Accelerated,
}

/// Mode expansion of a kernel truncated at `modes` terms.
pub fn mode_sum(
    basis: &BoxEigenbasis,
    kind: KernelKind,
    x: f64,
    z: f64,
    modes: usize,
    method: ModeSum,
) -> Result<f64> {
    let e0 = basis.energy(0);
    let (lambda, skip_ground) = match kind {
        KernelKind::Resolvent { lambda } => {
            validate_lambda(basis, lambda)?;
            (lambda, false)
        }
        KernelKind::Reduced => (e0, true),
        KernelKind::Sturm => {
            return Err(Error::Config(
                "the Sturm kernel has no symmetric mode expansion".into(),
            ))
        }
    };
    let first = usize::from(skip_ground);
    let mut acc = 0.0;
    for n in first..modes {
        let en = basis.energy(n);
        let uu = basis.mode(n, x) * basis.mode(n, z);
        acc += match method {
            ModeSum::Plain => uu / (en - lambda),
            ModeSum::Accelerated => uu * lambda / (en * (en - lambda)),
        };
    }
    if method == ModeSum::Accelerated {
        acc += basis.static_kernel(x, z);
        if skip_ground {
            acc -= basis.mode(0, x) * basis.mode(0, z) / e0;
        }
    }
    Ok(acc)
}

/// Kernel values `K(x_i, z_j)` on a uniform grid, stored by column `j`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSamples {
    pub kind: KernelKind,
    pub nodes: Vec<f64>,
    /// Node indices `j` of the sampled columns.
    pub columns: Vec<usize>,
    values: Vec<f64>,
}

impl KernelSamples {
    pub fn column(&self, c: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.values[c * n..(c + 1) * n]
    }
}

/// Uniform nodes on `[0, R]`.
pub fn box_nodes(basis: &BoxEigenbasis, count: usize) -> Vec<f64> {
    let m = (count - 1) as f64;
    (0..count).map(|i| basis.width * i as f64 / m).collect()
}

/// Every `stride`-th node, endpoints included.
pub fn strided_columns(count: usize, stride: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..count).step_by(stride.max(1)).collect();
    if *cols.last().unwrap() != count - 1 {
        cols.push(count - 1);
    }
    cols
}

pub fn sample_kernel(
    basis: &BoxEigenbasis,
    kind: KernelKind,
    node_count: usize,
    columns: &[usize],
) -> Result<KernelSamples> {
    if node_count < 5 {
        return Err(Error::Grid("kernel sampling needs at least 5 nodes".into()));
    }
    if let KernelKind::Resolvent { lambda } = kind {
        validate_lambda(basis, lambda)?;
    }
    let nodes = box_nodes(basis, node_count);
    let mut values = Vec::with_capacity(columns.len() * node_count);
    for &j in columns {
        let z = nodes[j];
        values.extend(nodes.iter().map(|&x| kind.eval(basis, x, z)));
    }
    Ok(KernelSamples {
        kind,
        nodes,
        columns: columns.to_vec(),
        values,
    })
}

pub fn green_sturm(basis: &BoxEigenbasis, node_count: usize, columns: &[usize]) -> Result<KernelSamples> {
    sample_kernel(basis, KernelKind::Sturm, node_count, columns)
}

pub fn green_resolvent(
    basis: &BoxEigenbasis,
    lambda: f64,
    node_count: usize,
    columns: &[usize],
) -> Result<KernelSamples> {
    sample_kernel(basis, KernelKind::Resolvent { lambda }, node_count, columns)
}

pub fn green_reduced(basis: &BoxEigenbasis, node_count: usize, columns: &[usize]) -> Result<KernelSamples> {
    sample_kernel(basis, KernelKind::Reduced, node_count, columns)
}

/// Residual of the discrete defect equation for a sampled kernel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefectReport {
    pub spacing: f64,
    /// Largest `|defect - target|` away from the diagonal.
    pub max_off_diagonal: f64,
    /// Largest `|Δx · defect_jj - 1|` on the diagonal.
    pub max_diagonal_weight_error: f64,
}

/// Apply `-½ Δ² - E` along `x` and compare with `δ_ij/Δx`, minus the ground
/// projector for the reduced kernel. Boundary rows are skipped.
pub fn defect_check(samples: &KernelSamples, basis: &BoxEigenbasis) -> DefectReport {
    let n = samples.nodes.len();
    let dx = samples.nodes[1] - samples.nodes[0];
    let shift = samples.kind.shift(basis);
    let reduced = samples.kind == KernelKind::Reduced;
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for (c, &j) in samples.columns.iter().enumerate() {
        let k = samples.column(c);
        let z = samples.nodes[j];
        for i in 1..n - 1 {
            let x = samples.nodes[i];
            let defect = -0.5 * (k[i + 1] - 2.0 * k[i] + k[i - 1]) / (dx * dx) - shift * k[i];
            let projector = if reduced {
                basis.mode(0, x) * basis.mode(0, z)
            } else {
                0.0
            };
            if i == j {
                diag = diag.max(((defect + projector) * dx - 1.0).abs());
            } else {
                off = off.max((defect + projector).abs());
            }
        }
    }
    DefectReport {
        spacing: dx,
        max_off_diagonal: off,
        max_diagonal_weight_error: diag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> BoxEigenbasis {
        BoxEigenbasis::new(2.0).unwrap()
    }

    #[test]
    fn sturm_one_sided_support() {
        let b = basis();
        assert_eq!(sturm_kernel(&b, 1.5, 0.5), 0.0);
        assert!(sturm_kernel(&b, 0.5, 1.5).abs() > 0.1);
        assert_eq!(sturm_kernel(&b, 0.7, 0.7), 0.0);
    }

    #[test]
    fn resolvent_symmetric_and_vanishes_at_walls() {
        let b = basis();
        let lam = 0.5 * b.energy(0);
        for &(x, z) in &[(0.3, 1.1), (1.9, 0.2)] {
            let a = resolvent_kernel(&b, lam, x, z);
            assert!((a - resolvent_kernel(&b, lam, z, x)).abs() < 1e-14);
        }
        assert!(resolvent_kernel(&b, lam, 0.0, 0.8).abs() < 1e-14);
        assert!(resolvent_kernel(&b, lam, 2.0, 0.8).abs() < 1e-14);
    }

    #[test]
    fn resolvent_rejects_eigenvalue() {
        let b = basis();
        assert!(validate_lambda(&b, b.energy(1)).is_err());
        assert!(validate_lambda(&b, b.energy(1) + 1e-3).is_ok());
    }

    #[test]
    fn reduced_vanishes_at_walls() {
        let b = basis();
        for &z in &[0.1, 1.0, 1.7] {
            assert!(reduced_kernel(&b, 0.0, z).abs() < 1e-14);
            assert!(reduced_kernel(&b, 2.0, z).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_lambda_uses_hyperbolic_form() {
        let b = basis();
        let g = resolvent_kernel(&b, -1.0, 0.4, 1.2);
        let m = mode_sum(&b, KernelKind::Resolvent { lambda: -1.0 }, 0.4, 1.2, 400, ModeSum::Accelerated).unwrap();
        assert!((g - m).abs() < 1e-8);
    }
}


use groundstate::greens::{
    defect_check, mode_sum, sample_kernel, strided_columns, BoxEigenbasis, KernelKind, ModeSum,
};
use groundstate::hierarchy::{
    check_bounds, check_displacement_ratio, check_energy_bound, check_energy_monotone, check_ratio_monotone,
    TOLERANCE_FLOOR,
};
use groundstate::iterate::{charge_density, chi, convexity_probe, iterate_ground};
use groundstate::oracle::{fd_richardson, Boundary, RichardsonEstimate};
use groundstate::squarewell::{
    assemble_iterate_polys, exact_ground, first_iterate_closed_form, perturbative_radius, RadiusVerdict,
};
use groundstate::trial::{perturbative_energy_quartic, verify_trial};
use groundstate::{Case, RunConfig, RunReport, Side, SquareWellModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, Problem, Resolved, Settings, Tolerances};
use crate::failure::{Failure, NO_CONVERGENCE};
use crate::problem::{potential, quartic_rmax, reference_energy, setup, Setup, ORACLE_INTERVALS};
use crate::report::{emit, iteration_rows, Check, Embedded, RunOutput};

const PROBE_BUMPS: usize = 16;
const PROBE_EPS: f64 = 1e-3;
const MODES: usize = 200;

fn run_config(cfg: &Resolved) -> RunConfig {
    RunConfig { case: cfg.case.into(), n_max: cfg.nmax, tol: cfg.tol }
}

/// Ordering, conservation and variational checks on a finished run.
fn run_checks(rep: &RunReport, s: &Setup, cfg: &Resolved) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let mut checks: Vec<Check> = Vec::new();
    checks.extend(check_energy_monotone(&rep.records, rep.case).into_iter().map(Check::from));
    checks.extend(check_energy_bound(&rep.records, rep.h0).into_iter().map(Check::from));
    checks.extend(check_ratio_monotone(&rep.iterates(), rep.case).into_iter().map(Check::from));
    checks.extend(check_displacement_ratio(&rep.slopes(), rep.case).into_iter().map(Check::from));
    for st in &rep.states {
        checks.push(Check::below(format!("charge#{}", st.n), st.charge_residual, tol.charge));
        let d = &st.displacement.d;
        let scale = d.max_abs();
        let rel = if scale > 0.0 { d.min() / scale } else { 0.0 };
        checks.push(Check::new(format!("displacement-sign#{}", st.n), rel > -1e-12, rel));
        checks.push(Check::below(format!("crossing-mismatch#{}", st.n), st.displacement.mismatch, 1e-9));
    }
    if let Some(last) = rep.states.last() {
        let c = chi(&s.trial);
        let fs = rep.iterates();
        let rho = charge_density(&fs[fs.len() - 2], &s.trial.h, last.cal_e, &c);
        let worst = convexity_probe(&last.f, &c, &rho, PROBE_BUMPS, PROBE_EPS, cfg.seed);
        checks.push(Check::new("action-convexity", worst > -TOLERANCE_FLOOR, worst));
    }
    checks
}

fn finish(checks: &[Check], converged: bool) -> Result<(), Failure> {
    if let Some(bad) = checks.iter().find(|c| !c.pass) {
        let count = checks.iter().filter(|c| !c.pass).count();
        return Err(Failure::invariant(format!(
            "{count} check(s) failed, first: {} (margin {:e})",
            bad.name, bad.margin
        )));
    }
    if !converged {
        return Err(Failure { code: NO_CONVERGENCE, message: "iteration did not converge".into() });
    }
    Ok(())
}

pub fn solve(cfg: &Resolved) -> Result<(), Failure> {
    let s = setup(cfg)?;
    let cfg = &cfg.with_rmax(s.rmax);
    let rep = iterate_ground(&s.trial, &run_config(cfg))?;
    let checks = run_checks(&rep, &s, cfg);
    let doc = RunOutput {
        config: Embedded { command: "solve", settings: cfg },
        iterations: iteration_rows(&rep),
        checks,
        converged: rep.converged,
        final_e: rep.final_e,
    };
    emit(cfg.format, cfg.out.as_deref(), &doc, &doc.iterations)?;
    finish(&doc.checks, rep.converged)
}

fn trial_checks(s: &Setup, tol: &Tolerances) -> Vec<Check> {
    let Some(spec) = &s.spec else { return Vec::new() };
    let d = verify_trial(&s.trial, spec);
    vec![
        Check::below("trial-defect", d.max_weighted_defect, tol.trial_defect),
        Check::below("trial-continuity", d.max_log_phi_jump, 1e-8),
    ]
}

fn squarewell_checks(model: &SquareWellModel, rep: &RunReport, tol: &Tolerances) -> Result<Vec<Check>, Failure> {
    let mut checks = Vec::new();
    let closed = first_iterate_closed_form(model)?.cal_e1;
    if let Some(first) = rep.records.first() {
        let rel = if closed == 0.0 { first.cal_e.abs() } else { ((first.cal_e - closed) / closed).abs() };
        checks.push(Check::below("closed-form-first-shift", rel, tol.closed_form));
    }
    if rep.case == Case::A && rep.records.len() >= 2 {
        let es: Vec<f64> = rep.records.iter().map(|r| r.cal_e).collect();
        let polys = assemble_iterate_polys(model, &es[..2])?;
        let f2 = &rep.states[1].f;
        let diff = f2
            .grid()
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| (polys[1].eval(x) - f2.value(i)).abs())
            .fold(0.0, f64::max);
        checks.push(Check::below("polynomial-second-iterate", diff, tol.polynomial));
    }
    Ok(checks)
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectRow {
    pub kernel: &'static str,
    pub nodes: usize,
    pub spacing: f64,
    pub max_off_diagonal: f64,
    pub max_diagonal_weight_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSumRow {
    pub kernel: &'static str,
    pub x: f64,
    pub z: f64,
    pub modes: usize,
    pub value: f64,
    pub closed_form: f64,
    pub error: f64,
}

struct GreensSuite {
    checks: Vec<Check>,
    defects: Vec<DefectRow>,
    mode_sums: Vec<ModeSumRow>,
}

fn kernels(lambda: f64) -> [(&'static str, KernelKind); 3] {
    [("sturm", KernelKind::Sturm), ("reduced", KernelKind::Reduced), ("resolvent", KernelKind::Resolvent { lambda })]
}

fn greens_suite(width: f64, nodes: usize, lambda: f64, tol: &Tolerances) -> Result<GreensSuite, Failure> {
    let basis = BoxEigenbasis::new(width)?;
    let coarse = (nodes - 1) / 2 + 1;
    let mut checks = Vec::new();
    let mut defects = Vec::new();
    for (name, kind) in kernels(lambda) {
        let mut levels = Vec::new();
        for n in [coarse, nodes] {
            let cols = strided_columns(n, ((n - 1) / 10).max(1));
            let d = defect_check(&sample_kernel(&basis, kind, n, &cols)?, &basis);
            levels.push(d.max_off_diagonal);
            if n == nodes {
                checks.push(Check::below(
                    format!("defect-off-diagonal:{name}"),
                    d.max_off_diagonal * d.spacing,
                    tol.greens_defect,
                ));
                checks.push(Check::below(format!("defect-diagonal:{name}"), d.max_diagonal_weight_error, 1e-4));
            }
            defects.push(DefectRow {
                kernel: name,
                nodes: n,
                spacing: d.spacing,
                max_off_diagonal: d.max_off_diagonal,
                max_diagonal_weight_error: d.max_diagonal_weight_error,
            });
        }
        checks.push(Check::new(format!("defect-refinement:{name}"), levels[1] < levels[0], levels[0] - levels[1]));
    }
    let mut mode_sums = Vec::new();
    let pts = [(0.15, 0.55), (0.45, 0.45), (0.85, 0.1), (0.5, 0.75)];
    for (name, kind) in kernels(lambda).into_iter().skip(1) {
        for &(u, v) in &pts {
            let (x, z) = (u * width, v * width);
            let value = mode_sum(&basis, kind, x, z, MODES, ModeSum::Accelerated)?;
            let closed_form = kind.eval(&basis, x, z);
            let error = (value - closed_form).abs();
            checks.push(Check::below(format!("mode-sum:{name}@({x},{z})"), error, tol.mode_sum));
            mode_sums.push(ModeSumRow { kernel: name, x, z, modes: MODES, value, closed_form, error });
        }
    }
    Ok(GreensSuite { checks, defects, mode_sums })
}

/// Half the ground energy of the box keeps the resolvent well away from
/// the spectrum.
fn default_lambda(width: f64) -> Result<f64, Failure> {
    Ok(0.5 * BoxEigenbasis::new(width)?.energy(0))
}

const VERIFY_GREENS_NODES: usize = 4001;
const VERIFY_GREENS_WIDTH: f64 = 2.0;

pub fn verify(cfg: &Resolved) -> Result<(), Failure> {
    let s = setup(cfg)?;
    let cfg = &cfg.with_rmax(s.rmax);
    let tol = &cfg.tolerances;
    let rep = iterate_ground(&s.trial, &run_config(cfg))?;
    let mut checks = run_checks(&rep, &s, cfg);
    if let Some(r) = reference_energy(cfg, &s)? {
        // each side of the bound gets the benefit of the reference uncertainty
        let upper = check_bounds(&rep.records, r.energy - r.uncertainty, rep.case);
        let lower = check_bounds(&rep.records, r.energy + r.uncertainty, rep.case);
        checks.extend(upper.into_iter().filter(|c| c.name == "upper-bound").map(Check::from));
        checks.extend(lower.into_iter().filter(|c| c.name == "lower-bound").map(Check::from));
    }
    checks.extend(trial_checks(&s, tol));
    if let Some(model) = &s.model {
        checks.extend(squarewell_checks(model, &rep, tol)?);
    }
    let width = s.model.as_ref().map_or(Ok(VERIFY_GREENS_WIDTH), |m| m.width())?;
    let lambda = cfg.lambda.map_or_else(|| default_lambda(width), Ok)?;
    checks.extend(greens_suite(width, VERIFY_GREENS_NODES, lambda, tol)?.checks);
    let doc = RunOutput {
        config: Embedded { command: "verify", settings: cfg },
        iterations: iteration_rows(&rep),
        checks,
        converged: rep.converged,
        final_e: rep.final_e,
    };
    emit(cfg.format, cfg.out.as_deref(), &doc, &doc.iterations)?;
    finish(&doc.checks, rep.converged)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    /// `g²l²` for the square well, `g` for the quartic.
    pub parameter: f64,
    pub verdict: Option<RadiusVerdict>,
    pub steps: usize,
    pub converged: bool,
    #[serde(rename = "calE")]
    pub cal_e: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    #[serde(rename = "final_E")]
    pub final_e: f64,
    #[serde(rename = "reference_E")]
    pub reference_e: f64,
    pub reference_kind: &'static str,
    pub partial_sums: Vec<f64>,
}

#[derive(Serialize)]
struct CompareCsvRow {
    parameter: f64,
    verdict: String,
    steps: usize,
    converged: bool,
    #[serde(rename = "final_E")]
    final_e: f64,
    #[serde(rename = "reference_E")]
    reference_e: f64,
    reference_kind: &'static str,
    partial_sums: String,
    #[serde(rename = "calE")]
    cal_e: String,
}

fn joined(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl From<&CompareRow> for CompareCsvRow {
    fn from(r: &CompareRow) -> Self {
        Self {
            parameter: r.parameter,
            verdict: r.verdict.map(|v| format!("{v:?}").to_lowercase()).unwrap_or_default(),
            steps: r.steps,
            converged: r.converged,
            final_e: r.final_e,
            reference_e: r.reference_e,
            reference_kind: r.reference_kind,
            partial_sums: joined(&r.partial_sums),
            cal_e: joined(&r.cal_e),
        }
    }
}

fn row_from_run(parameter: f64, rep: &RunReport) -> CompareRow {
    CompareRow {
        parameter,
        verdict: None,
        steps: rep.records.len(),
        converged: rep.converged,
        cal_e: rep.records.iter().map(|r| r.cal_e).collect(),
        e: rep.records.iter().map(|r| r.e).collect(),
        final_e: rep.final_e,
        reference_e: f64::NAN,
        reference_kind: "",
        partial_sums: Vec::new(),
    }
}

fn squarewell_row(cfg: &Resolved, g2l2: f64, l: f64, big_l: f64) -> Result<CompareRow, Failure> {
    let g2 = g2l2 / (l * l);
    let (_, verdict) = perturbative_radius(&SquareWellModel::new(g2, l, None)?)?;
    let model = SquareWellModel::new(g2, l, Some(big_l))?;
    let trial = model.trial(&model.grid(cfg.nodes)?)?;
    let rep = iterate_ground(&trial, &run_config(cfg))?;
    let mut row = row_from_run(g2l2, &rep);
    row.verdict = Some(verdict);
    row.reference_e = exact_ground(&model)?.energy;
    row.reference_kind = "exact";
    Ok(row)
}

fn quartic_row(cfg: &Resolved, g: f64, a: f64) -> Result<CompareRow, Failure> {
    let rmax = cfg.rmax.map_or_else(|| quartic_rmax(g, a), Ok)?;
    let sub = Resolved { problem: Problem::Quartic { g, a }, rmax: Some(rmax), ..cfg.clone() };
    let s = setup(&sub)?;
    let rep = iterate_ground(&s.trial, &run_config(cfg))?;
    let mut row = row_from_run(g, &rep);
    let r = reference_energy(&sub, &s)?.expect("quartic has an oracle");
    row.reference_e = r.energy;
    row.reference_kind = r.kind;
    row.partial_sums = (1..=4).map(|k| perturbative_energy_quartic(g, a, k)).collect::<Result<_, _>>()?;
    Ok(row)
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    config: Embedded<'a, Resolved>,
    rows: Vec<CompareRow>,
}

pub fn compare(cfg: &Resolved) -> Result<(), Failure> {
    let default = match cfg.problem {
        Problem::Squarewell { g2, l, .. } => g2 * l * l,
        Problem::Quartic { g, .. } => g,
        _ => return Err(Failure::config("compare supports the square well and the quartic")),
    };
    let sweep = cfg.sweep.clone().unwrap_or_else(|| vec![default]);
    if sweep.is_empty() {
        return Err(Failure::config("empty sweep list"));
    }
    let rows: Vec<CompareRow> = sweep
        .par_iter()
        .map(|&x| match cfg.problem {
            Problem::Squarewell { l, big_l, .. } => {
                if x < 0.0 {
                    return Err(Failure::config(format!("sweep value g²l² = {x} must be non-negative")));
                }
                squarewell_row(cfg, x, l, big_l)
            }
            Problem::Quartic { a, .. } => {
                if !(x > 0.0) {
                    return Err(Failure::config(format!("sweep value g = {x} must be positive")));
                }
                quartic_row(cfg, x, a)
            }
            _ => unreachable!(),
        })
        .collect::<Result<_, _>>()?;
    let csv_rows: Vec<CompareCsvRow> = rows.iter().map(CompareCsvRow::from).collect();
    let all_converged = rows.iter().all(|r| r.converged);
    let doc = CompareOutput { config: Embedded { command: "compare", settings: cfg }, rows };
    emit(cfg.format, cfg.out.as_deref(), &doc, &csv_rows)?;
    finish(&[], all_converged)
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    config: Embedded<'a, Resolved>,
    rmax: f64,
    intervals: usize,
    oracle: RichardsonEstimate,
    #[serde(rename = "exact_E")]
    exact_e: Option<f64>,
}

#[derive(Serialize)]
struct OracleCsvRow {
    level: String,
    intervals: Option<usize>,
    energy: f64,
}

pub fn oracle(cfg: &Resolved) -> Result<(), Failure> {
    let pot = potential(&cfg.problem).ok_or_else(|| Failure::config("the tabulated problem has no potential"))?;
    let s = setup(&Resolved { inject_corruption: false, ..cfg.clone() })?;
    let cfg = &cfg.with_rmax(s.rmax);
    let bc = if cfg.dim == 1 { Boundary::Neumann } else { Boundary::Dirichlet };
    let intervals = if cfg.nodes > 1 { cfg.nodes - 1 } else { ORACLE_INTERVALS };
    let est = fd_richardson(|x| pot.eval(x, Side::Left), cfg.dim, s.rmax, intervals, bc)?;
    let exact_e = match cfg.problem {
        Problem::Quartic { .. } => None,
        _ => reference_energy(cfg, &s)?.map(|r| r.energy),
    };
    let mut rows: Vec<OracleCsvRow> = est
        .energies
        .iter()
        .enumerate()
        .map(|(k, &energy)| OracleCsvRow { level: k.to_string(), intervals: Some(intervals << k), energy })
        .collect();
    rows.push(OracleCsvRow { level: "extrapolated".into(), intervals: None, energy: est.extrapolated });
    let doc = OracleOutput {
        config: Embedded { command: "oracle", settings: cfg },
        rmax: s.rmax,
        intervals,
        oracle: est,
        exact_e,
    };
    emit(cfg.format, cfg.out.as_deref(), &doc, &rows)
}

#[derive(Serialize)]
struct GreensConfig {
    width: f64,
    nodes: usize,
    lambda: f64,
    modes: usize,
    format: Format,
    tolerances: Tolerances,
}

#[derive(Serialize)]
struct GreensOutput<'a> {
    config: Embedded<'a, GreensConfig>,
    checks: Vec<Check>,
    defects: Vec<DefectRow>,
    mode_sums: Vec<ModeSumRow>,
}

pub fn greens(settings: &Settings) -> Result<(), Failure> {
    let width = settings.rmax.unwrap_or(VERIFY_GREENS_WIDTH);
    if !(width > 0.0 && width.is_finite()) {
        return Err(Failure::config(format!("box width must be positive, got {width}")));
    }
    let nodes = settings.nodes.unwrap_or(VERIFY_GREENS_NODES);
    if nodes < 41 {
        return Err(Failure::config("greens needs at least 41 nodes"));
    }
    let lambda = settings.lambda.map_or_else(|| default_lambda(width), Ok)?;
    let cfg = GreensConfig {
        width,
        nodes,
        lambda,
        modes: MODES,
        format: settings.format.unwrap_or(Format::Json),
        tolerances: Tolerances::default(),
    };
    let suite = greens_suite(width, nodes, lambda, &cfg.tolerances)?;
    let doc = GreensOutput {
        config: Embedded { command: "greens", settings: &cfg },
        checks: suite.checks,
        defects: suite.defects,
        mode_sums: suite.mode_sums,
    };
    emit(cfg.format, settings.out.as_deref(), &doc, &doc.checks)?;
    finish(&doc.checks, true)
}

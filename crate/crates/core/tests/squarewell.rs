use std::f64::consts::PI;

use groundstate::iterate::{chi, energy_step};
use groundstate::squarewell::{
    assemble_iterate_polys, classify, convergence_radius, critical_depth, exact_ground, first_iterate_closed_form,
    iterate_squarewell, perturbative_radius, poly_family_R, r_coefficients, r_recursion_defect,
    singularities_within, singularity_locator, Branch, RadiusVerdict, SingularityBranch, SquareWellModel,
};
use groundstate::{Case, GridFunction, RunConfig};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn model(g2: f64) -> SquareWellModel {
    SquareWellModel::new(g2, 1.0, Some(1.0)).unwrap()
}

#[test]
fn box_geometry() {
    let m = SquareWellModel::new(2.0, 0.7, Some(1.8)).unwrap();
    assert!((m.p().unwrap() * m.width().unwrap() - PI / 2.0).abs() < 1e-15);
    let grid = m.grid(501).unwrap();
    let t = m.trial(&grid).unwrap();
    assert_eq!(t.h0, 1.0);
    assert_eq!(*t.h.values().last().unwrap(), 0.0);
    assert_eq!(*t.phi.values().last().unwrap(), f64::NEG_INFINITY);
    assert!(SquareWellModel::new(-1.0, 1.0, None).is_err());
    assert!(SquareWellModel::new(1.0, 0.0, None).is_err());
}

#[test]
fn critical_depth_for_unit_widths() {
    let q0 = critical_depth(1.0, 1.0).unwrap();
    assert!((q0 - 0.86033).abs() < 1e-5);
    assert!((q0 * q0 - 0.74017).abs() < 1e-5);
    let at = exact_ground(&model(q0 * q0)).unwrap();
    assert_eq!(at.branch, Branch::Zero);
    assert_eq!(at.energy, 0.0);
}

#[test]
fn exact_ground_is_continuous_at_critical_depth() {
    let g0sq = critical_depth(1.0, 1.0).unwrap().powi(2);
    let below = exact_ground(&model(g0sq - 1e-6)).unwrap();
    let above = exact_ground(&model(g0sq + 1e-6)).unwrap();
    assert_eq!(below.branch, Branch::Positive);
    assert_eq!(above.branch, Branch::Negative);
    assert!(below.energy.abs() < 1e-4 && above.energy.abs() < 1e-4);
}

#[test]
fn exact_ground_branches_satisfy_their_equations() {
    let m = model(0.5);
    let e = exact_ground(&m).unwrap();
    assert!((e.q * (e.q).tan() - e.outer / (e.outer).tan()).abs() < 1e-10);
    assert!((e.energy - 0.5 * e.outer * e.outer).abs() < 1e-15);

    let m = model(4.0);
    let e = exact_ground(&m).unwrap();
    assert!((e.q * (e.q).tan() - e.outer / (e.outer).tanh()).abs() < 1e-10);

    let inf = SquareWellModel::new(4.0, 1.0, None).unwrap();
    let e = exact_ground(&inf).unwrap();
    assert!((e.q - 1.0299).abs() < 1e-4);
    assert!((e.energy + 1.469_687_465_89).abs() < 1e-10, "{}", e.energy);
    let shallow = exact_ground(&SquareWellModel::new(0.01, 1.0, None).unwrap()).unwrap();
    assert!(shallow.energy < 0.0);
}

#[test]
fn first_shift_closed_form() {
    let m = model(1.0);
    let fc = first_iterate_closed_form(&m).unwrap();
    assert!((fc.cal_e1 - 0.25 * (1.0 + 2.0 / PI)).abs() < 1e-15);
    let doubled = first_iterate_closed_form(&model(2.0)).unwrap();
    assert!((doubled.cal_e1 - 2.0 * fc.cal_e1).abs() < 1e-15);
    assert!((fc.f1(1.0 - 1e-12) - fc.f1(1.0 + 1e-12)).abs() < 1e-10);
    assert!((fc.f1(2.0) - 1.0).abs() < 1e-15);
    assert!(fc.d1(0.0).abs() < 1e-15 && fc.d1(2.0).abs() < 1e-15);
}

#[test]
fn r_family_examples() {
    let r2 = r_coefficients(2);
    let half = BigRational::new(1.into(), 2.into());
    assert_eq!(r2, vec![BigRational::zero(), BigRational::from_integer(1.into()), half]);
    let q = Complex64::new(0.3, -0.7);
    let r1 = poly_family_R(1, q);
    assert_eq!(r1.len(), 2);
    assert!(r1[0].norm() == 0.0 && (r1[1] - q).norm() < 1e-15);
    assert_eq!(poly_family_R(0, q), vec![Complex64::new(1.0, 0.0)]);
}

#[test]
fn r_recursion_is_exact() {
    for n in 1..=6 {
        let defect = r_recursion_defect(&r_coefficients(n), &r_coefficients(n - 1));
        assert!(defect.iter().all(|c| c.is_zero()), "n = {n}");
        assert!(r_coefficients(n)[0].is_zero());
    }
}

#[test]
fn complex_family_satisfies_shifted_operator() {
    // (d² + 2ip d) R⁺_n = −R⁺_{n-1} with q = i/(2p)
    let p = 0.8;
    let q = Complex64::new(0.0, 1.0 / (2.0 * p));
    for n in 1..=6 {
        let r = poly_family_R(n, q);
        let prev = poly_family_R(n - 1, q);
        for k in 0..r.len() {
            let d2 = r.get(k + 2).map_or(Complex64::zero(), |c| c * ((k + 2) * (k + 1)) as f64);
            let d1 = r.get(k + 1).map_or(Complex64::zero(), |c| c * (k + 1) as f64);
            let lhs = d2 + Complex64::new(0.0, 2.0 * p) * d1;
            let rhs = -prev.get(k).copied().unwrap_or(Complex64::zero());
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()), "n = {n}, k = {k}");
        }
    }
}

#[test]
fn polynomial_iterates_match_quadrature() {
    let m = model(4.0);
    let rep = iterate_squarewell(&m, 4001, &RunConfig { case: Case::A, n_max: 4, tol: 0.0 }).unwrap();
    let es: Vec<f64> = rep.records.iter().map(|r| r.cal_e).collect();
    let polys = assemble_iterate_polys(&m, &es).unwrap();
    let fs = rep.iterates();
    let grid = fs[1].grid().clone();
    for poly in &polys {
        assert!(poly.imaginary_residual < 1e-13);
        assert!(poly.inner.p.len() <= poly.n + 1 && poly.outer.q.len() <= poly.n + 1);
        let diff = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| (poly.eval(x) - fs[poly.n].value(i)).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-7, "n = {}: {diff:e}", poly.n);
    }
    // the polynomial form predicts the next shift
    let next = polys[0].next_energy(4.0).unwrap();
    assert!((next - es[1]).abs() < 1e-9);
}

#[test]
fn first_polynomial_iterate_structure() {
    let m = model(1.0);
    let p = m.p().unwrap();
    let e1 = first_iterate_closed_form(&m).unwrap().cal_e1;
    let polys = assemble_iterate_polys(&m, &[e1]).unwrap();
    let f1 = &polys[0];
    assert!(f1.inner.p[1..].iter().all(|c| c.abs() < 1e-14));
    assert!(f1.outer.p[1..].iter().all(|c| c.abs() < 1e-14));
    assert!((f1.outer.q[1] - e1 / p).abs() < 1e-13);
    assert!((f1.inner.q[1] + (0.5 - e1) / p).abs() < 1e-13);
    assert_eq!(f1.inner.delta, 1.0 - 2.0 * e1);
    assert_eq!(f1.outer.delta, -2.0 * e1);
    assert!(f1.slope_mismatch < 1e-12);
    let fc = first_iterate_closed_form(&m).unwrap();
    for &x in &[0.0, 0.4, 1.0, 1.3, 1.99] {
        assert!((f1.eval(x) - fc.f1(x)).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn converges_for_moderate_and_strong_wells() {
    for g2 in [1.0, 4.0] {
        let m = model(g2);
        let exact = exact_ground(&m).unwrap().energy;
        let rep = iterate_squarewell(&m, 4001, &RunConfig { case: Case::A, n_max: 50, tol: 1e-12 }).unwrap();
        assert!(rep.converged);
        assert!(rep.records.windows(2).all(|w| w[1].cal_e > w[0].cal_e));
        assert!(((rep.final_e - exact) / exact).abs() < 1e-6, "g2 = {g2}");
    }
}

#[test]
fn empty_well_does_not_move() {
    let rep = iterate_squarewell(&model(0.0), 401, &RunConfig::default()).unwrap();
    assert!(rep.records.iter().all(|r| r.cal_e == 0.0));
    assert!(rep.converged);
}

#[test]
fn singularities() {
    let im = singularity_locator(SingularityBranch::Imaginary).unwrap();
    assert!((im.z - 1.19968).abs() < 1e-5);
    assert!((im.g2l2 + 0.4392).abs() < 1e-4);
    assert!(im.residual < 1e-12);
    let re = singularity_locator(SingularityBranch::Real).unwrap();
    assert!((re.z - 2.798).abs() < 1e-3);
    assert!((re.g2l2 - 8.83).abs() < 1e-2);
    assert!(re.residual < 1e-12);

    let all = singularities_within(10.0).unwrap();
    assert_eq!(all[0].g2l2, im.g2l2);
    assert!(all.len() >= 4);
    assert!(all.iter().all(|s| s.residual < 1e-10));
}

#[test]
fn radius_classification() {
    let r = convergence_radius().unwrap();
    assert!((r - 0.4392).abs() < 1e-4);
    let want = [
        (0.1, RadiusVerdict::Inside),
        (0.44, RadiusVerdict::Boundary),
        (1.0, RadiusVerdict::Outside),
        (4.0, RadiusVerdict::Outside),
    ];
    for (x, v) in want {
        assert_eq!(classify(x, r), v);
    }
    let inf = SquareWellModel::new(4.0, 1.0, None).unwrap();
    assert_eq!(perturbative_radius(&inf).unwrap().1, RadiusVerdict::Outside);
    assert!(perturbative_radius(&model(4.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn first_shift_quadrature_matches_closed_form(big_l in 0.5..3.0f64, l in 0.5..3.0f64, g2 in 0.25..4.0f64) {
        let m = SquareWellModel::new(g2, l, Some(big_l)).unwrap();
        let grid = m.grid(2001).unwrap();
        let t = m.trial(&grid).unwrap();
        let e = energy_step(&GridFunction::constant(&grid, 1.0), &t.h, &chi(&t)).unwrap();
        let closed = first_iterate_closed_form(&m).unwrap().cal_e1;
        prop_assert!(((e - closed) / closed).abs() < 1e-8);
    }
}

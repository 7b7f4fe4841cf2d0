use std::f64::consts::PI;

use groundstate::grid::{cumulative_from_tail, cumulative_from_zero, integrate};
use groundstate::{build_grid, GridFunction, Side};
use proptest::prelude::*;

#[test]
fn breakpoint_becomes_node() {
    let g = build_grid(1, 10.0, 1001, &[1.0]).unwrap();
    assert!(g.nodes().contains(&1.0));
    assert_eq!(g.nodes()[0], 0.0);
    assert_eq!(g.r_max(), 10.0);
}

#[test]
fn uniform_grid_without_breakpoints() {
    let g = build_grid(3, 20.0, 2001, &[]).unwrap();
    let x = g.nodes();
    assert_eq!(x.len(), 2001);
    assert_eq!(x[0], 0.0);
    assert_eq!(*x.last().unwrap(), 20.0);
    let (_, spread) = g.spacing_spread();
    assert!(spread < 1e-12);
}

#[test]
fn rejects_bad_input() {
    assert!(build_grid(1, -1.0, 101, &[]).is_err());
    assert!(build_grid(1, 1.0, 10, &[]).is_err());
    assert!(build_grid(1, 1.0, 101, &[1.5]).is_err());
    assert!(build_grid(0, 1.0, 101, &[]).is_err());
}

#[test]
fn standard_integrals() {
    let g = build_grid(1, 2.0, 101, &[]).unwrap();
    assert!((integrate(&GridFunction::constant(&g, 1.0)) - 2.0).abs() < 1e-12);

    let g = build_grid(1, 10.0, 2001, &[]).unwrap();
    let gauss = GridFunction::from_fn(&g, |r| (-r * r).exp());
    assert!((integrate(&gauss) - PI.sqrt() / 2.0).abs() < 1e-10);

    let g = build_grid(1, 40.0, 8001, &[]).unwrap();
    let gamma = GridFunction::from_fn(&g, |r| r * r * (-2.0 * r).exp());
    assert!((integrate(&gamma) - 0.25).abs() < 1e-10);
}

#[test]
fn cumulative_examples() {
    let g = build_grid(1, 2.0, 101, &[]).unwrap();
    let one = GridFunction::constant(&g, 1.0);
    let tail = cumulative_from_tail(&one);
    assert!((tail.values()[0] - 2.0).abs() < 1e-12);
    assert_eq!(*tail.values().last().unwrap(), 0.0);
    let head = cumulative_from_zero(&one);
    for (&r, &v) in g.nodes().iter().zip(head.values()) {
        assert!((v - r).abs() < 1e-12);
    }
    let lin = cumulative_from_zero(&GridFunction::from_fn(&g, |r| r));
    assert!((lin.values().last().unwrap() - 2.0).abs() < 1e-12);
    let zero = cumulative_from_zero(&GridFunction::constant(&g, 0.0));
    assert!(zero.values().iter().all(|&v| v == 0.0));

    let g = build_grid(1, 30.0, 6001, &[]).unwrap();
    let t = cumulative_from_tail(&GridFunction::from_fn(&g, |r| (-r).exp()));
    for (&r, &v) in g.nodes().iter().zip(t.values()) {
        let want = (-r).exp() - (-30.0f64).exp();
        assert!((v - want).abs() < 1e-10, "r = {r}");
    }
}

#[test]
fn jump_is_integrated_by_side() {
    let g = build_grid(1, 3.0, 301, &[1.0]).unwrap();
    let step = GridFunction::from_sided_fn(&g, |r, s| {
        if r < 1.0 || (r == 1.0 && s == Side::Left) {
            2.0
        } else {
            0.5
        }
    });
    assert!((integrate(&step) - 3.0).abs() < 1e-13);
}

#[test]
fn refinement_order() {
    let f = |r: f64| r.sin() * (-r).exp() + r.cos();
    let exact = {
        let b = 5.0f64;
        // ∫ e^{-r} sin r = ½(1 − e^{-b}(sin b + cos b))
        0.5 * (1.0 - (-b).exp() * (b.sin() + b.cos())) + b.sin()
    };
    let err = |n: usize| {
        let g = build_grid(1, 5.0, n, &[2.0]).unwrap();
        (integrate(&GridFunction::from_fn(&g, f)) - exact).abs()
    };
    let coarse = err(41);
    let fine = err(81);
    assert!(coarse / fine >= 8.0, "{coarse:e} / {fine:e}");
}

fn test_fn(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| a * (b * r).sin() + c * (-r * r).exp() + a * c * r
}

proptest! {
    #[test]
    fn cumulatives_add_up(a in -3.0..3.0f64, b in 0.1..4.0f64, c in -3.0..3.0f64, bp in 0.2..2.8f64) {
        let g = build_grid(1, 3.0, 201, &[bp]).unwrap();
        let f = GridFunction::from_fn(&g, test_fn(a, b, c));
        let total = integrate(&f);
        let head = cumulative_from_zero(&f);
        let tail = cumulative_from_tail(&f);
        let tol = 1e-12 * (1.0 + total.abs());
        for (h, t) in head.values().iter().zip(tail.values()) {
            prop_assert!((h + t - total).abs() < tol);
        }
    }

    #[test]
    fn integrate_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, k in 0.1..4.0f64) {
        let g = build_grid(1, 4.0, 161, &[1.0]).unwrap();
        let f = GridFunction::from_fn(&g, |r| (k * r).cos());
        let h = GridFunction::from_fn(&g, |r| r * (-k * r).exp());
        let comb = f.zip_map(&h, |x, y| a * x + b * y);
        let (i_f, i_h) = (integrate(&f), integrate(&h));
        let scale = 1.0 + (a * i_f).abs() + (b * i_h).abs();
        prop_assert!((integrate(&comb) - a * i_f - b * i_h).abs() < 1e-12 * scale);
    }

    #[test]
    fn grid_invariants(n in 17usize..3000, r_max in 0.5..50.0f64, frac in 0.05..0.95f64, dim in 1usize..4) {
        let bp = frac * r_max;
        let g = build_grid(dim, r_max, n, &[bp]).unwrap();
        let x = g.nodes();
        prop_assert_eq!(x[0], 0.0);
        prop_assert_eq!(*x.last().unwrap(), r_max);
        prop_assert!(x.len() >= 17);
        prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(x.contains(&bp));
        for &i in g.breakpoints() {
            prop_assert!(x[i] > 0.0 && x[i] < r_max);
        }
    }
}

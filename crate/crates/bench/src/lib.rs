//! Shared fixtures for the benchmarks.

use groundstate::trial::quartic_trial;
use groundstate::{build_grid, SquareWellModel, TrialFunction};

/// Quartic double well with `g = 4`, `a = 1` on `[0, 3.2]`.
pub fn quartic(nodes: usize) -> TrialFunction {
    let grid = build_grid(1, 3.2, nodes, &[1.0]).expect("valid grid");
    quartic_trial(4.0, 1.0, &grid).expect("valid trial")
}

/// Square well with `L = l = 1`.
pub fn square_well(g2: f64) -> SquareWellModel {
    SquareWellModel::new(g2, 1.0, Some(1.0)).expect("valid model")
}

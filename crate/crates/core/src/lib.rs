pub mod error;
pub mod greens;
pub mod grid;
pub mod hierarchy;
pub mod iterate;
pub mod oracle;
pub mod squarewell;
pub mod trial;

pub use error::{Error, Result};
pub use grid::{build_grid, GridFunction, RadialGrid, Side};
pub use hierarchy::{CheckRecord, HierarchyVerdict};
pub use iterate::{Case, IterationRecord, RunConfig, RunReport};
pub use squarewell::SquareWellModel;
pub use trial::{Potential, ProblemSpec, TrialFunction};

//! Brute-force references: Gaussian tail, exhaustive placement and allocation
//! search, and an independent constraint checker.

mod check;
mod enumerate;
mod grid;
mod qfunc;

pub use check::{check_assignment, Violation};
pub use enumerate::{enumerate_assignments, ENUMERATION_LIMIT};
pub use grid::{grid_search_placement, GridSpec, GRID_LIMIT};
pub use qfunc::{q_function, q_inverse};

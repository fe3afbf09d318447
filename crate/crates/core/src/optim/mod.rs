//! Dense linear programming and minimum-norm projection onto polyhedra.
//!
//! Both solvers target desk-scale problems (a few thousand variables at most)
//! and favour determinism: identical inputs always give identical outputs.

mod projection;
mod simplex;

pub use projection::{min_norm_point, Polyhedron};
pub use simplex::{solve_lp, LinearProgram, Relation, Sense, SolveReport, SolveStatus};

/// Numerical tolerances shared by the LP and projection solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest magnitude accepted as a pivot element.
    pub pivot: f64,
    /// Primal feasibility tolerance.
    pub feasibility: f64,
    /// Reduced-cost optimality tolerance.
    pub optimality: f64,
    /// Largest condition number accepted for an active-set system.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot: 1e-10,
            feasibility: 1e-9,
            optimality: 1e-10,
            max_condition: 1e12,
        }
    }
}

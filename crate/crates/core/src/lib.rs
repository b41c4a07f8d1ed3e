//! Optimal allocation of a unit budget across projects with diminishing
//! returns `a_i x_i / (1 + x_i)`.
//!
//! The optimum has a closed form: sort the coefficients, compute the ratios
//! `e_i = sqrt(a_i / a_max)`, find the active-set size with a single forward
//! pass and read the allocation off directly. The [`oracles`] module holds
//! independent numerical methods used to certify that answer, and [`bench`]
//! measures how it scales.
//!
//! ```
//! use equimarginal::{solve, ProblemInstance};
//!
//! let p = ProblemInstance::new(vec![0.8, 0.25]).unwrap();
//! let r = solve(&p).unwrap();
//! assert_eq!(r.active_count, 2);
//! assert!((r.objective - 0.401858).abs() < 1e-6);
//! ```

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
mod error;
pub mod model;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    evaluate_min_form, evaluate_objective, evaluate_objective_raw, kkt_check, marginal_utilities,
    marginal_utilities_raw, simulate_mixing,
    Allocation, KktReport, KktTolerances, MixingOutcome, ProblemInstance,
};
pub use solver::{
    active_set_size, closed_form_allocation, normalized_ratios, solve, three_cup_solution,
    two_cup_solution, RatioVector, SolveResult,
};

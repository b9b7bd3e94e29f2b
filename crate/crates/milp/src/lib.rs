//! Self-contained linear and mixed-integer programming.
//!
//! The LP engine is a bounded revised primal simplex over a dense explicit
//! basis inverse, refactored periodically. Mixed-integer models are solved by
//! best-bound branch-and-bound with most-fractional branching, warm-starting
//! every child node from its parent's basis.
//!
//! Everything is generic over [`Scalar`]; [`LinearModel64`] and friends fix
//! the scalar to `f64`, which is what the rest of the workspace uses.

mod branch;
mod lpformat;
mod model;
mod scalar;
mod simplex;

pub use branch::{solve_milp, solve_milp_warm, Limits};
pub use lpformat::{read_lp, write_lp, LpFormatError};
pub use model::{Column, LinearModel, ModelError, ObjectiveSense, Row, Sense};
pub use scalar::Scalar;
pub use simplex::{solve_lp, solve_lp_warm, Basis, SolveResult, SolveStatus, Tolerances, VarStatus};

pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type SolveResult64 = SolveResult<f64>;
pub type Tolerances64 = Tolerances<f64>;

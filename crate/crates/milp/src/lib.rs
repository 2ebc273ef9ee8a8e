//! Linear and mixed-integer programming for the recovery models.

mod config;
mod dense;
mod interior;
mod model;
pub mod mps;
mod result;
mod solve;
mod sparse;

pub use config::{Engine, SolverConfig, DENSE_AUTO_LIMIT};
pub use model::{Constraint, LinearModel, ModelError, Sense, VarId, VarKind, Variable};
pub use result::{SolveResult, SolveStats, Status};
pub use solve::{solve_lp, solve_milp};

//! Receding-horizon trajectory optimization through a learned (or analytic)
//! signed-distance map: cost evaluation, dynamics and collision
//! linearization, exact-penalty QP assembly, an embedded operator-splitting
//! QP solver, the sequential-convex loop, and the MPC executive.
//!
//! The planner works in the plane: states are `(x, y, heading)` and controls
//! `(v, omega)`. Three-dimensional maps participate through
//! [`PlanarSlice`], which pins the query height.

mod admm;
mod field;
mod linearize;
mod mpc;
mod ocp;
mod qp;
mod scp;

pub use admm::{solve_qp, QpSolution, QpStatus};
pub use field::{body_collision_distance, linearize_collision, CollisionLin, PlanarSlice};
pub use linearize::linearize_dynamics;
pub use mpc::{mpc_step, MpcConfig, MpcOutcome, WarmStart};
pub use ocp::{eval_cost, rollout, unicycle_step, CostBreakdown, OcpSpec, TrajectorySolution};
pub use qp::{assemble_qp, QpLayout, QpProblem};
pub use scp::{scp_solve, ScpConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("quadratic cost matrix is not positive semidefinite (min eigenvalue {0})")]
    NonConvex(f64),
    #[error("dimension mismatch in QP assembly: {0}")]
    Dimension(String),
    #[error("planner requires a non-empty map")]
    EmptyMap,
}

//! Joint constraints, the damped Newton solve, mobility and overlap checks.

mod dof;
mod newton;
mod report;
mod sat;
mod system;

pub use dof::{dof_analysis, numeric_rank, RANK_TOLERANCE};
pub use newton::{initial_state, solve, solve_with, transform_poses, SolveOutcome, SolverConfig};
pub use report::{solve_report, solve_report_json};
pub use sat::{check_intersections, penetration, Obb, Penetration, CONTACT_TOLERANCE};
pub use system::{
    build_constraints, jacobian, pin_joint, residual, revolute_angle, ConstraintSystem, Equation,
    EquationKind, PoseMap, FD_STEP, STATE_PER_LINK,
};

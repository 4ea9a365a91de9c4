//! Pointwise optimization for the controlled folding dynamics: the dense
//! box-constrained QP, its strict-feasibility LP, and a sampled Lipschitz
//! probe for torque fields.

mod box_qp;
mod lipschitz;
mod lp;

pub use box_qp::{solve_box_qp, BoundState, BoxQP, QPSolution, SYMMETRY_TOLERANCE};
pub use lipschitz::{lipschitz_probe, LipschitzEstimate};
pub use lp::{lp_feasibility_omega, maximize, stacked_box_constraints, FeasibilityCertificate, LpSolution};

//! Folding loops: the conventional KCM iteration, the QP-steered variant,
//! and a discretization audit of the iteration against its continuous
//! dynamics.

mod audit;
mod config;
mod control;
mod simulate;

pub use audit::{audit_discretization, AuditConfig, AuditRun, DiscretizationAudit};
pub use config::{
    initial_conformation, BoundRule, ControllerMode, InitialRule, SimulationConfig, DEFAULT_ITERATIONS,
    DEFAULT_MEAN_DEG, DEFAULT_STD_DEG, DEFAULT_STEP, DEFAULT_THRESHOLD,
};
pub use control::{
    entropy_bounds, evaluate, kcm_control_input, kcm_step, ods_linear_term, ods_weight, reference_direction,
    reference_vector_field, torque_field, Evaluation, BOUND_CONVERSION,
};
pub use simulate::{
    simulate, simulate_from, Simulation, Termination, TrajectoryRecord, STALL_DECREASE, STALL_WINDOW,
};

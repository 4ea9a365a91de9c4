use std::time::Instant;

use nalgebra::DVector;

use super::config::{initial_conformation, ControllerMode, SimulationConfig};
use super::control::{evaluate, kcm_control_input, kcm_step, ods_linear_term, Evaluation};
use crate::chain::{ChainTopology, Conformation};
use crate::energetics::{EnergyBreakdown, ForceFieldParams};
use crate::error::{KcmError, Result};
use crate::qp::{solve_box_qp, BoxQP};

/// Steps in the stall window.
pub const STALL_WINDOW: usize = 50;
/// Relative decrease of |τ|∞ expected over one window.
pub const STALL_DECREASE: f64 = 1e-6;

/// State of the loop at one step, before the update is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub theta: DVector<f64>,
    pub torques: DVector<f64>,
    pub torque_max: f64,
    pub energy: EnergyBreakdown,
    /// Control added to the torques; the KCM control in conventional mode.
    pub control: DVector<f64>,
    pub control_max: f64,
    /// Joints whose bound is active (ods-qp mode only).
    pub active_bounds: usize,
    pub step_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    BudgetExhausted,
    /// |τ|∞ stopped decreasing while the bounds bound on most joints.
    Stalled,
    /// Atoms collided at `step`; that step has no record.
    Singular { step: usize, detail: String },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::BudgetExhausted => "budget-exhausted",
            Termination::Stalled => "stalled",
            Termination::Singular { .. } => "singular",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<TrajectoryRecord>,
    pub termination: Termination,
    /// Per-joint bounds in ods-qp mode.
    pub bounds: Option<DVector<f64>>,
    pub initial: Conformation,
    /// Conformation after the last applied step.
    pub last: Conformation,
    pub steps_taken: usize,
    pub wall_seconds: f64,
}

impl Simulation {
    pub fn first(&self) -> Option<&TrajectoryRecord> {
        self.records.first()
    }

    pub fn last_record(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    /// Largest |u_i|/c_i over all records, in ods-qp mode.
    pub fn max_bound_utilization(&self) -> Option<f64> {
        let c = self.bounds.as_ref()?;
        Some(
            self.records
                .iter()
                .flat_map(|r| r.control.iter().zip(c.iter()).map(|(u, c)| u.abs() / c))
                .fold(0.0, f64::max),
        )
    }
}

/// Runs the folding loop from the configured initial conformation.
pub fn simulate(
    topology: &ChainTopology,
    params: &ForceFieldParams,
    config: &SimulationConfig,
) -> Result<Simulation> {
    config.validate()?;
    let initial = initial_conformation(&config.init, topology.n_joints(), config.seed)?;
    simulate_from(topology, params, config, initial)
}

struct Control {
    u: DVector<f64>,
    velocity: DVector<f64>,
    active: usize,
}

fn control(
    mode: &ControllerMode,
    torques: &DVector<f64>,
    qp_data: Option<&(nalgebra::DMatrix<f64>, DVector<f64>)>,
) -> Result<Control> {
    match (mode, qp_data) {
        (ControllerMode::OdsQp(_), Some((q, c))) => {
            let g = ods_linear_term(torques, q)?;
            let sol = solve_box_qp(&BoxQP::new(q.clone(), g, c.clone())?)?;
            let velocity = torques + &sol.u;
            let active = sol.n_active();
            Ok(Control {
                u: sol.u,
                velocity,
                active,
            })
        }
        _ => {
            let u = kcm_control_input(torques)?;
            let velocity = torques + &u;
            Ok(Control { u, velocity, active: 0 })
        }
    }
}

/// Runs the folding loop from an explicit starting conformation.
pub fn simulate_from(
    topology: &ChainTopology,
    params: &ForceFieldParams,
    config: &SimulationConfig,
    initial: Conformation,
) -> Result<Simulation> {
    config.validate()?;
    let n = topology.n_joints();
    if initial.len() != n {
        return Err(KcmError::invalid("init", "initial conformation has the wrong length"));
    }
    let qp_data = match &config.mode {
        ControllerMode::OdsQp(rule) => Some((rule.weight(n), rule.bounds(n)?)),
        ControllerMode::Conventional => None,
    };
    let started = Instant::now();
    let mut theta = initial.clone();
    let mut records = Vec::new();
    let mut history: Vec<(f64, bool)> = Vec::new();
    let mut steps_taken = 0;

    let termination = loop {
        let k = steps_taken;
        let step_start = Instant::now();
        let Evaluation { energy, torques, .. } = match evaluate(topology, params, &theta) {
            Ok(e) => e,
            Err(KcmError::Singular { i, j, distance }) => {
                break Termination::Singular {
                    step: k,
                    detail: format!("atoms {i} and {j} are {distance:.3e} Å apart"),
                };
            }
            Err(e) => return Err(e),
        };
        let torques = torques.0;
        let torque_max = torques.amax();
        let converged = torque_max < config.threshold || torque_max == 0.0;
        let ctl = if torque_max > 0.0 {
            control(&config.mode, &torques, qp_data.as_ref())?
        } else {
            Control {
                u: DVector::zeros(n),
                velocity: DVector::zeros(n),
                active: 0,
            }
        };

        let binding = 2 * ctl.active >= n;
        history.push((torque_max, binding));
        let stalled = config.stall_detection
            && qp_data.is_some()
            && k >= STALL_WINDOW
            && torque_max > (1.0 - STALL_DECREASE) * history[k - STALL_WINDOW].0
            && history[k + 1 - STALL_WINDOW..=k].iter().all(|&(_, b)| b);
        let exhausted = k == config.max_iterations;
        let done = converged || stalled || exhausted;

        if done || k % config.record_every == 0 {
            records.push(TrajectoryRecord {
                step: k,
                theta: theta.theta().clone(),
                control_max: ctl.u.amax(),
                control: ctl.u.clone(),
                torques: torques.clone(),
                torque_max,
                energy,
                active_bounds: ctl.active,
                step_seconds: step_start.elapsed().as_secs_f64(),
            });
        }
        if converged {
            break Termination::Converged;
        }
        if stalled {
            break Termination::Stalled;
        }
        if exhausted {
            break Termination::BudgetExhausted;
        }

        theta = match qp_data {
            None => kcm_step(&theta, &torques, config.h)?,
            Some(_) => {
                let scale = config.h / ctl.velocity.amax().max(1.0);
                Conformation::new(theta.theta() + &ctl.velocity * scale)?
            }
        };
        if let Some(last) = records.last_mut() {
            if last.step == k {
                last.step_seconds = step_start.elapsed().as_secs_f64();
            }
        }
        steps_taken += 1;
    };

    Ok(Simulation {
        records,
        termination,
        bounds: qp_data.map(|(_, c)| c),
        initial,
        last: theta,
        steps_taken,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

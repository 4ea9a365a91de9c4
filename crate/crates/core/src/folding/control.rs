use nalgebra::{DMatrix, DVector};

use crate::chain::{forward_kinematics, ChainTopology, Conformation, KinematicState};
use crate::energetics::{atom_forces, total_energy, EnergyBreakdown, ForceFieldParams};
use crate::error::{KcmError, Result};
use crate::kinetostatics::{joint_torques, TorqueVector};

/// Unit conversion of the bound rule: N_A · e² / 4184 · 10²⁰, turning
/// e²/Å into kcal/mol.
pub const BOUND_CONVERSION: f64 = 6.022e23 * 1.602e-19 * 1.602e-19 / 4184.0 * 1e20;

fn max_norm(v: &DVector<f64>) -> Result<f64> {
    let m = v.amax();
    if m > 0.0 {
        Ok(m)
    } else {
        Err(KcmError::ZeroTorque)
    }
}

/// One conventional KCM step: θ + h·τ/|τ|∞.
pub fn kcm_step(conf: &Conformation, torques: &DVector<f64>, h: f64) -> Result<Conformation> {
    if torques.len() != conf.len() {
        return Err(KcmError::invalid("torques", "length differs from conformation"));
    }
    let r = reference_direction(torques)?;
    Conformation::new(conf.theta() + r * h)
}

/// Control that turns the open-loop drift τ into the reference field:
/// u = (1 − |τ|∞)/|τ|∞ · τ, so that τ + u = τ/|τ|∞.
pub fn kcm_control_input(torques: &DVector<f64>) -> Result<DVector<f64>> {
    let m = max_norm(torques)?;
    Ok(torques * ((1.0 - m) / m))
}

/// τ/|τ|∞ for a given torque vector.
pub fn reference_direction(torques: &DVector<f64>) -> Result<DVector<f64>> {
    let m = max_norm(torques)?;
    Ok(torques / m)
}

/// The KCM reference vector field evaluated at a conformation.
pub fn reference_vector_field(
    topology: &ChainTopology,
    params: &ForceFieldParams,
    conf: &Conformation,
) -> Result<DVector<f64>> {
    let eval = evaluate(topology, params, conf)?;
    reference_direction(&eval.torques.0)
}

/// Linear term of the pointwise QP: g = Q (τ − τ/|τ|∞). With it,
/// ½uᵀQu + gᵀu equals ½|τ + u − τ/|τ|∞|²_Q up to a constant.
pub fn ods_linear_term(torques: &DVector<f64>, q: &DMatrix<f64>) -> Result<DVector<f64>> {
    if q.shape() != (torques.len(), torques.len()) {
        return Err(KcmError::invalid("qp.Q", "weight matrix does not match torque length"));
    }
    let r = reference_direction(torques)?;
    Ok(q * (torques - r))
}

/// Weight matrix √n · I.
pub fn ods_weight(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) * (n as f64).sqrt()
}

/// Per-joint bounds c_i = c₀ ρ / √n.
pub fn entropy_bounds(rho: f64, n: usize) -> Result<DVector<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(KcmError::invalid("rho", format!("must be positive, got {rho}")));
    }
    if n == 0 {
        return Err(KcmError::invalid("joints", "no joints"));
    }
    Ok(DVector::from_element(n, BOUND_CONVERSION * rho / (n as f64).sqrt()))
}

/// Everything the loop needs at one conformation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: KinematicState,
    pub energy: EnergyBreakdown,
    pub torques: TorqueVector,
}

pub fn evaluate(
    topology: &ChainTopology,
    params: &ForceFieldParams,
    conf: &Conformation,
) -> Result<Evaluation> {
    let state = forward_kinematics(topology, conf)?;
    let energy = total_energy(&state, params)?;
    let forces = atom_forces(&state, params)?;
    let torques = joint_torques(&state, &forces, topology)?;
    Ok(Evaluation {
        state,
        energy,
        torques,
    })
}

/// Torque field θ ↦ τ(θ).
pub fn torque_field<'a>(
    topology: &'a ChainTopology,
    params: &'a ForceFieldParams,
) -> impl Fn(&DVector<f64>) -> Result<DVector<f64>> + Copy + 'a {
    move |theta| Ok(evaluate(topology, params, &Conformation::new(theta.clone())?)?.torques.0)
}

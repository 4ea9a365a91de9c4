use nalgebra::DVector;

use super::control::{reference_direction, torque_field};
use crate::chain::{ChainTopology, Conformation};
use crate::energetics::ForceFieldParams;
use crate::error::{KcmError, Result};
use crate::qp::{lipschitz_probe, LipschitzEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub h: f64,
    /// Time horizon t*, with one Euler step of size h lasting h.
    pub horizon: f64,
    /// The proxy trajectory uses steps h / 2^refinements.
    pub refinements: u32,
    pub probe_samples: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            h: 0.04,
            horizon: 2.0,
            refinements: 6,
            probe_samples: 64,
            seed: 0,
        }
    }
}

/// Discrete iteration against the refined proxy at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRun {
    pub h: f64,
    pub steps: usize,
    /// |θ(hk) − θ_k| for k = 0..=steps.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// (1 + λ)/2 · (exp(t* λ′) − 1) · h.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationAudit {
    pub horizon: f64,
    /// Probe of the reference field over the ball of radius t* around θ₀.
    pub probe: LipschitzEstimate,
    pub coarse: AuditRun,
    pub halved: AuditRun,
    /// coarse.max_deviation / halved.max_deviation; ≈ 2 for a first-order scheme.
    pub order_ratio: f64,
}

impl DiscretizationAudit {
    pub fn lambda(&self) -> f64 {
        self.probe.bound
    }

    pub fn lambda_prime(&self) -> f64 {
        self.probe.lipschitz
    }

    pub fn within_bound(&self) -> bool {
        self.coarse.max_deviation <= self.coarse.bound && self.halved.max_deviation <= self.halved.bound
    }

    pub fn first_order(&self) -> bool {
        (1.5..=2.5).contains(&self.order_ratio)
    }
}

fn euler<F>(field: F, start: &DVector<f64>, step: f64, n_steps: usize, every: usize) -> Result<Vec<DVector<f64>>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut theta = start.clone();
    let mut samples = vec![theta.clone()];
    for s in 1..=n_steps {
        theta += field(&theta)? * step;
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(KcmError::invalid("audit", "trajectory left the finite range"));
        }
        if s % every == 0 {
            samples.push(theta.clone());
        }
    }
    Ok(samples)
}

fn run(
    field: impl Fn(&DVector<f64>) -> Result<DVector<f64>> + Copy,
    start: &DVector<f64>,
    h: f64,
    config: &AuditConfig,
    probe: &LipschitzEstimate,
) -> Result<AuditRun> {
    let steps = (config.horizon / h).floor() as usize;
    let sub = 1usize << config.refinements;
    let discrete = euler(field, start, h, steps, 1)?;
    let proxy = euler(field, start, h / sub as f64, steps * sub, sub)?;
    let deviations: Vec<f64> = discrete.iter().zip(&proxy).map(|(a, b)| (a - b).norm()).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let bound = (1.0 + probe.bound) / 2.0 * ((config.horizon * probe.lipschitz).exp() - 1.0) * h;
    Ok(AuditRun {
        h,
        steps,
        deviations,
        max_deviation,
        bound,
    })
}

/// Compares the KCM difference equation with a refined-step proxy of its
/// continuous dynamics at h and h/2, and evaluates the first-order error
/// bound from probed constants of the reference field. Errors when the
/// torques blow up or vanish within the horizon; the audit is then
/// inconclusive.
pub fn audit_discretization(
    topology: &ChainTopology,
    params: &ForceFieldParams,
    initial: &Conformation,
    config: &AuditConfig,
) -> Result<DiscretizationAudit> {
    if !(config.h > 0.0 && config.horizon >= config.h) {
        return Err(KcmError::invalid("audit", "need 0 < h ≤ horizon"));
    }
    if config.refinements == 0 || config.refinements > 16 {
        return Err(KcmError::invalid("refinements", "must be in 1..=16"));
    }
    let torque = torque_field(topology, params);
    let field = move |theta: &DVector<f64>| reference_direction(&torque(theta)?);
    // |reference field|∞ = 1, so trajectories stay within t* of the start
    let probe = lipschitz_probe(field, initial.theta(), config.horizon, config.probe_samples, config.seed)?;
    let coarse = run(field, initial.theta(), config.h, config, &probe)?;
    let halved = run(field, initial.theta(), config.h / 2.0, config, &probe)?;
    let order_ratio = coarse.max_deviation / halved.max_deviation;
    Ok(DiscretizationAudit {
        horizon: config.horizon,
        probe,
        coarse,
        halved,
        order_ratio,
    })
}

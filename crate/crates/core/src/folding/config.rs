use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::control::{entropy_bounds, ods_weight};
use crate::chain::Conformation;
use crate::error::{KcmError, Result};
use nalgebra::DMatrix;

pub const DEFAULT_STEP: f64 = 0.04;
pub const DEFAULT_ITERATIONS: usize = 325;
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_MEAN_DEG: f64 = 27.7;
pub const DEFAULT_STD_DEG: f64 = 1.1;

/// How the per-joint control bounds are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundRule {
    /// c_i = c₀ ρ / √n with weight √n · I.
    Scaled { rho: f64 },
    /// The same bound on every joint, weight √n · I.
    Uniform { bound: f64 },
}

impl BoundRule {
    pub fn bounds(&self, n: usize) -> Result<DVector<f64>> {
        match *self {
            BoundRule::Scaled { rho } => entropy_bounds(rho, n),
            BoundRule::Uniform { bound } => {
                if !(bound > 0.0 && bound.is_finite()) {
                    return Err(KcmError::invalid("bound", format!("must be positive, got {bound}")));
                }
                Ok(DVector::from_element(n, bound))
            }
        }
    }

    pub fn weight(&self, n: usize) -> DMatrix<f64> {
        ods_weight(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerMode {
    /// θ_{k+1} = θ_k + h τ/|τ|∞.
    Conventional,
    /// Pointwise QP control with bounded torques.
    OdsQp(BoundRule),
}

impl ControllerMode {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerMode::Conventional => "conventional",
            ControllerMode::OdsQp(_) => "ods-qp",
        }
    }
}

/// Initial dihedral angles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialRule {
    Zero,
    /// Explicit angles in radians.
    Fixed(Vec<f64>),
    /// Independent uniform draws with the given mean and standard deviation
    /// in degrees (half-width std·√3).
    Uniform { mean_deg: f64, std_deg: f64 },
}

impl Default for InitialRule {
    fn default() -> Self {
        InitialRule::Uniform {
            mean_deg: DEFAULT_MEAN_DEG,
            std_deg: DEFAULT_STD_DEG,
        }
    }
}

impl FromStr for InitialRule {
    type Err = KcmError;

    /// `zero`, `uniform`, `uniform:MEAN:STD` (degrees) or `fixed:a,b,...`
    /// (radians).
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| KcmError::Parse {
            what: format!("initial rule `{s}`"),
            reason: reason.to_string(),
        };
        let number = |t: &str| t.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "zero" if rest.is_empty() => Ok(InitialRule::Zero),
            "uniform" if rest.is_empty() => Ok(InitialRule::default()),
            "uniform" => {
                let (m, sd) = rest.split_once(':').ok_or_else(|| bad("expected uniform:MEAN:STD"))?;
                Ok(InitialRule::Uniform {
                    mean_deg: number(m)?,
                    std_deg: number(sd)?,
                })
            }
            "fixed" => Ok(InitialRule::Fixed(
                rest.split(',').map(number).collect::<Result<_>>()?,
            )),
            _ => Err(bad("unknown rule; expected zero, uniform[:MEAN:STD] or fixed:a,b,...")),
        }
    }
}

impl fmt::Display for InitialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialRule::Zero => write!(f, "zero"),
            InitialRule::Fixed(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "fixed:{}", parts.join(","))
            }
            InitialRule::Uniform { mean_deg, std_deg } => write!(f, "uniform:{mean_deg:?}:{std_deg:?}"),
        }
    }
}

/// Initial conformation with `n` joints; deterministic in `seed`.
pub fn initial_conformation(rule: &InitialRule, n: usize, seed: u64) -> Result<Conformation> {
    match rule {
        InitialRule::Zero => Ok(Conformation::zeros(n)),
        InitialRule::Fixed(v) => {
            if v.len() != n {
                return Err(KcmError::invalid(
                    "init",
                    format!("fixed rule has {} angles, chain has {n} joints", v.len()),
                ));
            }
            Conformation::from_slice(v)
        }
        &InitialRule::Uniform { mean_deg, std_deg } => {
            if !(std_deg >= 0.0 && std_deg.is_finite() && mean_deg.is_finite()) {
                return Err(KcmError::invalid("init", "uniform rule needs finite mean and std ≥ 0"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half = std_deg * 3f64.sqrt();
            let theta = DVector::from_fn(n, |_, _| {
                let deg = if half > 0.0 {
                    rng.random_range(mean_deg - half..=mean_deg + half)
                } else {
                    mean_deg
                };
                deg.to_radians()
            });
            Conformation::new(theta)
        }
    }
}

/// Parameters of one folding run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Largest per-joint rotation per step, radians.
    pub h: f64,
    pub max_iterations: usize,
    /// Stop once |τ|∞ drops below this.
    pub threshold: f64,
    pub mode: ControllerMode,
    pub seed: u64,
    pub init: InitialRule,
    /// Keep every n-th step; the last step is always kept.
    pub record_every: usize,
    /// Detect stalls in ods-qp mode.
    pub stall_detection: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            h: DEFAULT_STEP,
            max_iterations: DEFAULT_ITERATIONS,
            threshold: DEFAULT_THRESHOLD,
            mode: ControllerMode::Conventional,
            seed: 0,
            init: InitialRule::default(),
            record_every: 1,
            stall_detection: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(KcmError::invalid("h", format!("step must be positive, got {}", self.h)));
        }
        if self.max_iterations == 0 {
            return Err(KcmError::invalid("iters", "need at least one iteration"));
        }
        if !(self.threshold >= 0.0) {
            return Err(KcmError::invalid("threshold", "must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(KcmError::invalid("record_every", "must be at least 1"));
        }
        if let ControllerMode::OdsQp(rule) = &self.mode {
            rule.bounds(1)?;
        }
        Ok(())
    }
}

use nalgebra::{DVector, Matrix3, Vector3};

use super::rotation::rodrigues;
use super::topology::{ChainTopology, Placement};
use crate::error::{KcmError, Result};

/// Dihedral-angle state of the chain, in radians, measured from the zero
/// position. Angles accumulate and are never wrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    theta: DVector<f64>,
}

impl Conformation {
    pub fn new(theta: impl Into<DVector<f64>>) -> Result<Self> {
        let theta = theta.into();
        if let Some(j) = theta.iter().position(|t| !t.is_finite()) {
            return Err(KcmError::invalid(format!("theta[{j}]"), "non-finite dihedral angle"));
        }
        Ok(Conformation { theta })
    }

    pub fn zeros(n: usize) -> Self {
        Conformation {
            theta: DVector::zeros(n),
        }
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(theta))
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.theta
    }
}

/// Geometry derived from one conformation.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicState {
    /// Rotated joint axes u_j(θ).
    pub axes: Vec<Vector3<f64>>,
    /// Rotated body vectors b_j(θ).
    pub bodies: Vec<Vector3<f64>>,
    /// Cumulative rotations Ξ_j = R(θ_0, u_0⁰)⋯R(θ_j, u_j⁰).
    pub cumulative: Vec<Matrix3<f64>>,
    /// Backbone anchors A_0 = 0, A_{j+1} = A_j + b_j; joint j passes through A_j.
    pub anchors: Vec<Vector3<f64>>,
    /// Cartesian atom positions in Å, indexed by atom id.
    pub positions: Vec<Vector3<f64>>,
}

impl KinematicState {
    /// Orientation of a rigid link relative to the zero position.
    pub fn link_rotation(&self, link: usize) -> Matrix3<f64> {
        if link == 0 {
            Matrix3::identity()
        } else {
            self.cumulative[link - 1]
        }
    }

    /// Point the joint's rotation axis passes through.
    pub fn joint_origin(&self, joint: usize) -> Vector3<f64> {
        self.anchors[joint]
    }
}

pub fn forward_kinematics(topology: &ChainTopology, conf: &Conformation) -> Result<KinematicState> {
    let n = topology.n_joints();
    if conf.len() != n {
        return Err(KcmError::invalid(
            "theta",
            format!("conformation has {} angles, chain has {n} joints", conf.len()),
        ));
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut axes = Vec::with_capacity(n);
    let mut bodies = Vec::with_capacity(n);
    let mut anchors = Vec::with_capacity(n + 1);
    anchors.push(Vector3::zeros());
    let mut xi = Matrix3::identity();
    for (j, (u0, b0)) in topology
        .zero_axes()
        .iter()
        .zip(topology.zero_bodies())
        .enumerate()
    {
        xi *= rodrigues(u0, conf.theta[j]);
        let b = xi * b0;
        axes.push(xi * u0);
        anchors.push(anchors[j] + b);
        bodies.push(b);
        cumulative.push(xi);
    }
    let mut state = KinematicState {
        axes,
        bodies,
        cumulative,
        anchors,
        positions: Vec::with_capacity(topology.n_atoms()),
    };
    for atom in topology.atoms() {
        let r = match atom.placement {
            Placement::Anchor(a) => state.anchors[a],
            Placement::Offset { anchor, offset } => {
                state.anchors[anchor] + state.link_rotation(atom.link) * offset
            }
        };
        state.positions.push(r);
    }
    Ok(state)
}

/// Distance |r_i − r_j| between two atoms in Å.
pub fn pairwise_distance(state: &KinematicState, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(KcmError::invalid("atom", format!("distance of atom {i} to itself")));
    }
    let n = state.positions.len();
    if i >= n || j >= n {
        return Err(KcmError::invalid("atom", format!("atom id out of range 0..{n}")));
    }
    Ok((state.positions[i] - state.positions[j]).norm())
}

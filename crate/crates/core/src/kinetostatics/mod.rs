//! Kinetostatic torque mapping τ = Jᵀ F.
//!
//! Moving links are enumerated `1..=2N` (link `j + 1` is the first link
//! moved by joint `j`; the fixed base link 0 carries no rows). Each link
//! contributes six rows, force before moment, so F and J have `12N` rows.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::chain::{ChainTopology, KinematicState};
use crate::energetics::AtomForces;
use crate::error::{KcmError, Result};

/// Stacked link wrenches, link-major, `[force; moment]` per link.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedForces {
    pub values: DVector<f64>,
    /// Point each link's moment is taken about.
    pub reference_points: Vec<Vector3<f64>>,
}

impl GeneralizedForces {
    pub fn n_links(&self) -> usize {
        self.reference_points.len()
    }

    pub fn force(&self, link: usize) -> Vector3<f64> {
        let r = 6 * (link - 1);
        Vector3::new(self.values[r], self.values[r + 1], self.values[r + 2])
    }

    pub fn moment(&self, link: usize) -> Vector3<f64> {
        let r = 6 * (link - 1) + 3;
        Vector3::new(self.values[r], self.values[r + 1], self.values[r + 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainJacobian {
    pub matrix: DMatrix<f64>,
    pub reference_points: Vec<Vector3<f64>>,
}

/// Joint torques τ ∈ ℝ^{2N} in kcal/(mol·rad).
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueVector(pub DVector<f64>);

impl TorqueVector {
    pub fn max_norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

fn check(state: &KinematicState, forces: &AtomForces, topology: &ChainTopology) -> Result<()> {
    if forces.len() != topology.n_atoms() || state.positions.len() != topology.n_atoms() {
        return Err(KcmError::invalid(
            "forces",
            format!(
                "{} forces and {} positions for {} atoms",
                forces.len(),
                state.positions.len(),
                topology.n_atoms()
            ),
        ));
    }
    Ok(())
}

/// Default reference points: link `L` uses anchor `A_L`.
pub fn link_reference_points(state: &KinematicState, topology: &ChainTopology) -> Vec<Vector3<f64>> {
    (1..=topology.n_moving_links())
        .map(|l| state.anchors[topology.link_reference_anchor(l)])
        .collect()
}

pub fn assemble_generalized_forces(
    state: &KinematicState,
    forces: &AtomForces,
    topology: &ChainTopology,
) -> Result<GeneralizedForces> {
    let refs = link_reference_points(state, topology);
    assemble_about(state, forces, topology, refs)
}

/// Wrench assembly about caller-chosen reference points (one per moving link).
pub fn assemble_about(
    state: &KinematicState,
    forces: &AtomForces,
    topology: &ChainTopology,
    reference_points: Vec<Vector3<f64>>,
) -> Result<GeneralizedForces> {
    check(state, forces, topology)?;
    let n_links = topology.n_moving_links();
    if reference_points.len() != n_links {
        return Err(KcmError::invalid("reference_points", "one point per moving link"));
    }
    let mut values = DVector::zeros(6 * n_links);
    for atom in topology.atoms().iter().filter(|a| a.link > 0) {
        let f = forces.forces[atom.id];
        let m = (state.positions[atom.id] - reference_points[atom.link - 1]).cross(&f);
        let r = 6 * (atom.link - 1);
        for k in 0..3 {
            values[r + k] += f[k];
            values[r + 3 + k] += m[k];
        }
    }
    Ok(GeneralizedForces {
        values,
        reference_points,
    })
}

pub fn chain_jacobian(state: &KinematicState, topology: &ChainTopology) -> ChainJacobian {
    jacobian_about(state, topology, link_reference_points(state, topology))
}

/// Revolute-joint Jacobian mapping joint rates to link twists
/// `[velocity of reference point; angular velocity]`.
pub fn jacobian_about(
    state: &KinematicState,
    topology: &ChainTopology,
    reference_points: Vec<Vector3<f64>>,
) -> ChainJacobian {
    let n = topology.n_joints();
    let mut matrix = DMatrix::zeros(6 * n, n);
    for j in 0..n {
        let u = state.axes[j];
        let origin = state.joint_origin(j);
        for link in j + 1..=n {
            let r = 6 * (link - 1);
            let linear = u.cross(&(reference_points[link - 1] - origin));
            for k in 0..3 {
                matrix[(r + k, j)] = linear[k];
                matrix[(r + 3 + k, j)] = u[k];
            }
        }
    }
    ChainJacobian {
        matrix,
        reference_points,
    }
}

/// τ = Jᵀ F through the explicit Jacobian.
pub fn torques_via_jacobian(jacobian: &ChainJacobian, wrenches: &GeneralizedForces) -> TorqueVector {
    TorqueVector(jacobian.matrix.tr_mul(&wrenches.values))
}

/// Production torque path: τ_j = u_j · Σ_{atoms downstream of j} (r_i − a_j) × F_i,
/// evaluated with suffix sums over links.
pub fn joint_torques(
    state: &KinematicState,
    forces: &AtomForces,
    topology: &ChainTopology,
) -> Result<TorqueVector> {
    check(state, forces, topology)?;
    let n = topology.n_joints();
    // per link: net force and moment about the origin
    let mut link_force = vec![Vector3::zeros(); n + 1];
    let mut link_moment = vec![Vector3::zeros(); n + 1];
    for atom in topology.atoms() {
        let f = forces.forces[atom.id];
        link_force[atom.link] += f;
        link_moment[atom.link] += state.positions[atom.id].cross(&f);
    }
    let mut tau = DVector::zeros(n);
    let (mut force, mut moment) = (Vector3::zeros(), Vector3::zeros());
    for j in (0..n).rev() {
        force += link_force[j + 1];
        moment += link_moment[j + 1];
        let about_joint = moment - state.joint_origin(j).cross(&force);
        tau[j] = state.axes[j].dot(&about_joint);
    }
    Ok(TorqueVector(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builder::ideal_backbone;
    use crate::chain::{forward_kinematics, Conformation};
    use crate::energetics::{atom_forces, total_energy, ForceFieldParams, ForceFieldRules};

    fn fixture(n_planes: usize, seed: f64) -> (ChainTopology, ForceFieldParams, Conformation) {
        let topo = ideal_backbone(n_planes);
        let params = ForceFieldParams::from_topology(&topo, &ForceFieldRules::default()).unwrap();
        let theta: Vec<f64> = (0..topo.n_joints())
            .map(|j| 2.6 + 0.9 * (seed + 1.3 * j as f64).sin())
            .collect();
        (topo, params, Conformation::from_slice(&theta).unwrap())
    }

    fn synthetic_forces(n: usize) -> AtomForces {
        AtomForces {
            forces: (0..n)
                .map(|i| {
                    let x = i as f64;
                    Vector3::new((0.7 * x).sin(), (1.1 * x + 0.2).cos(), 0.3 - 0.05 * x)
                })
                .collect(),
        }
    }

    #[test]
    fn zero_forces_give_zero_wrenches_and_torques() {
        let (topo, _, conf) = fixture(2, 0.0);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let forces = AtomForces::zeros(topo.n_atoms());
        let w = assemble_generalized_forces(&state, &forces, &topo).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
        let tau = joint_torques(&state, &forces, &topo).unwrap();
        assert!(tau.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn force_at_reference_point_has_no_moment() {
        let (topo, _, conf) = fixture(2, 0.4);
        let state = forward_kinematics(&topo, &conf).unwrap();
        // plane 0 (link 2): its N atom is the reference anchor
        let n_atom = topo
            .atoms()
            .iter()
            .find(|a| a.link == 2 && a.placement == crate::chain::Placement::Anchor(2))
            .unwrap();
        let mut forces = AtomForces::zeros(topo.n_atoms());
        let f = Vector3::new(0.3, -1.2, 0.5);
        forces.forces[n_atom.id] = f;
        let w = assemble_generalized_forces(&state, &forces, &topo).unwrap();
        assert_eq!(w.force(2), f);
        assert!(w.moment(2).norm() < 1e-15);
    }

    #[test]
    fn wrench_transport_law() {
        let (topo, _, conf) = fixture(3, 1.0);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let forces = synthetic_forces(topo.n_atoms());
        let base = assemble_generalized_forces(&state, &forces, &topo).unwrap();
        let shifts: Vec<Vector3<f64>> = (0..topo.n_moving_links())
            .map(|l| Vector3::new(0.4 * l as f64, -1.0, 0.25))
            .collect();
        let moved_refs: Vec<_> = base
            .reference_points
            .iter()
            .zip(&shifts)
            .map(|(p, s)| p + s)
            .collect();
        let moved = assemble_about(&state, &forces, &topo, moved_refs.clone()).unwrap();
        for l in 1..=topo.n_moving_links() {
            // M' = M − Δp × F
            let expected = base.moment(l) - shifts[l - 1].cross(&base.force(l));
            assert!((moved.moment(l) - expected).norm() < 1e-12);
        }
        // τ is independent of the reference points
        let t1 = torques_via_jacobian(&chain_jacobian(&state, &topo), &base);
        let t2 = torques_via_jacobian(&jacobian_about(&state, &topo, moved_refs), &moved);
        assert!((t1.0 - t2.0).amax() < 1e-10);
    }

    #[test]
    fn jacobian_causality_and_unit_angular_blocks() {
        let (topo, _, conf) = fixture(3, 0.2);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let jac = chain_jacobian(&state, &topo);
        let n = topo.n_joints();
        assert_eq!(jac.matrix.shape(), (6 * n, n));
        for j in 0..n {
            for link in 1..=n {
                let block = jac.matrix.view((6 * (link - 1), j), (6, 1));
                if link <= j {
                    assert!(block.iter().all(|&v| v == 0.0));
                } else {
                    let ang = jac.matrix.view((6 * (link - 1) + 3, j), (3, 1));
                    assert!((ang.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobian_columns_match_finite_differences_of_link_poses() {
        let (topo, _, conf) = fixture(2, 0.9);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let jac = chain_jacobian(&state, &topo);
        let step = 1e-6;
        for j in 0..topo.n_joints() {
            let mut plus = conf.theta().clone();
            plus[j] += step;
            let mut minus = conf.theta().clone();
            minus[j] -= step;
            let sp = forward_kinematics(&topo, &Conformation::new(plus).unwrap()).unwrap();
            let sm = forward_kinematics(&topo, &Conformation::new(minus).unwrap()).unwrap();
            for link in 1..=topo.n_moving_links() {
                let a = topo.link_reference_anchor(link);
                let v = (sp.anchors[a] - sm.anchors[a]) / (2.0 * step);
                // angular velocity from the rotation derivative: skew(ω) = Ṙ Rᵀ
                let rdot = (sp.link_rotation(link) - sm.link_rotation(link)) / (2.0 * step);
                let w = rdot * state.link_rotation(link).transpose();
                let omega = Vector3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)]);
                let r = 6 * (link - 1);
                for k in 0..3 {
                    assert!((jac.matrix[(r + k, j)] - v[k]).abs() < 1e-5);
                    assert!((jac.matrix[(r + 3 + k, j)] - omega[k]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn parallel_axes_give_linear_parts_orthogonal_to_axis() {
        // planar chain: every axis along z, bodies in the xy-plane
        let axes = vec![Vector3::z(); 4];
        let bodies = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.5, 0.0),
            Vector3::new(0.8, -0.3, 0.0),
            Vector3::new(1.2, 0.1, 0.0),
        ];
        let topo = ChainTopology::new(axes, bodies, vec![], vec![]).unwrap();
        let conf = Conformation::from_slice(&[0.3, -0.2, 0.9, 0.1]).unwrap();
        let state = forward_kinematics(&topo, &conf).unwrap();
        let jac = chain_jacobian(&state, &topo);
        for j in 0..4 {
            for link in j + 1..=4 {
                let r = 6 * (link - 1);
                assert!(jac.matrix[(r + 2, j)].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn direct_path_matches_jacobian_transpose() {
        for seed in [0.0, 0.7, 2.1] {
            let (topo, params, conf) = fixture(3, seed);
            let state = forward_kinematics(&topo, &conf).unwrap();
            let forces = atom_forces(&state, &params).unwrap();
            let direct = joint_torques(&state, &forces, &topo).unwrap();
            let w = assemble_generalized_forces(&state, &forces, &topo).unwrap();
            let via = torques_via_jacobian(&chain_jacobian(&state, &topo), &w);
            let scale = direct.max_norm().max(1e-300);
            assert!((direct.0.clone() - via.0).amax() / scale < 1e-9);
        }
    }

    #[test]
    fn torques_are_negative_energy_gradient() {
        let (topo, params, conf) = fixture(2, 1.7);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let tau = joint_torques(&state, &atom_forces(&state, &params).unwrap(), &topo).unwrap();
        let energy = |theta: DVector<f64>| {
            let s = forward_kinematics(&topo, &Conformation::new(theta).unwrap()).unwrap();
            total_energy(&s, &params).unwrap().total
        };
        let step = 1e-6;
        for j in 0..topo.n_joints() {
            let mut plus = conf.theta().clone();
            plus[j] += step;
            let mut minus = conf.theta().clone();
            minus[j] -= step;
            let grad = (energy(plus) - energy(minus)) / (2.0 * step);
            assert!(
                (tau.0[j] + grad).abs() / tau.max_norm().max(1.0) < 1e-5,
                "joint {j}: tau {} grad {grad}",
                tau.0[j]
            );
        }
    }

    #[test]
    fn torques_linear_in_forces() {
        let (topo, _, conf) = fixture(2, 0.3);
        let state = forward_kinematics(&topo, &conf).unwrap();
        let f = synthetic_forces(topo.n_atoms());
        let doubled = AtomForces {
            forces: f.forces.iter().map(|v| v * 2.0).collect(),
        };
        let t1 = joint_torques(&state, &f, &topo).unwrap();
        let t2 = joint_torques(&state, &doubled, &topo).unwrap();
        assert!((t2.0 - t1.0 * 2.0).amax() < 1e-12);
    }
}

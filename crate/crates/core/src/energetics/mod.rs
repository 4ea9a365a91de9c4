//! Aggregated free energy (Coulomb + 12-6 van der Waals) and the analytic
//! Cartesian forces F_i = −∇_{r_i} G.

mod params;

use nalgebra::Vector3;

pub use params::{ForceFieldParams, ForceFieldRules, PairParams, COULOMB_KCAL};

use crate::chain::KinematicState;
use crate::error::{KcmError, Result};

/// Pairs closer than this (Å) are treated as broken geometry.
pub const SINGULARITY_FLOOR: f64 = 1e-3;

/// Free energy in kcal/mol. `total` is always `elec + vdw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub elec: f64,
    pub vdw: f64,
}

/// Per-atom forces in kcal/(mol·Å).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomForces {
    pub forces: Vec<Vector3<f64>>,
}

impl AtomForces {
    pub fn zeros(n: usize) -> Self {
        AtomForces {
            forces: vec![Vector3::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.forces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }
}

fn check_atoms(state: &KinematicState, params: &ForceFieldParams) -> Result<()> {
    if state.positions.len() != params.n_atoms {
        return Err(KcmError::invalid(
            "state",
            format!(
                "state has {} atoms, force field expects {}",
                state.positions.len(),
                params.n_atoms
            ),
        ));
    }
    Ok(())
}

/// Separation vector r_i − r_j and its length, rejecting near-coincident pairs.
#[inline]
fn separation(state: &KinematicState, p: &PairParams) -> Result<(Vector3<f64>, f64)> {
    let delta = state.positions[p.i] - state.positions[p.j];
    let d = delta.norm();
    if !(d >= SINGULARITY_FLOOR) {
        return Err(KcmError::Singular {
            i: p.i,
            j: p.j,
            distance: d,
        });
    }
    Ok((delta, d))
}

#[inline]
fn coulomb_term(p: &PairParams, d: f64) -> f64 {
    p.coulomb_scale * p.charge_product / d
}

#[inline]
fn lj_term(p: &PairParams, d: f64) -> f64 {
    let s6 = (p.vdw_distance / d).powi(6);
    p.vdw_weight * p.well_depth * (s6 * s6 - 2.0 * s6)
}

pub fn electrostatic_energy(state: &KinematicState, params: &ForceFieldParams) -> Result<f64> {
    check_atoms(state, params)?;
    let mut sum = 0.0;
    for p in &params.pairs {
        let (_, d) = separation(state, p)?;
        sum += coulomb_term(p, d);
    }
    Ok(sum)
}

pub fn vdw_energy(state: &KinematicState, params: &ForceFieldParams) -> Result<f64> {
    check_atoms(state, params)?;
    let mut sum = 0.0;
    for p in &params.pairs {
        let (_, d) = separation(state, p)?;
        sum += lj_term(p, d);
    }
    Ok(sum)
}

pub fn total_energy(state: &KinematicState, params: &ForceFieldParams) -> Result<EnergyBreakdown> {
    let elec = electrostatic_energy(state, params)?;
    let vdw = vdw_energy(state, params)?;
    Ok(EnergyBreakdown {
        total: elec + vdw,
        elec,
        vdw,
    })
}

pub fn atom_forces(state: &KinematicState, params: &ForceFieldParams) -> Result<AtomForces> {
    check_atoms(state, params)?;
    let mut out = AtomForces::zeros(params.n_atoms);
    for p in &params.pairs {
        let (delta, d) = separation(state, p)?;
        let coulomb = coulomb_term(p, d) / d;
        let s6 = (p.vdw_distance / d).powi(6);
        let lj = 12.0 * p.vdw_weight * p.well_depth * (s6 * s6 - s6) / d;
        // force on i along r_i − r_j; positive magnitude is repulsive
        let f = delta * ((coulomb + lj) / d);
        out.forces[p.i] += f;
        out.forces[p.j] -= f;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::builder::ideal_backbone;
    use crate::chain::{forward_kinematics, Conformation};
    use nalgebra::{Rotation3, Vector3};
    use proptest::prelude::*;

    fn state_of(points: &[Vector3<f64>]) -> KinematicState {
        KinematicState {
            axes: vec![],
            bodies: vec![],
            cumulative: vec![],
            anchors: vec![],
            positions: points.to_vec(),
        }
    }

    fn pair(charge_product: f64, well_depth: f64, vdw_distance: f64) -> PairParams {
        PairParams {
            i: 0,
            j: 1,
            charge_product,
            coulomb_scale: 1.0,
            well_depth,
            vdw_distance,
            vdw_weight: 1.0,
        }
    }

    fn two(p: PairParams, d: f64) -> (KinematicState, ForceFieldParams) {
        (
            state_of(&[Vector3::zeros(), Vector3::new(d, 0.0, 0.0)]),
            ForceFieldParams::new(2, vec![p]).unwrap(),
        )
    }

    #[test]
    fn opposite_unit_charges() {
        let (s, p) = two(pair(-1.0, 0.0, 1.0), 2.0);
        assert_eq!(electrostatic_energy(&s, &p).unwrap(), -0.5);
    }

    #[test]
    fn vdw_minimum_at_contact_distance() {
        let (s, p) = two(pair(0.0, 0.3, 3.5), 3.5);
        assert_eq!(vdw_energy(&s, &p).unwrap(), -0.3);
        let f = atom_forces(&s, &p).unwrap();
        assert!(f.forces[0].norm() < 1e-15);
    }

    #[test]
    fn vdw_zero_crossing_found_by_bisection() {
        let d0 = 3.0;
        let energy = |d: f64| {
            let (s, p) = two(pair(0.0, 1.0, d0), d);
            vdw_energy(&s, &p).unwrap()
        };
        // repulsive below the crossing, attractive above
        let (mut lo, mut hi) = (0.5 * d0, d0);
        assert!(energy(lo) > 0.0 && energy(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if energy(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - d0 * 2f64.powf(-1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn vdw_tail_rises_monotonically_to_zero() {
        let mut last = f64::NEG_INFINITY;
        for k in 0..100 {
            let d = 3.5 + 0.2 * k as f64;
            let (s, p) = two(pair(0.0, 0.2, 3.5), d);
            let e = vdw_energy(&s, &p).unwrap();
            assert!(e < 0.0 && e > last);
            last = e;
        }
        assert!(last.abs() < 1e-4);
    }

    #[test]
    fn doubling_distances_halves_coulomb() {
        let pts = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 2.0, 0.5),
            Vector3::new(-1.5, 0.3, 2.0),
        ];
        let pairs = vec![
            PairParams { i: 0, j: 1, ..pair(0.3, 0.0, 1.0) },
            PairParams { i: 0, j: 2, ..pair(-0.7, 0.0, 1.0) },
            PairParams { i: 1, j: 2, ..pair(0.2, 0.0, 1.0) },
        ];
        let p = ForceFieldParams::new(3, pairs).unwrap();
        let e1 = electrostatic_energy(&state_of(&pts), &p).unwrap();
        let scaled: Vec<_> = pts.iter().map(|x| x * 2.0).collect();
        let e2 = electrostatic_energy(&state_of(&scaled), &p).unwrap();
        assert!((e2 - 0.5 * e1).abs() < 1e-14 * e1.abs().max(1.0));
    }

    #[test]
    fn zero_charges_and_empty_pair_list() {
        let (s, p) = two(pair(0.0, 0.0, 3.0), 2.0);
        assert_eq!(electrostatic_energy(&s, &p).unwrap(), 0.0);
        let empty = ForceFieldParams::new(2, vec![]).unwrap();
        let e = total_energy(&s, &empty).unwrap();
        assert_eq!((e.total, e.elec, e.vdw), (0.0, 0.0, 0.0));
    }

    #[test]
    fn like_charges_repel_symmetrically() {
        let (s, p) = two(pair(1.0, 0.0, 1.0), 1.5);
        let f = atom_forces(&s, &p).unwrap();
        assert!(f.forces[0].x < 0.0 && f.forces[1].x > 0.0);
        assert_eq!(f.forces[0], -f.forces[1]);
    }

    #[test]
    fn singular_pair_is_reported() {
        let (s, p) = two(pair(1.0, 0.1, 3.0), 1e-4);
        match total_energy(&s, &p) {
            Err(KcmError::Singular { i: 0, j: 1, .. }) => {}
            other => panic!("expected singularity, got {other:?}"),
        }
        assert!(atom_forces(&s, &p).is_err());
    }

    fn backbone_fixture(theta_scale: f64) -> (KinematicState, ForceFieldParams) {
        let topo = ideal_backbone(3);
        let params = ForceFieldParams::from_topology(&topo, &ForceFieldRules::default()).unwrap();
        let theta: Vec<f64> = (0..topo.n_joints())
            .map(|j| theta_scale * (1.0 + 0.37 * j as f64).sin() + 2.5)
            .collect();
        let state = forward_kinematics(&topo, &Conformation::from_slice(&theta).unwrap()).unwrap();
        (state, params)
    }

    #[test]
    fn breakdown_sums_exactly() {
        let (s, p) = backbone_fixture(0.8);
        let e = total_energy(&s, &p).unwrap();
        assert_eq!(e.total, e.elec + e.vdw);
    }

    #[test]
    fn forces_match_finite_differences_of_energy() {
        let (s, p) = backbone_fixture(0.6);
        let f = atom_forces(&s, &p).unwrap();
        let step = 1e-5;
        let scale = f.forces.iter().map(|v| v.amax()).fold(1.0, f64::max);
        for a in 0..s.positions.len() {
            for k in 0..3 {
                let mut plus = s.clone();
                plus.positions[a][k] += step;
                let mut minus = s.clone();
                minus.positions[a][k] -= step;
                let fd = -(total_energy(&plus, &p).unwrap().total
                    - total_energy(&minus, &p).unwrap().total)
                    / (2.0 * step);
                assert!(
                    (fd - f.forces[a][k]).abs() / scale < 1e-6,
                    "atom {a} axis {k}: analytic {} fd {fd}",
                    f.forces[a][k]
                );
            }
        }
    }

    #[test]
    fn net_force_vanishes() {
        let (s, p) = backbone_fixture(1.1);
        let f = atom_forces(&s, &p).unwrap();
        let net: Vector3<f64> = f.forces.iter().sum();
        let scale = f.forces.iter().map(|v| v.norm()).sum::<f64>();
        assert!(net.norm() < 1e-12 * scale);
    }

    #[test]
    fn excluding_a_pair_removes_exactly_its_terms() {
        let (s, p) = backbone_fixture(0.9);
        let victim = p.pairs[p.pairs.len() / 2];
        let reduced = p.without_pair(victim.j, victim.i);
        assert_eq!(reduced.pairs.len(), p.pairs.len() - 1);
        let d = (s.positions[victim.i] - s.positions[victim.j]).norm();
        let full = total_energy(&s, &p).unwrap().total;
        let less = total_energy(&s, &reduced).unwrap().total;
        let term = coulomb_term(&victim, d) + lj_term(&victim, d);
        assert!((full - less - term).abs() < 1e-9 * full.abs().max(1.0));
        let single = ForceFieldParams::new(p.n_atoms, vec![victim]).unwrap();
        let f_full = atom_forces(&s, &p).unwrap();
        let f_less = atom_forces(&s, &reduced).unwrap();
        let f_single = atom_forces(&s, &single).unwrap();
        for k in 0..p.n_atoms {
            let diff = f_full.forces[k] - f_less.forces[k] - f_single.forces[k];
            assert!(diff.norm() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rigid_motion_invariance(
            rx in -3.0..3.0f64, ry in -3.0..3.0f64, rz in -3.0..3.0f64,
            tx in -20.0..20.0f64, ty in -20.0..20.0f64, tz in -20.0..20.0f64,
        ) {
            let (s, p) = backbone_fixture(0.7);
            let rot = Rotation3::new(Vector3::new(rx, ry, rz));
            let t = Vector3::new(tx, ty, tz);
            let moved: Vec<_> = s.positions.iter().map(|x| rot * x + t).collect();
            let e0 = total_energy(&s, &p).unwrap().total;
            let e1 = total_energy(&state_of(&moved), &p).unwrap().total;
            prop_assert!((e0 - e1).abs() <= 1e-9 * e0.abs().max(1.0));
        }

        #[test]
        fn pair_order_does_not_matter(seed in 0usize..1000) {
            let (s, p) = backbone_fixture(0.5);
            let mut swapped = p.clone();
            for q in swapped.pairs.iter_mut() {
                std::mem::swap(&mut q.i, &mut q.j);
            }
            let n = swapped.pairs.len();
            swapped.pairs.rotate_left(seed % n);
            let a = total_energy(&s, &p).unwrap();
            let b = total_energy(&s, &swapped).unwrap();
            prop_assert!((a.total - b.total).abs() <= 1e-10 * a.total.abs().max(1.0));
        }
    }
}

//! Property checks across module boundaries.

use kcmfold::chain::builder::ideal_backbone;
use kcmfold::chain::{forward_kinematics, Conformation};
use kcmfold::energetics::{atom_forces, ForceFieldParams, ForceFieldRules};
use kcmfold::kinetostatics::{assemble_generalized_forces, chain_jacobian, joint_torques, torques_via_jacobian};
use kcmfold::qp::{solve_box_qp, BoxQP};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn suffix_sum_torques_match_explicit_jacobian(theta in prop::collection::vec(-3.1f64..3.1, 8)) {
        let topo = ideal_backbone(3);
        prop_assert_eq!(topo.n_joints(), theta.len());
        let params = ForceFieldParams::from_topology(&topo, &ForceFieldRules::default()).unwrap();
        let state = forward_kinematics(&topo, &Conformation::from_slice(&theta).unwrap()).unwrap();
        let Ok(forces) = atom_forces(&state, &params) else { return Ok(()) };
        let fast = joint_torques(&state, &forces, &topo).unwrap();
        let wrenches = assemble_generalized_forces(&state, &forces, &topo).unwrap();
        let slow = torques_via_jacobian(&chain_jacobian(&state, &topo), &wrenches);
        let scale = fast.max_norm().max(1.0);
        prop_assert!((fast.as_vector() - slow.as_vector()).amax() <= 1e-9 * scale);
    }

    #[test]
    fn rigid_links_keep_bond_lengths(theta in prop::collection::vec(-3.1f64..3.1, 6)) {
        let topo = ideal_backbone(2);
        prop_assert_eq!(topo.n_joints(), theta.len());
        let zero = forward_kinematics(&topo, &Conformation::zeros(topo.n_joints())).unwrap();
        let moved = forward_kinematics(&topo, &Conformation::from_slice(&theta).unwrap()).unwrap();
        for atom in topo.atoms() {
            for other in topo.atoms().iter().filter(|o| o.link == atom.link) {
                let d0 = (zero.positions[atom.id] - zero.positions[other.id]).norm();
                let d1 = (moved.positions[atom.id] - moved.positions[other.id]).norm();
                prop_assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn box_qp_solution_is_feasible_and_no_worse_than_clamped_guesses(
        seed in prop::collection::vec(-1.0f64..1.0, 16),
        g in prop::collection::vec(-5.0f64..5.0, 4),
        c in prop::collection::vec(0.05f64..3.0, 4),
    ) {
        let a = DMatrix::from_column_slice(4, 4, &seed);
        let q = &a * a.transpose() + DMatrix::identity(4, 4) * 0.2;
        let q = (&q + q.transpose()) * 0.5;
        let c = DVector::from_vec(c);
        let qp = BoxQP::new(q, DVector::from_vec(g), c.clone()).unwrap();
        let sol = solve_box_qp(&qp).unwrap();
        prop_assert!(sol.u.iter().zip(c.iter()).all(|(u, c)| u.abs() <= c + 1e-12));
        for corner in 0..16u32 {
            let guess = DVector::from_fn(4, |i, _| if corner >> i & 1 == 1 { c[i] } else { -c[i] });
            prop_assert!(sol.objective <= qp.objective(&guess) + 1e-9);
        }
        prop_assert!(sol.objective <= qp.objective(&DVector::zeros(4)) + 1e-9);
    }
}

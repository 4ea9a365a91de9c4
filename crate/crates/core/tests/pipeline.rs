//! End-to-end runs through the public API: spec file in, trajectory out.

use kcmfold::folding::{simulate, BoundRule, ControllerMode, SimulationConfig, Termination};
use kcmfold::io::{parse_chain_spec, parse_trajectory, render_chain_spec, render_trajectory, TrajectoryFormat,
    TrajectoryHeader, BUNDLED_BACKBONE};

fn short_run(mode: ControllerMode) -> SimulationConfig {
    SimulationConfig {
        max_iterations: 40,
        mode,
        ..Default::default()
    }
}

#[test]
fn bundled_spec_simulates_and_round_trips_both_formats() {
    let spec = parse_chain_spec(BUNDLED_BACKBONE).unwrap();
    let n = spec.topology.n_joints();
    let cfg = short_run(ControllerMode::OdsQp(BoundRule::Scaled { rho: 9.0 }));
    let sim = simulate(&spec.topology, &spec.params, &cfg).unwrap();
    assert_eq!(sim.termination, Termination::BudgetExhausted);
    assert_eq!(sim.records.len(), 41);
    let header = TrajectoryHeader::new(&cfg, &sim, n, false);
    for format in [TrajectoryFormat::Csv, TrajectoryFormat::JsonLines] {
        let text = render_trajectory(&header, &sim.records, format).unwrap();
        let (back_header, back) = parse_trajectory(&text, format).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back.len(), sim.records.len());
        for (a, b) in back.iter().zip(&sim.records) {
            assert_eq!(a.step, b.step);
            assert_eq!(a.theta, b.theta);
            assert_eq!(a.torques, b.torques);
            assert_eq!(a.control, b.control);
            assert_eq!(a.energy.total, b.energy.total);
        }
    }
}

#[test]
fn rendered_spec_reproduces_the_same_run() {
    let spec = parse_chain_spec(BUNDLED_BACKBONE).unwrap();
    let text = render_chain_spec(&spec.topology, &spec.rules).unwrap();
    let again = parse_chain_spec(&text).unwrap();
    let cfg = short_run(ControllerMode::Conventional);
    let a = simulate(&spec.topology, &spec.params, &cfg).unwrap();
    let b = simulate(&again.topology, &again.params, &cfg).unwrap();
    assert_eq!(a.last_record().unwrap().theta, b.last_record().unwrap().theta);
}

#[test]
fn energy_falls_under_both_controllers() {
    let spec = parse_chain_spec(BUNDLED_BACKBONE).unwrap();
    for mode in [ControllerMode::Conventional, ControllerMode::OdsQp(BoundRule::Scaled { rho: 20.0 })] {
        let sim = simulate(&spec.topology, &spec.params, &short_run(mode.clone())).unwrap();
        let (first, last) = (sim.first().unwrap(), sim.last_record().unwrap());
        assert!(last.energy.total < first.energy.total, "{}", mode.name());
        assert!(last.torque_max < first.torque_max, "{}", mode.name());
    }
}

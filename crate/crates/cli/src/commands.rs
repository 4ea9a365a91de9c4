use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::thread;

use anyhow::{bail, Context, Result};
use kcmfold::chain::builder::ideal_backbone;
use kcmfold::chain::{forward_kinematics, Conformation};
use kcmfold::folding::{
    audit_discretization, evaluate, initial_conformation, torque_field, AuditConfig, BoundRule,
    ControllerMode, InitialRule, Simulation, SimulationConfig, Termination,
};
use kcmfold::io::{
    load_chain_spec, render_trajectory, save_chain_spec, write_xyz_snapshot, ChainSpec, TrajectoryFormat,
    TrajectoryHeader,
};
use kcmfold::qp::{lipschitz_probe, lp_feasibility_omega};
use serde::Serialize;

use crate::{CheckArgs, CompareArgs, Format, GenSpecArgs, Mode, RunArgs, SimulateArgs, EXIT_NUMERICAL};

fn load(spec: Option<&Path>) -> Result<ChainSpec> {
    match spec {
        Some(path) => load_chain_spec(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(ChainSpec::bundled()),
    }
}

fn format_of(f: Format) -> TrajectoryFormat {
    match f {
        Format::Csv => TrajectoryFormat::Csv,
        Format::Jsonl => TrajectoryFormat::JsonLines,
    }
}

fn config(run: &RunArgs, mode: ControllerMode) -> Result<SimulationConfig> {
    let cfg = SimulationConfig {
        h: run.h,
        max_iterations: run.iters,
        threshold: run.threshold,
        mode,
        seed: run.seed,
        init: run.init.parse::<InitialRule>()?,
        record_every: run.record_every,
        stall_detection: !run.no_stall,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Summary {
    mode: String,
    termination: String,
    steps: usize,
    initial_energy: Option<f64>,
    final_energy: Option<f64>,
    initial_torque_max: Option<f64>,
    final_torque_max: Option<f64>,
    max_control: Option<f64>,
    max_bound_utilization: Option<f64>,
    wall_seconds: f64,
    artifacts: Vec<String>,
}

/// Writes the trajectory, snapshots and summary of one run into `dir`.
fn write_run(
    dir: &Path,
    spec: &ChainSpec,
    cfg: &SimulationConfig,
    sim: &Simulation,
    run: &RunArgs,
) -> Result<Summary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let format = format_of(run.format);
    let topo = &spec.topology;
    let mut artifacts = Vec::new();
    if !sim.records.is_empty() {
        let header = TrajectoryHeader::new(cfg, sim, topo.n_joints(), run.timing);
        let path = dir.join(format!("trajectory.{}", format.extension()));
        fs::write(&path, render_trajectory(&header, &sim.records, format)?)
            .with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path.display().to_string());
    }
    for (name, conf) in [("initial.xyz", &sim.initial), ("final.xyz", &sim.last)] {
        let state = forward_kinematics(topo, conf)?;
        let path = dir.join(name);
        let comment = format!("{} {} step {}", cfg.mode.name(), name.trim_end_matches(".xyz"), sim.steps_taken);
        write_xyz_snapshot(&path, topo, &state, &comment).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path.display().to_string());
    }
    let first = sim.first();
    let last = sim.last_record();
    let summary = Summary {
        mode: cfg.mode.name().into(),
        termination: match &sim.termination {
            Termination::Singular { step, detail } => format!("singular at step {step}: {detail}"),
            t => t.label().into(),
        },
        steps: sim.steps_taken,
        initial_energy: first.map(|r| r.energy.total),
        final_energy: last.map(|r| r.energy.total),
        initial_torque_max: first.map(|r| r.torque_max),
        final_torque_max: last.map(|r| r.torque_max),
        max_control: sim.records.iter().map(|r| r.control_max).reduce(f64::max),
        max_bound_utilization: sim.max_bound_utilization(),
        wall_seconds: sim.wall_seconds,
        artifacts: Vec::new(),
    };
    let path = dir.join("summary.json");
    artifacts.push(path.display().to_string());
    let summary = Summary { artifacts, ..summary };
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(summary)
}

fn print_summary(s: &Summary) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    println!("mode                 {}", s.mode);
    println!("termination          {}", s.termination);
    println!("steps                {}", s.steps);
    println!("energy               {} -> {}", opt(s.initial_energy), opt(s.final_energy));
    println!("max torque           {} -> {}", opt(s.initial_torque_max), opt(s.final_torque_max));
    println!("max control          {}", opt(s.max_control));
    if let Some(u) = s.max_bound_utilization {
        println!("bound utilization    {:.4}%", 100.0 * u);
    }
    println!("wall clock           {:.3} s", s.wall_seconds);
    for a in &s.artifacts {
        println!("wrote                {a}");
    }
}

fn simulate_cmd_mode(args: &SimulateArgs) -> Result<ControllerMode> {
    Ok(match args.mode {
        Mode::Conventional => ControllerMode::Conventional,
        Mode::OdsQp => {
            let rule = match args.bound {
                Some(bound) => BoundRule::Uniform { bound },
                None => BoundRule::Scaled { rho: args.rho },
            };
            rule.bounds(1)?;
            ControllerMode::OdsQp(rule)
        }
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<u8> {
    let cfg = config(&args.run, simulate_cmd_mode(args)?)?;
    let spec = load(args.run.spec.as_deref())?;
    let sim = kcmfold::folding::simulate(&spec.topology, &spec.params, &cfg)?;
    let summary = write_run(&args.run.out, &spec, &cfg, &sim, &args.run)?;
    print_summary(&summary);
    Ok(match sim.termination {
        Termination::Singular { .. } => EXIT_NUMERICAL,
        _ => 0,
    })
}

fn parse_variant(s: &str) -> Result<(String, ControllerMode)> {
    let number = |v: &str| -> Result<f64> { v.parse::<f64>().with_context(|| format!("variant `{s}`")) };
    let mode = if s == "conventional" {
        ControllerMode::Conventional
    } else if let Some(rho) = s.strip_prefix("ods:") {
        ControllerMode::OdsQp(BoundRule::Scaled { rho: number(rho)? })
    } else if let Some(c) = s.strip_prefix("bound:") {
        ControllerMode::OdsQp(BoundRule::Uniform { bound: number(c)? })
    } else {
        bail!("unknown variant `{s}`; expected conventional, ods:RHO or bound:C");
    };
    if let ControllerMode::OdsQp(rule) = &mode {
        rule.bounds(1)?;
    }
    Ok((s.replace(':', "-"), mode))
}

pub fn compare(args: &CompareArgs) -> Result<u8> {
    let names: Vec<String> = if args.variants.is_empty() {
        vec!["conventional".into(), "ods:20".into(), "ods:9".into()]
    } else {
        args.variants.clone()
    };
    if names.len() < 2 {
        bail!(kcmfold::KcmError::Invalid {
            field: "variant".into(),
            reason: "compare needs at least two variants".into(),
        });
    }
    let variants = names
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (label, mode) = parse_variant(s)?;
            Ok((format!("{i}_{label}"), config(&args.run, mode)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = load(args.run.spec.as_deref())?;

    // independent runs share nothing mutable
    let results: Vec<kcmfold::Result<Simulation>> = thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(_, cfg)| scope.spawn(|| kcmfold::folding::simulate(&spec.topology, &spec.params, cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let mut sims = Vec::new();
    for ((label, cfg), result) in variants.iter().zip(results) {
        let sim = result.with_context(|| format!("variant {label}"))?;
        write_run(&args.run.out.join(label), &spec, cfg, &sim, &args.run)?;
        sims.push(sim);
    }

    let mut steps: Vec<usize> = sims.iter().flat_map(|s| s.records.iter().map(|r| r.step)).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut table = String::from("step");
    for (label, _) in &variants {
        write!(table, ",{label}_control_max,{label}_energy")?;
    }
    table.push('\n');
    for step in steps {
        write!(table, "{step}")?;
        for sim in &sims {
            match sim.records.iter().find(|r| r.step == step) {
                Some(r) => write!(table, ",{:.16e},{:.16e}", r.control_max, r.energy.total)?,
                None => table.push_str(",,"),
            }
        }
        table.push('\n');
    }
    fs::create_dir_all(&args.run.out)?;
    let table_path = args.run.out.join("compare.csv");
    fs::write(&table_path, table).with_context(|| format!("writing {}", table_path.display()))?;

    let reference = sims[0].last_record().map(|r| r.energy.total);
    println!(
        "{:<24} {:<18} {:>6} {:>16} {:>14} {:>8}",
        "variant", "termination", "steps", "final energy", "delta", "stalled"
    );
    let mut singular = false;
    for ((label, _), sim) in variants.iter().zip(&sims) {
        let fin = sim.last_record().map(|r| r.energy.total);
        let delta = match (fin, reference) {
            (Some(f), Some(r)) => format!("{:.6e}", f - r),
            _ => "-".into(),
        };
        singular |= matches!(sim.termination, Termination::Singular { .. });
        println!(
            "{:<24} {:<18} {:>6} {:>16} {:>14} {:>8}",
            label,
            sim.termination.label(),
            sim.steps_taken,
            fin.map_or("-".into(), |f| format!("{f:.6}")),
            delta,
            if sim.termination == Termination::Stalled { "yes" } else { "no" },
        );
    }
    println!("wrote {}", table_path.display());
    Ok(if singular { EXIT_NUMERICAL } else { 0 })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn check(args: &CheckArgs) -> Result<u8> {
    let spec = load(args.spec.as_deref())?;
    let topo = &spec.topology;
    let n = topo.n_joints();
    let init = args.init.parse::<InitialRule>()?;
    let theta0 = initial_conformation(&init, n, args.seed)?;
    let mut all_ok = true;

    let bounds = BoundRule::Scaled { rho: args.rho }.bounds(n)?;
    let cert = lp_feasibility_omega(bounds.as_slice())?;
    all_ok &= cert.condition_holds();
    println!(
        "{} feasibility LP: omega = {:.6} (omega > 0: {})",
        verdict(cert.condition_holds()),
        cert.omega,
        cert.condition_holds()
    );

    let probe = lipschitz_probe(torque_field(topo, &spec.params), theta0.theta(), args.h, args.samples, args.seed)?;
    let probe_ok = probe.singular == 0 && probe.lipschitz.is_finite();
    all_ok &= probe_ok;
    println!(
        "{} torque Lipschitz probe (radius {}): lambda = {:.6}, lambda' = {:.6}, singular samples = {}",
        verdict(probe_ok),
        args.h,
        probe.bound,
        probe.lipschitz,
        probe.singular
    );

    let fixture = ideal_backbone(args.audit_planes);
    let fixture_params = kcmfold::energetics::ForceFieldParams::from_topology(&fixture, &spec.rules)?;
    let fixture_init = initial_conformation(&init, fixture.n_joints(), args.seed)?;
    let audit_cfg = AuditConfig {
        h: args.h,
        horizon: args.horizon,
        refinements: args.refinements,
        probe_samples: args.samples,
        seed: args.seed,
    };
    match audit_discretization(&fixture, &fixture_params, &fixture_init, &audit_cfg) {
        Ok(audit) => {
            let ok = audit.within_bound() && audit.first_order();
            all_ok &= ok;
            println!(
                "{} discretization audit ({} planes, t* = {}): max deviation {:.4e} (h) / {:.4e} (h/2), ratio {:.3}, bound {:.4e}",
                verdict(ok),
                args.audit_planes,
                args.horizon,
                audit.coarse.max_deviation,
                audit.halved.max_deviation,
                audit.order_ratio,
                audit.coarse.bound
            );
        }
        Err(e) => {
            all_ok = false;
            println!("FAIL discretization audit inconclusive: {e}");
        }
    }

    let err = gradient_self_test(&spec, &theta0)?;
    let ok = err < 1e-5;
    all_ok &= ok;
    println!("{} torque-gradient identity: max relative error {err:.3e}", verdict(ok));

    Ok(if all_ok { 0 } else { EXIT_NUMERICAL })
}

/// max_j |τ_j + ∂G/∂θ_j| / max(1, |τ|∞) with central differences.
fn gradient_self_test(spec: &ChainSpec, theta: &Conformation) -> Result<f64> {
    let step = 1e-6;
    let tau = evaluate(&spec.topology, &spec.params, theta)?.torques.0;
    let energy = |t: nalgebra::DVector<f64>| -> Result<f64> {
        Ok(evaluate(&spec.topology, &spec.params, &Conformation::new(t)?)?.energy.total)
    };
    let mut worst: f64 = 0.0;
    for j in 0..tau.len() {
        let mut plus = theta.theta().clone();
        let mut minus = plus.clone();
        plus[j] += step;
        minus[j] -= step;
        let grad = (energy(plus)? - energy(minus)?) / (2.0 * step);
        worst = worst.max((tau[j] + grad).abs());
    }
    Ok(worst / tau.amax().max(1.0))
}

pub fn gen_spec(args: &GenSpecArgs) -> Result<u8> {
    let topo = ideal_backbone(args.planes);
    save_chain_spec(&args.out, &topo, &Default::default())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} ({} joints, {} atoms)", args.out.display(), topo.n_joints(), topo.n_atoms());
    Ok(0)
}

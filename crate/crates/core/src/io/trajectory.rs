use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::energetics::EnergyBreakdown;
use crate::error::{KcmError, Result};
use crate::folding::{BoundRule, ControllerMode, Simulation, SimulationConfig, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    JsonLines,
}

impl FromStr for TrajectoryFormat {
    type Err = KcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TrajectoryFormat::Csv),
            "jsonl" | "jsonlines" | "json-lines" => Ok(TrajectoryFormat::JsonLines),
            _ => Err(KcmError::Parse {
                what: format!("trajectory format `{s}`"),
                reason: "expected csv or jsonl".into(),
            }),
        }
    }
}

impl TrajectoryFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TrajectoryFormat::Csv => "csv",
            TrajectoryFormat::JsonLines => "jsonl",
        }
    }
}

/// Run metadata stored ahead of the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub n_joints: usize,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
    pub h: f64,
    pub max_iterations: usize,
    pub threshold: f64,
    pub seed: u64,
    pub init: String,
    pub record_every: usize,
    pub termination: String,
    pub timing: bool,
}

impl TrajectoryHeader {
    pub fn new(config: &SimulationConfig, sim: &Simulation, n_joints: usize, timing: bool) -> Self {
        TrajectoryHeader {
            n_joints,
            mode: config.mode.name().into(),
            rho: match config.mode {
                ControllerMode::OdsQp(BoundRule::Scaled { rho }) => Some(rho),
                _ => None,
            },
            bounds: sim.bounds.as_ref().map(|c| c.iter().copied().collect()),
            h: config.h,
            max_iterations: config.max_iterations,
            threshold: config.threshold,
            seed: config.seed,
            init: config.init.to_string(),
            record_every: config.record_every,
            termination: sim.termination.label().into(),
            timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    step: usize,
    energy: f64,
    elec: f64,
    vdw: f64,
    torque_max: f64,
    control_max: f64,
    active_bounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_seconds: Option<f64>,
    theta: Vec<f64>,
    torques: Vec<f64>,
    control: Vec<f64>,
}

impl Row {
    fn new(r: &TrajectoryRecord, timing: bool) -> Self {
        Row {
            step: r.step,
            energy: r.energy.total,
            elec: r.energy.elec,
            vdw: r.energy.vdw,
            torque_max: r.torque_max,
            control_max: r.control_max,
            active_bounds: r.active_bounds,
            step_seconds: timing.then_some(r.step_seconds),
            theta: r.theta.iter().copied().collect(),
            torques: r.torques.iter().copied().collect(),
            control: r.control.iter().copied().collect(),
        }
    }

    fn into_record(self) -> TrajectoryRecord {
        TrajectoryRecord {
            step: self.step,
            theta: DVector::from_vec(self.theta),
            torques: DVector::from_vec(self.torques),
            torque_max: self.torque_max,
            energy: EnergyBreakdown {
                total: self.energy,
                elec: self.elec,
                vdw: self.vdw,
            },
            control: DVector::from_vec(self.control),
            control_max: self.control_max,
            active_bounds: self.active_bounds,
            step_seconds: self.step_seconds.unwrap_or(0.0),
        }
    }
}

fn num(x: f64) -> String {
    // 17 significant digits round-trip every double
    format!("{x:.16e}")
}

fn parse_error(reason: impl ToString) -> KcmError {
    KcmError::Parse {
        what: "trajectory".into(),
        reason: reason.to_string(),
    }
}

fn csv_columns(n: usize, timing: bool) -> Vec<String> {
    let mut cols: Vec<String> = ["step", "energy", "elec", "vdw", "torque_max", "control_max", "active_bounds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if timing {
        cols.push("step_seconds".into());
    }
    for prefix in ["theta", "tau", "u"] {
        cols.extend((0..n).map(|j| format!("{prefix}_{j}")));
    }
    cols
}

/// Serializes a trajectory. Output depends only on the inputs; timing
/// columns appear only when the header asks for them.
pub fn render_trajectory(
    header: &TrajectoryHeader,
    records: &[TrajectoryRecord],
    format: TrajectoryFormat,
) -> Result<String> {
    if records.is_empty() {
        return Err(KcmError::invalid("records", "nothing to write"));
    }
    let n = header.n_joints;
    if let Some(r) = records
        .iter()
        .find(|r| r.theta.len() != n || r.torques.len() != n || r.control.len() != n)
    {
        return Err(KcmError::invalid(format!("record[{}]", r.step), "vector length differs from header"));
    }
    let header_json = serde_json::to_string(header).map_err(parse_error)?;
    match format {
        TrajectoryFormat::JsonLines => {
            let mut out = header_json;
            out.push('\n');
            for r in records {
                out.push_str(&serde_json::to_string(&Row::new(r, header.timing)).map_err(parse_error)?);
                out.push('\n');
            }
            Ok(out)
        }
        TrajectoryFormat::Csv => {
            let mut buffer = format!("# {header_json}\n").into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buffer);
                w.write_record(csv_columns(n, header.timing)).map_err(parse_error)?;
                for r in records {
                    let mut row = vec![
                        r.step.to_string(),
                        num(r.energy.total),
                        num(r.energy.elec),
                        num(r.energy.vdw),
                        num(r.torque_max),
                        num(r.control_max),
                        r.active_bounds.to_string(),
                    ];
                    if header.timing {
                        row.push(num(r.step_seconds));
                    }
                    for v in [&r.theta, &r.torques, &r.control] {
                        row.extend(v.iter().map(|&x| num(x)));
                    }
                    w.write_record(&row).map_err(parse_error)?;
                }
                w.flush()?;
            }
            String::from_utf8(buffer).map_err(parse_error)
        }
    }
}

pub fn write_trajectory(
    path: impl AsRef<Path>,
    header: &TrajectoryHeader,
    records: &[TrajectoryRecord],
    format: TrajectoryFormat,
) -> Result<()> {
    fs::write(path, render_trajectory(header, records, format)?)?;
    Ok(())
}

pub fn parse_trajectory(text: &str, format: TrajectoryFormat) -> Result<(TrajectoryHeader, Vec<TrajectoryRecord>)> {
    let (first, rest) = text.split_once('\n').ok_or_else(|| parse_error("missing header line"))?;
    match format {
        TrajectoryFormat::JsonLines => {
            let header: TrajectoryHeader = serde_json::from_str(first).map_err(parse_error)?;
            let records = rest
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, l)| {
                    serde_json::from_str::<Row>(l)
                        .map(Row::into_record)
                        .map_err(|e| parse_error(format!("line {}: {e}", i + 2)))
                })
                .collect::<Result<_>>()?;
            Ok((header, records))
        }
        TrajectoryFormat::Csv => {
            let json = first.strip_prefix("# ").ok_or_else(|| parse_error("missing `# ` header"))?;
            let header: TrajectoryHeader = serde_json::from_str(json).map_err(parse_error)?;
            let n = header.n_joints;
            let mut reader = csv::Reader::from_reader(rest.as_bytes());
            let expected = csv_columns(n, header.timing);
            let columns: Vec<String> = reader.headers().map_err(parse_error)?.iter().map(String::from).collect();
            if columns != expected {
                return Err(parse_error("column names do not match the header"));
            }
            let mut records = Vec::new();
            for (i, row) in reader.records().enumerate() {
                let row = row.map_err(parse_error)?;
                let at = |c: usize| -> Result<f64> {
                    row[c]
                        .parse::<f64>()
                        .map_err(|e| parse_error(format!("row {i}, column {}: {e}", expected[c])))
                };
                let int = |c: usize| -> Result<usize> {
                    row[c]
                        .parse::<usize>()
                        .map_err(|e| parse_error(format!("row {i}, column {}: {e}", expected[c])))
                };
                let base = if header.timing { 8 } else { 7 };
                let vector = |k: usize| -> Result<Vec<f64>> { (0..n).map(|j| at(base + k * n + j)).collect() };
                records.push(
                    Row {
                        step: int(0)?,
                        energy: at(1)?,
                        elec: at(2)?,
                        vdw: at(3)?,
                        torque_max: at(4)?,
                        control_max: at(5)?,
                        active_bounds: int(6)?,
                        step_seconds: if header.timing { Some(at(7)?) } else { None },
                        theta: vector(0)?,
                        torques: vector(1)?,
                        control: vector(2)?,
                    }
                    .into_record(),
                );
            }
            Ok((header, records))
        }
    }
}

pub fn read_trajectory(
    path: impl AsRef<Path>,
    format: TrajectoryFormat,
) -> Result<(TrajectoryHeader, Vec<TrajectoryRecord>)> {
    parse_trajectory(&fs::read_to_string(path)?, format)
}

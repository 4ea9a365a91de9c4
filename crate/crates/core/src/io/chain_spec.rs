use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::chain::{AtomRole, AtomSpec, ChainTopology, PlaneOffset, Placement};
use crate::energetics::{ForceFieldParams, ForceFieldRules};
use crate::error::{KcmError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The 10-plane ideal backbone shipped with the crate.
pub const BUNDLED_BACKBONE: &str = include_str!("../../data/backbone10.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointEntry {
    axis: [f64; 3],
    body: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomEntry {
    element: String,
    link: usize,
    anchor: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<[f64; 3]>,
    charge: f64,
    radius: f64,
    well_depth: f64,
    role: AtomRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_planes: Option<usize>,
    #[serde(default)]
    force_field: ForceFieldRules,
    #[serde(rename = "joint")]
    joints: Vec<JointEntry>,
    #[serde(rename = "atom")]
    atoms: Vec<AtomEntry>,
    #[serde(rename = "plane_atom", default)]
    plane_atoms: Vec<PlaneOffset>,
}

/// A loaded chain: topology, the rules that produced the pair list, and
/// the pair list itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub topology: ChainTopology,
    pub rules: ForceFieldRules,
    pub params: ForceFieldParams,
}

impl ChainSpec {
    pub fn new(topology: ChainTopology, rules: ForceFieldRules) -> Result<Self> {
        let params = ForceFieldParams::from_topology(&topology, &rules)?;
        Ok(ChainSpec {
            topology,
            rules,
            params,
        })
    }

    pub fn bundled() -> Self {
        parse_chain_spec(BUNDLED_BACKBONE).expect("bundled chain spec is valid")
    }
}

/// Parses chain-spec TOML text. Syntax errors carry line and column; schema
/// errors name the offending field.
pub fn parse_chain_spec(text: &str) -> Result<ChainSpec> {
    let file: SpecFile = toml::from_str(text).map_err(|e| KcmError::Parse {
        what: "chain spec".into(),
        reason: e.to_string().trim_end().to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(KcmError::invalid(
            "schema_version",
            format!("expected {SCHEMA_VERSION}, found {}", file.schema_version),
        ));
    }
    let n_joints = file.joints.len();
    if let Some(n) = file.n_planes {
        if n_joints < 2 || n != n_joints / 2 - 1 {
            return Err(KcmError::invalid(
                "n_planes",
                format!("{n} planes declared but {n_joints} joints given"),
            ));
        }
    }
    let axes = file.joints.iter().map(|j| Vector3::from(j.axis)).collect();
    let bodies = file.joints.iter().map(|j| Vector3::from(j.body)).collect();
    let atoms = file
        .atoms
        .into_iter()
        .map(|a| AtomSpec {
            element: a.element,
            link: a.link,
            placement: match a.offset {
                None => Placement::Anchor(a.anchor),
                Some(o) => Placement::Offset {
                    anchor: a.anchor,
                    offset: Vector3::from(o),
                },
            },
            charge: a.charge,
            radius: a.radius,
            well_depth: a.well_depth,
            role: a.role,
        })
        .collect();
    let topology = ChainTopology::new(axes, bodies, atoms, file.plane_atoms)?;
    ChainSpec::new(topology, file.force_field)
}

pub fn load_chain_spec(path: impl AsRef<Path>) -> Result<ChainSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_chain_spec(&text).map_err(|e| match e {
        KcmError::Parse { reason, .. } => KcmError::Parse {
            what: format!("chain spec {}", path.display()),
            reason,
        },
        other => other,
    })
}

pub fn render_chain_spec(topology: &ChainTopology, rules: &ForceFieldRules) -> Result<String> {
    let file = SpecFile {
        schema_version: SCHEMA_VERSION,
        n_planes: Some(topology.n_planes()),
        force_field: rules.clone(),
        joints: topology
            .zero_axes()
            .iter()
            .zip(topology.zero_bodies())
            .map(|(a, b)| JointEntry {
                axis: [a.x, a.y, a.z],
                body: [b.x, b.y, b.z],
            })
            .collect(),
        atoms: topology
            .explicit_atoms()
            .map(|a| AtomEntry {
                element: a.element.clone(),
                link: a.link,
                anchor: a.placement.anchor(),
                offset: match a.placement {
                    Placement::Anchor(_) => None,
                    Placement::Offset { offset, .. } => Some([offset.x, offset.y, offset.z]),
                },
                charge: a.charge,
                radius: a.radius,
                well_depth: a.well_depth,
                role: a.role,
            })
            .collect(),
        plane_atoms: topology.plane_offsets().to_vec(),
    };
    toml::to_string(&file).map_err(|e| KcmError::Parse {
        what: "chain spec".into(),
        reason: e.to_string(),
    })
}

pub fn save_chain_spec(path: impl AsRef<Path>, topology: &ChainTopology, rules: &ForceFieldRules) -> Result<()> {
    fs::write(path, render_chain_spec(topology, rules)?)?;
    Ok(())
}

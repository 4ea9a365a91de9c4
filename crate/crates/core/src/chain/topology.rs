use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{KcmError, Result};

/// Tolerance on |u⁰| = 1 for zero-position joint axes.
pub const ZERO_AXIS_TOLERANCE: f64 = 1e-12;

/// What an atom is, as far as the chain bookkeeping cares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomRole {
    BackboneN,
    BackboneCa,
    PlaneOffset,
    Terminus,
}

/// Where an atom sits relative to the backbone anchors.
///
/// Anchor `a` is the prefix sum `A_a = b_0 + … + b_{a-1}` of rotated body
/// vectors, with `A_0` at the origin. Offsets are zero-position vectors that
/// rotate with the atom's link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Anchor(usize),
    Offset { anchor: usize, offset: Vector3<f64> },
}

impl Placement {
    pub fn anchor(&self) -> usize {
        match *self {
            Placement::Anchor(a) | Placement::Offset { anchor: a, .. } => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub id: usize,
    pub element: String,
    /// Rigid link carrying the atom: 0 is the fixed N-terminal base, link
    /// `j + 1` is the first link moved by joint `j`.
    pub link: usize,
    pub placement: Placement,
    /// Partial charge in elementary charges.
    pub charge: f64,
    /// Van der Waals radius R_i in Å.
    pub radius: f64,
    /// Per-atom well depth in kcal/mol; pairs combine geometrically.
    pub well_depth: f64,
    pub role: AtomRole,
}

/// Template for an in-plane atom shared by every peptide plane, placed at
/// `Cα + k1·b_first + k2·b_second` using the plane's two body vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneOffset {
    pub element: String,
    pub charge: f64,
    pub radius: f64,
    pub well_depth: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Atom description before ids and plane expansion are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub element: String,
    pub link: usize,
    pub placement: Placement,
    pub charge: f64,
    pub radius: f64,
    pub well_depth: f64,
    pub role: AtomRole,
}

/// Immutable description of a backbone linkage at its zero position.
///
/// Joints are indexed `0..2N` in chain order: joint `2r` is the N–Cα axis of
/// residue `r`, joint `2r + 1` its Cα–C axis. Joint `j` passes through anchor
/// `A_j`. Peptide plane `p` is link `2p + 2`; links `2r + 1` carry the Cα
/// atoms and link `2N` is the C-terminal group.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTopology {
    zero_axes: Vec<Vector3<f64>>,
    zero_bodies: Vec<Vector3<f64>>,
    atoms: Vec<AtomRecord>,
    plane_offsets: Vec<PlaneOffset>,
}

impl ChainTopology {
    /// Validates and assembles a topology. Plane templates are expanded onto
    /// every peptide plane; atoms are ordered by link, explicit atoms first.
    pub fn new(
        zero_axes: Vec<Vector3<f64>>,
        zero_bodies: Vec<Vector3<f64>>,
        explicit_atoms: Vec<AtomSpec>,
        plane_offsets: Vec<PlaneOffset>,
    ) -> Result<Self> {
        let n_joints = zero_axes.len();
        if n_joints < 2 || n_joints % 2 != 0 {
            return Err(KcmError::invalid(
                "joint",
                format!("need an even number (at least 2) of joints, got {n_joints}"),
            ));
        }
        if zero_bodies.len() != n_joints {
            return Err(KcmError::invalid(
                "joint",
                format!(
                    "{} body vectors for {} axes",
                    zero_bodies.len(),
                    n_joints
                ),
            ));
        }
        for (j, (axis, body)) in zero_axes.iter().zip(&zero_bodies).enumerate() {
            if !axis.iter().chain(body.iter()).all(|v| v.is_finite()) {
                return Err(KcmError::invalid(format!("joint[{j}]"), "non-finite vector"));
            }
            let norm = axis.norm();
            if (norm - 1.0).abs() > ZERO_AXIS_TOLERANCE {
                return Err(KcmError::invalid(
                    format!("joint[{j}].axis"),
                    format!("axis of joint {j} is not a unit vector (|u| = {norm})"),
                ));
            }
        }

        let n_planes = n_joints / 2 - 1;
        let mut specs: Vec<(usize, AtomSpec)> = explicit_atoms
            .into_iter()
            .enumerate()
            .map(|(i, a)| (i, a))
            .collect();
        for (i, (_, a)) in specs.iter().enumerate() {
            validate_atom(a, n_joints, &format!("atom[{i}]"))?;
        }
        for (m, t) in plane_offsets.iter().enumerate() {
            validate_params(t.radius, t.well_depth, t.charge, &format!("plane_atom[{m}]"))?;
            if !(t.k1.is_finite() && t.k2.is_finite()) {
                return Err(KcmError::invalid(
                    format!("plane_atom[{m}]"),
                    "non-finite plane coefficients",
                ));
            }
        }
        let n_explicit = specs.len();
        for p in 0..n_planes {
            let first = 2 * p + 1;
            for (m, t) in plane_offsets.iter().enumerate() {
                let offset = zero_bodies[first] * t.k1 + zero_bodies[first + 1] * t.k2;
                specs.push((
                    n_explicit + p * plane_offsets.len() + m,
                    AtomSpec {
                        element: t.element.clone(),
                        link: 2 * p + 2,
                        placement: Placement::Offset {
                            anchor: first,
                            offset,
                        },
                        charge: t.charge,
                        radius: t.radius,
                        well_depth: t.well_depth,
                        role: AtomRole::PlaneOffset,
                    },
                ));
            }
        }
        specs.sort_by_key(|(order, a)| (a.link, *order));
        let atoms = specs
            .into_iter()
            .enumerate()
            .map(|(id, (_, a))| AtomRecord {
                id,
                element: a.element,
                link: a.link,
                placement: a.placement,
                charge: a.charge,
                radius: a.radius,
                well_depth: a.well_depth,
                role: a.role,
            })
            .collect();

        Ok(ChainTopology {
            zero_axes,
            zero_bodies,
            atoms,
            plane_offsets,
        })
    }

    /// Number of dihedral joints, 2N.
    pub fn n_joints(&self) -> usize {
        self.zero_axes.len()
    }

    /// Number of peptide planes, N − 1.
    pub fn n_planes(&self) -> usize {
        self.n_joints() / 2 - 1
    }

    /// Number of moving rigid links (one per joint).
    pub fn n_moving_links(&self) -> usize {
        self.n_joints()
    }

    pub fn zero_axes(&self) -> &[Vector3<f64>] {
        &self.zero_axes
    }

    pub fn zero_bodies(&self) -> &[Vector3<f64>] {
        &self.zero_bodies
    }

    pub fn atoms(&self) -> &[AtomRecord] {
        &self.atoms
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn plane_offsets(&self) -> &[PlaneOffset] {
        &self.plane_offsets
    }

    /// Atoms that were listed explicitly (not expanded from plane templates).
    pub fn explicit_atoms(&self) -> impl Iterator<Item = &AtomRecord> {
        self.atoms.iter().filter(|a| a.role != AtomRole::PlaneOffset)
    }

    /// Peptide plane index of a link, if the link is a plane.
    pub fn plane_of_link(&self, link: usize) -> Option<usize> {
        (link >= 2 && link % 2 == 0 && link < self.n_joints()).then(|| link / 2 - 1)
    }

    /// Reference point of each link for wrench assembly: link `L` uses
    /// anchor `A_L` (the plane's N atom, a Cα, or a terminus anchor).
    pub fn link_reference_anchor(&self, link: usize) -> usize {
        link
    }
}

fn validate_params(radius: f64, well_depth: f64, charge: f64, field: &str) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(KcmError::invalid(
            format!("{field}.radius"),
            format!("van der Waals radius must be positive, got {radius}"),
        ));
    }
    if !(well_depth.is_finite() && well_depth >= 0.0) {
        return Err(KcmError::invalid(
            format!("{field}.well_depth"),
            format!("well depth must be non-negative, got {well_depth}"),
        ));
    }
    if !charge.is_finite() {
        return Err(KcmError::invalid(format!("{field}.charge"), "non-finite charge"));
    }
    Ok(())
}

fn validate_atom(a: &AtomSpec, n_joints: usize, field: &str) -> Result<()> {
    validate_params(a.radius, a.well_depth, a.charge, field)?;
    if a.link > n_joints {
        return Err(KcmError::invalid(
            format!("{field}.link"),
            format!("link {} out of range 0..={n_joints}", a.link),
        ));
    }
    let anchor = a.placement.anchor();
    match a.placement {
        Placement::Anchor(_) if anchor != a.link => {
            return Err(KcmError::invalid(
                format!("{field}.anchor"),
                format!("anchor atom {anchor} must sit on link {anchor}, not {}", a.link),
            ));
        }
        Placement::Offset { offset, .. } => {
            // an offset atom rides on its link, so its anchor must move with it
            if anchor > a.link || anchor + 1 < a.link {
                return Err(KcmError::invalid(
                    format!("{field}.anchor"),
                    format!("anchor {anchor} is not rigid with link {}", a.link),
                ));
            }
            if !offset.iter().all(|v| v.is_finite()) {
                return Err(KcmError::invalid(format!("{field}.offset"), "non-finite offset"));
            }
        }
        _ => {}
    }
    if matches!(a.role, AtomRole::PlaneOffset) {
        return Err(KcmError::invalid(
            format!("{field}.role"),
            "plane-offset atoms are generated from plane templates",
        ));
    }
    Ok(())
}

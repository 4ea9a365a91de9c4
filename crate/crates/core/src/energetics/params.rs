use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::chain::{forward_kinematics, ChainTopology, Conformation};
use crate::error::{KcmError, Result};

/// Coulomb constant 1/(4π ε₀) in kcal·Å/(mol·e²).
pub const COULOMB_KCAL: f64 = 332.0636;

/// Rules that turn per-atom parameters into pair parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceFieldRules {
    /// 1/(4π ε₀) in model units.
    #[serde(default = "default_coulomb")]
    pub coulomb_constant: f64,
    /// Relative dielectric, constant for every pair.
    #[serde(default = "one")]
    pub dielectric: f64,
    #[serde(default = "one")]
    pub elec_weight: f64,
    #[serde(default = "one")]
    pub vdw_weight: f64,
    /// Pairs separated by at most this many covalent bonds are skipped.
    #[serde(default = "default_exclude")]
    pub exclude_within_bonds: usize,
    /// Extra weight on pairs exactly three bonds apart.
    #[serde(default = "one")]
    pub scale_14_elec: f64,
    #[serde(default = "one")]
    pub scale_14_vdw: f64,
    /// Atoms are bonded when closer than this factor times the sum of their
    /// covalent radii at the zero position, between atoms on the same or
    /// adjacent links.
    #[serde(default = "default_bond_tolerance")]
    pub bond_tolerance: f64,
    /// Additional excluded pairs by atom id.
    #[serde(default)]
    pub exclusions: Vec<[usize; 2]>,
}

fn default_coulomb() -> f64 {
    COULOMB_KCAL
}
fn one() -> f64 {
    1.0
}
fn default_exclude() -> usize {
    2
}
fn default_bond_tolerance() -> f64 {
    1.2
}

impl Default for ForceFieldRules {
    fn default() -> Self {
        ForceFieldRules {
            coulomb_constant: COULOMB_KCAL,
            dielectric: 1.0,
            elec_weight: 1.0,
            vdw_weight: 1.0,
            exclude_within_bonds: 2,
            scale_14_elec: 1.0,
            scale_14_vdw: 1.0,
            bond_tolerance: 1.2,
            exclusions: Vec::new(),
        }
    }
}

/// Parameters of one interacting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    pub i: usize,
    pub j: usize,
    /// q_i q_j in e².
    pub charge_product: f64,
    /// w_elec / (4π ε_ij), with the unit conversion folded in.
    pub coulomb_scale: f64,
    /// Pair well depth ϵ_ij in kcal/mol.
    pub well_depth: f64,
    /// D_ij = R_i + R_j in Å.
    pub vdw_distance: f64,
    pub vdw_weight: f64,
}

/// Pair list of the force field. Each unordered pair appears once; the
/// weights are calibrated to that convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceFieldParams {
    pub n_atoms: usize,
    pub pairs: Vec<PairParams>,
}

fn covalent_radius(element: &str) -> Option<f64> {
    Some(match element {
        "H" => 0.31,
        "C" => 0.76,
        "N" => 0.71,
        "O" => 0.66,
        "S" => 1.05,
        "P" => 1.07,
        _ => return None,
    })
}

impl ForceFieldParams {
    pub fn new(n_atoms: usize, pairs: Vec<PairParams>) -> Result<Self> {
        for (k, p) in pairs.iter().enumerate() {
            let field = format!("pair[{k}]");
            if p.i == p.j || p.i >= n_atoms || p.j >= n_atoms {
                return Err(KcmError::invalid(field, "pair indices invalid"));
            }
            if !(p.vdw_distance > 0.0) {
                return Err(KcmError::invalid(field, "van der Waals distance must be positive"));
            }
            if !(p.vdw_weight >= 0.0 && p.coulomb_scale.is_finite() && p.well_depth >= 0.0) {
                return Err(KcmError::invalid(field, "negative weight or well depth"));
            }
        }
        Ok(ForceFieldParams { n_atoms, pairs })
    }

    /// Builds the pair list for a topology. Bonds are inferred from
    /// covalent radii at the zero position, between atoms on the same or
    /// adjacent links.
    pub fn from_topology(topology: &ChainTopology, rules: &ForceFieldRules) -> Result<Self> {
        if !(rules.dielectric > 0.0 && rules.dielectric.is_finite()) {
            return Err(KcmError::invalid("force_field.dielectric", "must be positive"));
        }
        for (name, w) in [
            ("elec_weight", rules.elec_weight),
            ("vdw_weight", rules.vdw_weight),
            ("scale_14_elec", rules.scale_14_elec),
            ("scale_14_vdw", rules.scale_14_vdw),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(KcmError::invalid(format!("force_field.{name}"), "weights must be non-negative"));
            }
        }
        let n = topology.n_atoms();
        let hops = bond_hops(topology, rules.bond_tolerance)?;
        let mut extra = BTreeSet::new();
        for (k, &[a, b]) in rules.exclusions.iter().enumerate() {
            if a >= n || b >= n || a == b {
                return Err(KcmError::invalid(
                    format!("force_field.exclusions[{k}]"),
                    format!("invalid atom pair ({a}, {b})"),
                ));
            }
            extra.insert((a.min(b), a.max(b)));
        }

        let atoms = topology.atoms();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let h = hops[i][j];
                if h <= rules.exclude_within_bonds || extra.contains(&(i, j)) {
                    continue;
                }
                let (se, sv) = if h == 3 {
                    (rules.scale_14_elec, rules.scale_14_vdw)
                } else {
                    (1.0, 1.0)
                };
                let (a, b) = (&atoms[i], &atoms[j]);
                pairs.push(PairParams {
                    i,
                    j,
                    charge_product: a.charge * b.charge,
                    coulomb_scale: rules.elec_weight * se * rules.coulomb_constant / rules.dielectric,
                    well_depth: (a.well_depth * b.well_depth).sqrt(),
                    vdw_distance: a.radius + b.radius,
                    vdw_weight: rules.vdw_weight * sv,
                });
            }
        }
        ForceFieldParams::new(n, pairs)
    }

    /// Copy without the given pair.
    pub fn without_pair(&self, i: usize, j: usize) -> Self {
        ForceFieldParams {
            n_atoms: self.n_atoms,
            pairs: self
                .pairs
                .iter()
                .filter(|p| !((p.i == i && p.j == j) || (p.i == j && p.j == i)))
                .copied()
                .collect(),
        }
    }
}

/// Bond-graph distances between all atoms (usize::MAX when disconnected).
fn bond_hops(topology: &ChainTopology, tolerance: f64) -> Result<Vec<Vec<usize>>> {
    let n = topology.n_atoms();
    let state = forward_kinematics(topology, &Conformation::zeros(topology.n_joints()))?;
    let radii: Vec<f64> = topology
        .atoms()
        .iter()
        .map(|a| {
            covalent_radius(&a.element).ok_or_else(|| {
                KcmError::invalid(
                    format!("atom[{}].element", a.id),
                    format!("no covalent radius for element `{}`", a.element),
                )
            })
        })
        .collect::<Result<_>>()?;
    let atoms = topology.atoms();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            // covalent bonds never skip a link
            if atoms[i].link.abs_diff(atoms[j].link) > 1 {
                continue;
            }
            let d = (state.positions[i] - state.positions[j]).norm();
            if d < tolerance * (radii[i] + radii[j]) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let mut hops = vec![vec![usize::MAX; n]; n];
    for (start, row) in hops.iter_mut().enumerate() {
        row[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for &b in &adjacency[a] {
                if row[b] == usize::MAX {
                    row[b] = row[a] + 1;
                    queue.push_back(b);
                }
            }
        }
    }
    Ok(hops)
}

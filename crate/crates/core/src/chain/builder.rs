//! Ideal backbone geometry from standard peptide stereochemistry.
//!
//! The default zero position is the fully extended backbone (φ = ψ = 180° in
//! the IUPAC convention, all peptide planes coplanar) with trans peptide
//! bonds. Every peptide plane shares the same in-plane offsets for its C, O
//! and H atoms.

use nalgebra::{Matrix2, Vector2, Vector3};

use super::topology::{AtomRole, AtomSpec, ChainTopology, PlaneOffset, Placement};

const N_CA: f64 = 1.458;
const CA_C: f64 = 1.525;
const C_N: f64 = 1.329;
const C_O: f64 = 1.231;
const N_H: f64 = 1.01;

const ANGLE_N_CA_C: f64 = 111.2;
const ANGLE_CA_C_N: f64 = 116.2;
const ANGLE_C_N_CA: f64 = 121.7;
const ANGLE_CA_C_O: f64 = 120.8;
const ANGLE_C_N_H: f64 = 119.0;

/// Nonbonded parameters: (element, charge e, vdW radius Å, well depth kcal/mol).
/// Cα is a united atom carrying its hydrogen's charge.
pub const BACKBONE_N: (&str, f64, f64, f64) = ("N", -0.47, 1.85, 0.20);
pub const BACKBONE_H: (&str, f64, f64, f64) = ("H", 0.31, 0.2245, 0.046);
pub const BACKBONE_CA: (&str, f64, f64, f64) = ("C", 0.16, 2.275, 0.02);
pub const BACKBONE_C: (&str, f64, f64, f64) = ("C", 0.51, 2.0, 0.11);
pub const BACKBONE_O: (&str, f64, f64, f64) = ("O", -0.51, 1.7, 0.12);

/// Places atom `d` bonded to `c` with bond length, angle b–c–d and
/// dihedral a–b–c–d (degrees).
fn place(
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
    bond: f64,
    angle_deg: f64,
    dihedral_deg: f64,
) -> Vector3<f64> {
    let bc = (c - b).normalize();
    let n = (b - a).cross(&bc).normalize();
    let m = n.cross(&bc);
    let (angle, dihedral) = (angle_deg.to_radians(), dihedral_deg.to_radians());
    let local = Vector3::new(
        -bond * angle.cos(),
        bond * angle.sin() * dihedral.cos(),
        bond * angle.sin() * dihedral.sin(),
    );
    c + bc * local.x + m * local.y + n * local.z
}

struct Residue {
    n: Vector3<f64>,
    h: Vector3<f64>,
    ca: Vector3<f64>,
    c: Vector3<f64>,
    o: Vector3<f64>,
}

/// IUPAC backbone dihedrals (degrees) realised at θ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDihedrals {
    pub phi: f64,
    pub psi: f64,
}

impl ZeroDihedrals {
    pub const EXTENDED: ZeroDihedrals = ZeroDihedrals {
        phi: 180.0,
        psi: 180.0,
    };
}

impl Default for ZeroDihedrals {
    fn default() -> Self {
        ZeroDihedrals::EXTENDED
    }
}

fn residues(n_residues: usize, zero: ZeroDihedrals) -> Vec<Residue> {
    let n0 = Vector3::zeros();
    let ca0 = Vector3::new(N_CA, 0.0, 0.0);
    let t = ANGLE_N_CA_C.to_radians();
    let c0 = ca0 + Vector3::new(-t.cos(), t.sin(), 0.0) * CA_C;
    let mut backbone = vec![(n0, ca0, c0)];
    for r in 1..n_residues {
        let (pn, pca, pc) = backbone[r - 1];
        let n = place(pn, pca, pc, C_N, ANGLE_CA_C_N, zero.psi);
        let ca = place(pca, pc, n, N_CA, ANGLE_C_N_CA, 180.0);
        let c = place(pc, n, ca, CA_C, ANGLE_N_CA_C, zero.phi);
        backbone.push((n, ca, c));
    }
    (0..n_residues)
        .map(|r| {
            let (n, ca, c) = backbone[r];
            let o = match backbone.get(r + 1) {
                Some(&(next_n, _, _)) => place(next_n, ca, c, C_O, ANGLE_CA_C_O, 180.0),
                None => place(n, ca, c, C_O, ANGLE_CA_C_O, zero.psi + 180.0),
            };
            let h = if r == 0 {
                place(c, ca, n, N_H, ANGLE_C_N_H, zero.phi + 180.0)
            } else {
                let (_, pca, pc) = backbone[r - 1];
                place(pca, pc, n, N_H, ANGLE_C_N_H, 0.0)
            };
            Residue { n, h, ca, c, o }
        })
        .collect()
}

fn spec(
    params: (&str, f64, f64, f64),
    link: usize,
    placement: Placement,
    role: AtomRole,
) -> AtomSpec {
    AtomSpec {
        element: params.0.to_string(),
        link,
        placement,
        charge: params.1,
        radius: params.2,
        well_depth: params.3,
        role,
    }
}

/// Coefficients (k1, k2) with `x = k1·e1 + k2·e2` for an in-plane vector.
fn plane_coefficients(e1: Vector3<f64>, e2: Vector3<f64>, x: Vector3<f64>) -> (f64, f64) {
    let gram = Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
    let rhs = Vector2::new(e1.dot(&x), e2.dot(&x));
    let k = gram.lu().solve(&rhs).expect("plane body vectors are independent");
    (k.x, k.y)
}

/// Extended backbone chain with `n_planes` peptide planes
/// (2·(n_planes + 1) joints).
pub fn ideal_backbone(n_planes: usize) -> ChainTopology {
    ideal_backbone_with(n_planes, ZeroDihedrals::EXTENDED)
}

pub fn ideal_backbone_with(n_planes: usize, zero: ZeroDihedrals) -> ChainTopology {
    let n_res = n_planes + 1;
    let res = residues(n_res, zero);

    let mut anchors = Vec::with_capacity(2 * n_res + 1);
    for r in &res {
        anchors.push(r.n);
        anchors.push(r.ca);
    }
    anchors.push(res[n_res - 1].c);
    let bodies: Vec<Vector3<f64>> = anchors.windows(2).map(|w| w[1] - w[0]).collect();
    let axes: Vec<Vector3<f64>> = res
        .iter()
        .flat_map(|r| [(r.ca - r.n).normalize(), (r.c - r.ca).normalize()])
        .collect();

    let mut atoms = vec![
        spec(BACKBONE_N, 0, Placement::Anchor(0), AtomRole::BackboneN),
        spec(
            BACKBONE_H,
            0,
            Placement::Offset {
                anchor: 0,
                offset: res[0].h - res[0].n,
            },
            AtomRole::Terminus,
        ),
    ];
    for r in 0..n_res {
        if r > 0 {
            atoms.push(spec(BACKBONE_N, 2 * r, Placement::Anchor(2 * r), AtomRole::BackboneN));
        }
        atoms.push(spec(
            BACKBONE_CA,
            2 * r + 1,
            Placement::Anchor(2 * r + 1),
            AtomRole::BackboneCa,
        ));
    }
    let last = 2 * n_res;
    atoms.push(spec(BACKBONE_C, last, Placement::Anchor(last), AtomRole::Terminus));
    atoms.push(spec(
        BACKBONE_O,
        last,
        Placement::Offset {
            anchor: last,
            offset: res[n_res - 1].o - res[n_res - 1].c,
        },
        AtomRole::Terminus,
    ));

    // in-plane offsets measured on the first plane; all planes are congruent
    let (e1, e2) = (bodies[1], bodies[2]);
    let templates = [
        (BACKBONE_C, res[0].c),
        (BACKBONE_O, res[0].o),
        (BACKBONE_H, res.get(1).map_or(res[0].h, |r| r.h)),
    ];
    let plane_offsets = if n_planes == 0 {
        Vec::new()
    } else {
        templates
            .iter()
            .map(|&(p, x)| {
                let (k1, k2) = plane_coefficients(e1, e2, x - res[0].ca);
                PlaneOffset {
                    element: p.0.to_string(),
                    charge: p.1,
                    radius: p.2,
                    well_depth: p.3,
                    k1,
                    k2,
                }
            })
            .collect()
    };

    ChainTopology::new(axes, bodies, atoms, plane_offsets)
        .expect("ideal backbone satisfies topology invariants")
}

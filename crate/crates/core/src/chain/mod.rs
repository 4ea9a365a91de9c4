//! Backbone linkage: zero-position topology, Rodrigues rotations and
//! dihedral-angle forward kinematics.

pub mod builder;
mod kinematics;
mod rotation;
mod topology;

pub use kinematics::{forward_kinematics, pairwise_distance, Conformation, KinematicState};
pub use rotation::{rotation_about_axis, AXIS_UNIT_TOLERANCE};
pub use topology::{
    AtomRecord, AtomRole, AtomSpec, ChainTopology, PlaneOffset, Placement, ZERO_AXIS_TOLERANCE,
};

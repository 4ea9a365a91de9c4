//! Kinetostatic compliance folding of protein backbones.
//!
//! A backbone is modelled as a serial linkage of rigid peptide planes driven
//! by its dihedral angles. Interatomic Coulomb and 12-6 van der Waals forces
//! are mapped to joint torques through the chain Jacobian, and the angles
//! comply to those torques step by step. The same iteration can be steered
//! by a pointwise box-constrained QP that keeps every control torque inside
//! a prescribed bound.

pub mod chain;
pub mod energetics;
pub mod error;
pub mod folding;
pub mod io;
pub mod kinetostatics;
pub mod qp;

pub use error::{KcmError, Result};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::chain::{ChainTopology, KinematicState};
use crate::error::{KcmError, Result};

/// XYZ text: atom count, a comment line, then `element x y z` in Å.
pub fn render_xyz(topology: &ChainTopology, state: &KinematicState, comment: &str) -> Result<String> {
    if state.positions.len() != topology.n_atoms() {
        return Err(KcmError::invalid("state", "atom count differs from topology"));
    }
    if comment.contains('\n') {
        return Err(KcmError::invalid("comment", "must be a single line"));
    }
    let mut out = format!("{}\n{comment}\n", topology.n_atoms());
    for (atom, p) in topology.atoms().iter().zip(&state.positions) {
        writeln!(out, "{} {:.10} {:.10} {:.10}", atom.element, p.x, p.y, p.z).expect("string write");
    }
    Ok(out)
}

pub fn write_xyz_snapshot(
    path: impl AsRef<Path>,
    topology: &ChainTopology,
    state: &KinematicState,
    comment: &str,
) -> Result<()> {
    fs::write(path, render_xyz(topology, state, comment)?)?;
    Ok(())
}

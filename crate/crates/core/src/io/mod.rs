//! Chain-spec files, trajectory files and XYZ snapshots. Every writer is
//! byte-for-byte deterministic in its inputs.

mod chain_spec;
mod trajectory;
mod xyz;

pub use chain_spec::{
    load_chain_spec, parse_chain_spec, render_chain_spec, save_chain_spec, ChainSpec, BUNDLED_BACKBONE,
    SCHEMA_VERSION,
};
pub use trajectory::{
    parse_trajectory, read_trajectory, render_trajectory, write_trajectory, TrajectoryFormat, TrajectoryHeader,
};
pub use xyz::{render_xyz, write_xyz_snapshot};

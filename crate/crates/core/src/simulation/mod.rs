//! The helicoidal model shell in a periodic fluid box and its time loop.

mod config;
mod model;
mod snapshot;
mod stepper;

pub use config::{IndexOrigin, ModelConfig, ThicknessLaw, DEFAULT_K_CLAMP};
pub use model::{
    build_model_shell, clamp_force, clamp_mask, helix, impulse_force, impulse_plane, node_thickness, row_q1,
    thickness_law,
};
pub use snapshot::{read_snapshot, write_displacement_map, write_snapshot, graymap, Snapshot};
pub use stepper::{Energy, ShellState, Simulation};

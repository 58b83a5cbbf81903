//! Inference: ODE solvers over the learned velocity, guidance and chunked song restoration.

mod solver;
mod song;

pub use solver::{guided_velocity, integrate, SolverConfig, SolverKind, VelocityField};
pub use song::{crossfade_weights, restore_segment, restore_song, ChunkPlan, SAMPLE_BOUND};

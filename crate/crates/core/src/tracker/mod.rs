//! Particle-filter tracking with a collaborative sparse appearance model.

mod appearance;
mod particles;
mod track;

pub use crate::geometry::AffineState;
pub use appearance::{
    discriminative_confidence, discriminative_from_residuals, generative_confidence, observation_likelihood,
    update_templates, GenerativeScore, Observation, ObservationParams, TemplateSet, UpdatePolicy, BLOCK_SIZE,
};
pub use particles::{map_estimate, propose_particles, MotionModelParams, ParticleSet, TrackResult};
pub use track::{track_sequence, track_step, TrackerConfig};

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid model parameter `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("cannot parse field expression: {0}")]
    Parse(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("simulation diverged at step {step}")]
    SimulationDiverged { step: usize },

    #[error(
        "no proposal landed in the ball of radius {ball_radius} after {num_proposals} proposals \
         (closest endpoint at distance {closest_distance})"
    )]
    EmptyEnsemble { num_proposals: u64, ball_radius: f64, closest_distance: f64 },
}

use thiserror::Error;

/// Errors surfaced by model construction, evaluation and solving.
///
/// Model *invariant violations* (non-stochastic rows, negative rewards, ...)
/// are deliberately not errors: they are collected into a
/// [`ValidationReport`](crate::model::ValidationReport) so a single pass can
/// report every problem at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational '{0}': {1}")]
    InvalidRational(String, String),

    #[error("unknown state '{state}' at stage {stage}")]
    UnknownState { stage: usize, state: String },

    #[error("unknown action '{action}' for player {player} in state '{state}' at stage {stage}")]
    UnknownAction {
        stage: usize,
        state: String,
        player: usize,
        action: String,
    },

    #[error("state '{state}' has no rewards/kernel for joint action {joint}")]
    IncompleteDynamics { state: String, joint: String },

    #[error("operator applied at a target-set state '{0}'")]
    TargetState(String),

    #[error("goal lattice has no cell for state '{state}', goal ({goal}) at stage {stage}")]
    MissingLatticeCell {
        stage: usize,
        state: String,
        goal: String,
    },

    #[error("policy has no cell for state '{state}', goal ({goal}) at stage {stage}")]
    MissingPolicyCell {
        stage: usize,
        state: String,
        goal: String,
    },

    #[error("mixed action invalid: {0}")]
    InvalidMixedAction(String),

    #[error("enumeration budget of {0} path nodes exceeded")]
    BudgetExceeded(u64),

    #[error("truncation bound undefined for beta = {0}")]
    UndefinedBound(String),

    #[error("one-step absorption bound is zero: certification impossible")]
    AbsorptionBoundZero,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("game file: {0}")]
    GameFile(String),

    #[error("policy file: {0}")]
    PolicyFile(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

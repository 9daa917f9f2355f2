use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("no plants")]
    NoPlants,

    #[error("plant not remotely stabilizable: needs SNR {required:.6e}, budget is {budget:.6e}")]
    NotStabilizable { required: f64, budget: f64 },

    /// A plant-set feasibility criterion failed. `required` is the left-hand
    /// side of the criterion, `budget` the right-hand side.
    #[error("infeasible under the {criterion} criterion: {required:.6e} > {budget:.6e}")]
    Infeasible {
        criterion: &'static str,
        required: f64,
        budget: f64,
    },

    #[error("plant cannot be stabilized with partial CSI: A^2*eta = {a2_eta:.6} >= 1")]
    NotFastStabilizable { a2_eta: f64 },

    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("trajectory too short: need {needed} states, got {got}")]
    ShortTrajectory { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("root bracketing failed for the KKT multiplier")]
    BracketFailure,
}

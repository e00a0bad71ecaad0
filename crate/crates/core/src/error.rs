use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UrnError {
    #[error("dimension mismatch: expected {expected} colours, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty urn: at least one ball is needed to draw")]
    EmptyUrn,
    #[error("reinforcement for colour {colour} must be positive")]
    NonPositiveReinforcement { colour: usize },
    #[error("need at least two colours, got {0}")]
    TooFewColours(usize),
    #[error("colour {colour} starts empty; with {colours} colours every colour needs a ball")]
    MissingColour { colour: usize, colours: usize },
    #[error("criterion {criterion} is not defined for {colours} colours")]
    IncompatibleCriterion { criterion: String, colours: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{what} budget of {limit} exceeded")]
    BudgetExceeded { what: &'static str, limit: u64 },
    #[error("event cap of {cap} exceeded before reaching t = {t_max}")]
    EventCapExceeded { cap: u64, t_max: f64 },
    #[error("time {t} lies beyond the trajectory horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error(
        "truncated tail mass {mass:e} exceeds tolerance {tolerance:e}; increase the truncation"
    )]
    TailMassTooLarge { mass: f64, tolerance: f64 },
    #[error("insufficient degrees of freedom after pooling")]
    InsufficientDegreesOfFreedom,
    #[error("all observed counts are zero")]
    AllZeroObserved,
}

pub type Result<T, E = UrnError> = std::result::Result<T, E>;

impl UrnError {
    /// Budget and cap failures, as opposed to bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            UrnError::BudgetExceeded { .. }
                | UrnError::EventCapExceeded { .. }
                | UrnError::TailMassTooLarge { .. }
        )
    }
}

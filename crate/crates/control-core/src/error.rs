use thiserror::Error;

/// Errors raised by integration, cost evaluation and dataset extraction.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A non-finite state was produced during integration. Carries the last
    /// time at which the state was still finite.
    #[error("integration diverged: non-finite state after t = {last_finite_time}")]
    IntegrationDiverged { last_finite_time: f64 },

    /// A trajectory does not span the interval required by the operation.
    #[error("trajectory ends at t = {got} but the operation requires t = {expected}")]
    HorizonMismatch { expected: f64, got: f64 },

    /// A requested sampling step does not align with the trajectory grid.
    #[error("sampling step {delta} is not aligned with the trajectory grid near t = {near}")]
    Misaligned { delta: f64, near: f64 },

    /// Invalid argument (dimensions, ordering, positivity).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

use crate::{times_close, CoreError};

/// The knots 0 = t_0 < t_1 < ... < t_K = T at which the sampling iteration
/// re-solves open-loop problems.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGrid {
    knots: Vec<f64>,
}

impl TemporalGrid {
    pub fn new(knots: Vec<f64>, horizon: f64) -> Result<Self, CoreError> {
        if knots.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "temporal grid needs at least the two endpoints".into(),
            ));
        }
        if !times_close(knots[0], 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "temporal grid must start at 0, got {}",
                knots[0]
            )));
        }
        if !times_close(*knots.last().unwrap(), horizon) {
            return Err(CoreError::InvalidArgument(format!(
                "temporal grid must end at the horizon {horizon}, got {}",
                knots.last().unwrap()
            )));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidArgument(
                "temporal grid knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of sampling iterations K (intervals, not knots).
    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    /// Interior knots t_1 .. t_{K-1}.
    pub fn interior(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }
}

//! Shared optimal-control primitives.
//!
//! This crate defines the problem and controller interfaces used by every
//! benchmark, a fixed-step RK4 integrator for closed-loop initial value
//! problems, trapezoidal cost evaluation along trajectories, and extraction
//! of evenly spaced time-state-control datasets from solved trajectories.

mod dataset;
mod error;
mod grid;
mod integrate;
mod problem;
mod trajectory;

pub use dataset::{DataPoint, Dataset};
pub use error::CoreError;
pub use grid::TemporalGrid;
pub use integrate::{evaluate_cost, integrate_ivp, integrate_ivp_with, rk4_step, running_cost_quadrature};
pub use problem::{ClosedLoopController, ControlProblem, FnController, ZeroController};
pub use trajectory::{sample_dataset, Trajectory};

/// Relative/absolute tolerance for matching two time stamps on a grid.
pub fn times_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

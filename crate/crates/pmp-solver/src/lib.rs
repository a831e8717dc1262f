//! Indirect open-loop optimal control solver.
//!
//! Builds the Pontryagin system for a [`TpbvpProblem`] (state plus costate
//! with a terminal transversality condition), minimizes the Hamiltonian
//! pointwise in the control, and solves the resulting two-point boundary
//! value problem by multiple shooting with a damped Newton iteration.
//! Initial states far from the target are handled by space-marching
//! continuation along the segment from the target toward the initial state.

mod march;
mod ops;
mod solver;

pub use march::{space_march, MarchSchedule};
pub use ops::{costate_rhs, hamiltonian, minimize_hamiltonian};
pub use solver::{solve_tpbvp, Residuals, SolverOptions, TpbvpSolution};

use control_core::ControlProblem;
use thiserror::Error;

/// A control problem augmented with the derivatives the Pontryagin system
/// needs: dynamics Jacobians, cost gradients and (optionally) a closed-form
/// pointwise Hamiltonian minimizer.
///
/// All Jacobians are row-major: `jac[i * cols + j]` is the derivative of
/// output `i` with respect to input `j`.
pub trait TpbvpProblem: ControlProblem {
    /// df/dx, an n-by-n matrix.
    fn dynamics_jac_state(&self, t: f64, x: &[f64], u: &[f64], jac: &mut [f64]);
    /// df/du, an n-by-m matrix.
    fn dynamics_jac_control(&self, t: f64, x: &[f64], u: &[f64], jac: &mut [f64]);
    /// dL/dx.
    fn running_cost_grad_state(&self, t: f64, x: &[f64], u: &[f64], grad: &mut [f64]);
    /// dL/du.
    fn running_cost_grad_control(&self, t: f64, x: &[f64], u: &[f64], grad: &mut [f64]);
    /// grad M(x).
    fn terminal_cost_grad(&self, x: &[f64], grad: &mut [f64]);

    /// Writes argmin_u H(x, lambda, u) when a closed form is available and
    /// returns true; the solver falls back to a damped Newton iteration on
    /// dH/du otherwise.
    fn minimize_hamiltonian_closed_form(
        &self,
        _t: f64,
        _x: &[f64],
        _lam: &[f64],
        _u: &mut [f64],
    ) -> bool {
        false
    }
}

#[derive(Debug, Clone, Error)]
pub enum PmpError {
    /// The state or costate rollout left the finite range.
    #[error("Pontryagin system rollout diverged after t = {last_finite_time}")]
    IntegrationDiverged { last_finite_time: f64 },

    /// The generic Hamiltonian minimizer did not reach stationarity.
    #[error("Hamiltonian minimization stalled with stationarity residual {residual}")]
    Stationarity { residual: f64 },

    /// Space marching failed at continuation step `step` (1-based).
    #[error("space marching failed at continuation step {step} of {total}")]
    ContinuationFailed {
        step: usize,
        total: usize,
        /// Converged solution of the last successful continuation step.
        last_good: Option<Box<TpbvpSolution>>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A finite-horizon optimal control problem: dynamics, running and terminal
/// costs, horizon and optional per-coordinate control bounds.
///
/// Implementations must be immutable after construction; all methods are
/// pure functions of their arguments and may be called from many threads.
pub trait ControlProblem: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// Horizon length T; the problem lives on [0, T].
    fn horizon(&self) -> f64;
    /// Writes dx/dt = f(t, x, u) into `dxdt` (length `state_dim`).
    fn dynamics(&self, t: f64, x: &[f64], u: &[f64], dxdt: &mut [f64]);
    fn running_cost(&self, t: f64, x: &[f64], u: &[f64]) -> f64;
    fn terminal_cost(&self, x: &[f64]) -> f64;
    /// Per-coordinate lower control bounds, if the problem is constrained.
    fn control_lower(&self) -> Option<&[f64]> {
        None
    }
    fn control_upper(&self) -> Option<&[f64]> {
        None
    }
}

/// A closed-loop (feedback) control function u(t, x).
///
/// Controllers are deterministic given (t, x) and immutable parameters.
pub trait ClosedLoopController: Send + Sync {
    fn control_dim(&self) -> usize;
    /// Writes u(t, x) into `u` (length `control_dim`).
    fn evaluate(&self, t: f64, x: &[f64], u: &mut [f64]);
}

/// Controller wrapping a plain closure; mostly used by tests and fixtures.
pub struct FnController<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    dim: usize,
    f: F,
}

impl<F> FnController<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(control_dim: usize, f: F) -> Self {
        Self { dim: control_dim, f }
    }
}

impl<F> ClosedLoopController for FnController<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn control_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, t: f64, x: &[f64], u: &mut [f64]) {
        (self.f)(t, x, u)
    }
}

/// The identically-zero controller, the conventional start of the
/// sampling iteration before any model has been trained.
pub struct ZeroController {
    dim: usize,
}

impl ZeroController {
    pub fn new(control_dim: usize) -> Self {
        Self { dim: control_dim }
    }
}

impl ClosedLoopController for ZeroController {
    fn control_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, _t: f64, _x: &[f64], u: &mut [f64]) {
        u.fill(0.0);
    }
}

use crate::{ClosedLoopController, ControlProblem, CoreError, Trajectory};

/// One classical RK4 step of the closed-loop system. `eval` computes the
/// control at a (t, x) pair; it is called at the step endpoints and at the
/// midpoint.
pub fn rk4_step(
    problem: &dyn ControlProblem,
    eval: &mut dyn FnMut(f64, &[f64], &mut [f64]),
    t: f64,
    x: &[f64],
    dt: f64,
) -> Vec<f64> {
    let n = problem.state_dim();
    let m = problem.control_dim();
    let mut u = vec![0.0; m];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut xs = vec![0.0; n];

    eval(t, x, &mut u);
    problem.dynamics(t, x, &u, &mut k1);

    let tm = t + 0.5 * dt;
    for i in 0..n {
        xs[i] = x[i] + 0.5 * dt * k1[i];
    }
    eval(tm, &xs, &mut u);
    problem.dynamics(tm, &xs, &u, &mut k2);

    for i in 0..n {
        xs[i] = x[i] + 0.5 * dt * k2[i];
    }
    eval(tm, &xs, &mut u);
    problem.dynamics(tm, &xs, &u, &mut k3);

    let te = t + dt;
    for i in 0..n {
        xs[i] = x[i] + dt * k3[i];
    }
    eval(te, &xs, &mut u);
    problem.dynamics(te, &xs, &u, &mut k4);

    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn clamp_to_bounds(problem: &dyn ControlProblem, u: &mut [f64]) {
    if let Some(lo) = problem.control_lower() {
        for (v, &l) in u.iter_mut().zip(lo) {
            if *v < l {
                *v = l;
            }
        }
    }
    if let Some(hi) = problem.control_upper() {
        for (v, &h) in u.iter_mut().zip(hi) {
            if *v > h {
                *v = h;
            }
        }
    }
}

/// Integrates the closed-loop initial value problem from (t0, x0) to t1
/// with fixed step `dt` (one trailing short step is allowed when dt does
/// not divide the span). Controls are recorded at every node; controller
/// output is clamped coordinate-wise when the problem carries bounds.
pub fn integrate_ivp(
    problem: &dyn ControlProblem,
    controller: &dyn ClosedLoopController,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory, CoreError> {
    let mut eval = |t: f64, x: &[f64], u: &mut [f64]| {
        controller.evaluate(t, x, u);
        clamp_to_bounds(problem, u);
    };
    integrate_ivp_with(problem, &mut eval, x0, t0, t1, dt)
}

/// [`integrate_ivp`] with an arbitrary control evaluation closure; used
/// where the control input must be instrumented (e.g. disturbance studies).
pub fn integrate_ivp_with(
    problem: &dyn ControlProblem,
    eval: &mut dyn FnMut(f64, &[f64], &mut [f64]),
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory, CoreError> {
    if dt <= 0.0 {
        return Err(CoreError::InvalidArgument(format!(
            "integration step must be positive, got {dt}"
        )));
    }
    if t1 <= t0 {
        return Err(CoreError::InvalidArgument(format!(
            "integration span [{t0}, {t1}] is empty"
        )));
    }
    if x0.len() != problem.state_dim() {
        return Err(CoreError::InvalidArgument(format!(
            "initial state has {} entries, problem expects {}",
            x0.len(),
            problem.state_dim()
        )));
    }
    let span = t1 - t0;
    let n_full = (span / dt + 1e-9).floor() as usize;
    let remainder = span - n_full as f64 * dt;
    let short_step = if remainder > 1e-9 * (1.0 + t1.abs()) {
        Some(remainder)
    } else {
        None
    };
    let n_steps = n_full + short_step.map_or(0, |_| 1);

    let m = problem.control_dim();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps + 1);

    let mut t = t0;
    let mut x = x0.to_vec();
    let mut u = vec![0.0; m];
    eval(t, &x, &mut u);
    times.push(t);
    states.push(x.clone());
    controls.push(u.clone());

    for k in 0..n_steps {
        let h = if k < n_full { dt } else { short_step.unwrap() };
        let x_next = rk4_step(problem, eval, t, &x, h);
        if x_next.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::IntegrationDiverged {
                last_finite_time: t,
            });
        }
        // Pin the final node to t1 exactly; accumulated t0 + k*dt drifts.
        t = if k + 1 == n_steps { t1 } else { t0 + (k + 1) as f64 * dt };
        x = x_next;
        eval(t, &x, &mut u);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::IntegrationDiverged {
                last_finite_time: t,
            });
        }
        times.push(t);
        states.push(x.clone());
        controls.push(u.clone());
    }

    Trajectory::new(times, states, controls)
}

/// Trapezoidal quadrature of the running cost along a trajectory, without
/// the terminal cost. Does not require the trajectory to reach the horizon.
pub fn running_cost_quadrature(problem: &dyn ControlProblem, traj: &Trajectory) -> f64 {
    let times = traj.times();
    let mut vals = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        vals.push(problem.running_cost(times[k], traj.state(k), traj.control(k)));
    }
    let mut acc = 0.0;
    for k in 0..times.len() - 1 {
        acc += 0.5 * (times[k + 1] - times[k]) * (vals[k] + vals[k + 1]);
    }
    acc
}

/// Total cost of a trajectory that ends at the problem horizon: trapezoidal
/// quadrature of the running cost plus the terminal cost.
pub fn evaluate_cost(problem: &dyn ControlProblem, traj: &Trajectory) -> Result<f64, CoreError> {
    let t_end = traj.end_time();
    if !crate::times_close(t_end, problem.horizon()) {
        return Err(CoreError::HorizonMismatch {
            expected: problem.horizon(),
            got: t_end,
        });
    }
    Ok(running_cost_quadrature(problem, traj) + problem.terminal_cost(traj.final_state()))
}

use control_core::{
    evaluate_cost, integrate_ivp, sample_dataset, ClosedLoopController, ControlProblem,
    CoreError, Dataset, FnController, TemporalGrid, Trajectory, ZeroController,
};

/// The scalar double-integrator-free LQR test problem: dx/dt = u,
/// L = u^2 / T, M = x^2.
struct ScalarLqr {
    horizon: f64,
}

impl ControlProblem for ScalarLqr {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn dynamics(&self, _t: f64, _x: &[f64], u: &[f64], dxdt: &mut [f64]) {
        dxdt[0] = u[0];
    }
    fn running_cost(&self, _t: f64, _x: &[f64], u: &[f64]) -> f64 {
        u[0] * u[0] / self.horizon
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        x[0] * x[0]
    }
}

fn lqr_optimal(horizon: f64) -> impl ClosedLoopController {
    FnController::new(1, move |t, x: &[f64], u: &mut [f64]| {
        u[0] = -horizon * x[0] / (horizon * (horizon - t) + 1.0);
    })
}

struct ZeroDynamics;

impl ControlProblem for ZeroDynamics {
    fn state_dim(&self) -> usize {
        2
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        1.0
    }
    fn dynamics(&self, _t: f64, _x: &[f64], _u: &[f64], dxdt: &mut [f64]) {
        dxdt.fill(0.0);
    }
    fn running_cost(&self, _t: f64, _x: &[f64], _u: &[f64]) -> f64 {
        0.0
    }
    fn terminal_cost(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
}

#[test]
fn zero_dynamics_keeps_state_constant() {
    let problem = ZeroDynamics;
    let ctrl = ZeroController::new(1);
    let traj = integrate_ivp(&problem, &ctrl, &[1.0, 2.0], 0.0, 1.0, 0.1).unwrap();
    for k in 0..traj.len() {
        assert_eq!(traj.state(k), &[1.0, 2.0]);
    }
}

#[test]
fn lqr_optimal_rollout_matches_analytic_state() {
    // x(t) = (T(T-t)+1)/(T^2+1) * x0 with T = 1, x0 = 1 gives x(1) = 0.5.
    let problem = ScalarLqr { horizon: 1.0 };
    let ctrl = lqr_optimal(1.0);
    let traj = integrate_ivp(&problem, &ctrl, &[1.0], 0.0, 1.0, 1e-3).unwrap();
    assert!((traj.final_state()[0] - 0.5).abs() < 1e-6);
}

#[test]
fn lqr_optimal_cost_is_analytic_for_several_horizons() {
    for horizon in [1.0, 2.0, 4.0, 8.0] {
        let problem = ScalarLqr { horizon };
        let ctrl = lqr_optimal(horizon);
        let x0 = 1.0;
        let traj = integrate_ivp(&problem, &ctrl, &[x0], 0.0, horizon, 1e-3).unwrap();
        let cost = evaluate_cost(&problem, &traj).unwrap();
        let expected = x0 * x0 / (horizon * horizon + 1.0);
        assert!(
            (cost - expected).abs() < 1e-6,
            "T = {horizon}: cost {cost} vs analytic {expected}"
        );
    }
}

#[test]
fn cost_of_terminal_only_problem_at_origin_is_zero() {
    let problem = ZeroDynamics;
    let traj = Trajectory::new(
        vec![0.0, 1.0],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![vec![0.0], vec![0.0]],
    )
    .unwrap();
    assert_eq!(evaluate_cost(&problem, &traj).unwrap(), 0.0);
}

#[test]
fn constant_control_cost_is_exact_for_trapezoid() {
    // L = u^2 with T = 1 in the normalization, u = 2 constant: integral 4.
    struct P;
    impl ControlProblem for P {
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            1.0
        }
        fn dynamics(&self, _t: f64, _x: &[f64], u: &[f64], dxdt: &mut [f64]) {
            dxdt[0] = u[0];
        }
        fn running_cost(&self, _t: f64, _x: &[f64], u: &[f64]) -> f64 {
            u[0] * u[0]
        }
        fn terminal_cost(&self, _x: &[f64]) -> f64 {
            0.0
        }
    }
    let ctrl = FnController::new(1, |_t, _x: &[f64], u: &mut [f64]| u[0] = 2.0);
    let traj = integrate_ivp(&P, &ctrl, &[0.0], 0.0, 1.0, 0.125).unwrap();
    assert_eq!(evaluate_cost(&P, &traj).unwrap(), 4.0);
}

#[test]
fn cost_requires_trajectory_reaching_horizon() {
    let problem = ScalarLqr { horizon: 2.0 };
    let ctrl = lqr_optimal(2.0);
    let traj = integrate_ivp(&problem, &ctrl, &[1.0], 0.0, 1.0, 0.1).unwrap();
    match evaluate_cost(&problem, &traj) {
        Err(CoreError::HorizonMismatch { expected, got }) => {
            assert_eq!(expected, 2.0);
            assert_eq!(got, 1.0);
        }
        other => panic!("expected horizon mismatch, got {other:?}"),
    }
}

#[test]
fn divergence_reports_last_finite_time() {
    struct Blowup;
    impl ControlProblem for Blowup {
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            10.0
        }
        fn dynamics(&self, _t: f64, x: &[f64], _u: &[f64], dxdt: &mut [f64]) {
            // Finite-time blowup: dx/dt = x^2 from x0 = 1 escapes at t = 1.
            dxdt[0] = x[0] * x[0];
        }
        fn running_cost(&self, _t: f64, _x: &[f64], _u: &[f64]) -> f64 {
            0.0
        }
        fn terminal_cost(&self, _x: &[f64]) -> f64 {
            0.0
        }
    }
    let ctrl = ZeroController::new(1);
    match integrate_ivp(&Blowup, &ctrl, &[1.0], 0.0, 10.0, 0.05) {
        Err(CoreError::IntegrationDiverged { last_finite_time }) => {
            assert!(last_finite_time > 0.5 && last_finite_time < 10.0);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn rk4_convergence_order_on_linear_feedback() {
    // dx/dt = -x (the stationary LQR feedback), exact solution e^{-t} x0.
    struct P;
    impl ControlProblem for P {
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            1.0
        }
        fn dynamics(&self, _t: f64, _x: &[f64], u: &[f64], dxdt: &mut [f64]) {
            dxdt[0] = u[0];
        }
        fn running_cost(&self, _t: f64, _x: &[f64], _u: &[f64]) -> f64 {
            0.0
        }
        fn terminal_cost(&self, _x: &[f64]) -> f64 {
            0.0
        }
    }
    let ctrl = FnController::new(1, |_t, x: &[f64], u: &mut [f64]| u[0] = -x[0]);
    let exact = (-1.0f64).exp();
    let err = |dt: f64| {
        let traj = integrate_ivp(&P, &ctrl, &[1.0], 0.0, 1.0, dt).unwrap();
        (traj.final_state()[0] - exact).abs()
    };
    let e1 = err(0.02);
    let e2 = err(0.01);
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "empirical order {order} (errors {e1}, {e2})");
}

#[test]
fn control_bounds_clamp_controller_output() {
    struct P;
    impl ControlProblem for P {
        fn state_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            1.0
        }
        fn dynamics(&self, _t: f64, _x: &[f64], u: &[f64], dxdt: &mut [f64]) {
            dxdt[0] = u[0];
        }
        fn running_cost(&self, _t: f64, _x: &[f64], _u: &[f64]) -> f64 {
            0.0
        }
        fn terminal_cost(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn control_lower(&self) -> Option<&[f64]> {
            Some(&[-1.0])
        }
        fn control_upper(&self) -> Option<&[f64]> {
            Some(&[1.0])
        }
    }
    let ctrl = FnController::new(1, |_t, _x: &[f64], u: &mut [f64]| u[0] = 5.0);
    let traj = integrate_ivp(&P, &ctrl, &[0.0], 0.0, 1.0, 0.1).unwrap();
    assert!(traj.controls().iter().all(|u| u[0] == 1.0));
    assert!((traj.final_state()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn dataset_point_counts_match_protocol() {
    // A 16-second horizon sampled at 0.2 gives 81 tuples per trajectory.
    let problem = ZeroDynamics;
    let ctrl = ZeroController::new(1);
    let traj = integrate_ivp(&problem, &ctrl, &[0.0, 0.0], 0.0, 16.0, 0.02).unwrap();
    let pts = sample_dataset(&traj, 0.2).unwrap();
    assert_eq!(pts.len(), 81);

    // delta equal to the integration step returns every node.
    let traj = integrate_ivp(&problem, &ctrl, &[0.0, 0.0], 0.0, 1.0, 0.1).unwrap();
    let pts = sample_dataset(&traj, 0.1).unwrap();
    assert_eq!(pts.len(), traj.len());

    // A 2-second span at delta = 1 gives samples at {t0, t0+1, t0+2}.
    let traj = integrate_ivp(&problem, &ctrl, &[0.0, 0.0], 1.0, 3.0, 0.25).unwrap();
    let pts = sample_dataset(&traj, 1.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(pts[0].t, 1.0);
    assert_eq!(pts[2].t, 3.0);
}

#[test]
fn dataset_count_formula_holds_when_delta_divides_span() {
    let problem = ZeroDynamics;
    let ctrl = ZeroController::new(1);
    for (span, delta) in [(4.0, 0.5), (6.0, 1.5), (16.0, 4.0)] {
        let traj = integrate_ivp(&problem, &ctrl, &[0.0, 0.0], 0.0, span, 0.25).unwrap();
        let pts = sample_dataset(&traj, delta).unwrap();
        assert_eq!(pts.len(), (span / delta).floor() as usize + 1);
    }
}

#[test]
fn misaligned_delta_is_rejected() {
    let problem = ZeroDynamics;
    let ctrl = ZeroController::new(1);
    let traj = integrate_ivp(&problem, &ctrl, &[0.0, 0.0], 0.0, 1.0, 0.1).unwrap();
    assert!(matches!(
        sample_dataset(&traj, 0.15),
        Err(CoreError::Misaligned { .. })
    ));
}

#[test]
fn splice_replaces_tail_and_keeps_head() {
    let mut old = Dataset::new(1.0).unwrap();
    old.push_trajectory(
        0,
        (0..=4)
            .map(|k| control_core::DataPoint {
                t: k as f64,
                x: vec![k as f64],
                u: vec![0.0],
            })
            .collect(),
    )
    .unwrap();
    let mut newer = Dataset::new(1.0).unwrap();
    newer
        .push_trajectory(
            0,
            (2..=4)
                .map(|k| control_core::DataPoint {
                    t: k as f64,
                    x: vec![10.0 + k as f64],
                    u: vec![1.0],
                })
                .collect(),
        )
        .unwrap();
    let spliced = old.splice(&newer, 2.0);
    assert_eq!(spliced.len(), old.len());
    for (_, p) in spliced.iter() {
        if p.t < 2.0 {
            assert_eq!(p.u, vec![0.0], "head must come from the old dataset");
        } else {
            assert_eq!(p.u, vec![1.0], "tail must come from the new dataset");
        }
    }
}

#[test]
fn temporal_grid_validation() {
    assert!(TemporalGrid::new(vec![0.0, 10.0, 14.0, 16.0], 16.0).is_ok());
    assert!(TemporalGrid::new(vec![0.0, 16.0], 16.0).is_ok());
    assert!(TemporalGrid::new(vec![0.0, 10.0], 16.0).is_err());
    assert!(TemporalGrid::new(vec![1.0, 16.0], 16.0).is_err());
    assert!(TemporalGrid::new(vec![0.0, 12.0, 12.0, 16.0], 16.0).is_err());
}

#[test]
fn trajectory_csv_header_layout() {
    let traj = Trajectory::new(
        vec![0.0, 0.5],
        vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        vec![vec![5.0], vec![6.0]],
    )
    .unwrap();
    let csv = traj.to_csv();
    assert!(csv.starts_with("t,x0,x1,u0\n"));
    assert_eq!(csv.lines().count(), 3);
}

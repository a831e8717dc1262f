use crate::{PmpError, TpbvpProblem};
use nalgebra::{DMatrix, DVector};

/// H(x, lambda, u) = L(x, u) + lambda . f(x, u).
pub fn hamiltonian(prob: &dyn TpbvpProblem, t: f64, x: &[f64], lam: &[f64], u: &[f64]) -> f64 {
    let n = prob.state_dim();
    let mut f = vec![0.0; n];
    prob.dynamics(t, x, u, &mut f);
    prob.running_cost(t, x, u) + lam.iter().zip(&f).map(|(l, fi)| l * fi).sum::<f64>()
}

/// dH/du = dL/du + (df/du)^T lambda, written into `grad` (length m).
pub fn hamiltonian_grad_control(
    prob: &dyn TpbvpProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    u: &[f64],
    grad: &mut [f64],
    jac_u_scratch: &mut [f64],
) {
    let n = prob.state_dim();
    let m = prob.control_dim();
    prob.running_cost_grad_control(t, x, u, grad);
    prob.dynamics_jac_control(t, x, u, jac_u_scratch);
    for j in 0..m {
        let mut acc = 0.0;
        for i in 0..n {
            acc += jac_u_scratch[i * m + j] * lam[i];
        }
        grad[j] += acc;
    }
}

/// Pointwise minimizer of the Hamiltonian in the control.
///
/// Uses the problem's closed form when it provides one; otherwise runs a
/// damped Newton iteration on dH/du with a finite-difference Hessian until
/// the stationarity residual drops below 1e-10.
pub fn minimize_hamiltonian(
    prob: &dyn TpbvpProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    u: &mut [f64],
) -> Result<(), PmpError> {
    if prob.minimize_hamiltonian_closed_form(t, x, lam, u) {
        return Ok(());
    }
    let n = prob.state_dim();
    let m = prob.control_dim();
    let mut grad = vec![0.0; m];
    let mut grad_p = vec![0.0; m];
    let mut grad_m = vec![0.0; m];
    let mut jac_u = vec![0.0; n * m];
    u.fill(0.0);

    let tol = 1e-10;
    for _ in 0..60 {
        hamiltonian_grad_control(prob, t, x, lam, u, &mut grad, &mut jac_u);
        let res = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if res < tol {
            return Ok(());
        }
        // Finite-difference Hessian of H in u (central differences of dH/du).
        let mut hess = DMatrix::zeros(m, m);
        let mut u_pert = u.to_vec();
        for j in 0..m {
            let h = 1e-6 * (1.0 + u[j].abs());
            u_pert[j] = u[j] + h;
            hamiltonian_grad_control(prob, t, x, lam, &u_pert, &mut grad_p, &mut jac_u);
            u_pert[j] = u[j] - h;
            hamiltonian_grad_control(prob, t, x, lam, &u_pert, &mut grad_m, &mut jac_u);
            u_pert[j] = u[j];
            for i in 0..m {
                hess[(i, j)] = (grad_p[i] - grad_m[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(m, grad.iter().map(|g| -g));
        let step = match hess.lu().solve(&rhs) {
            Some(s) => s,
            None => return Err(PmpError::Stationarity { residual: res }),
        };
        // Backtracking on the gradient norm keeps the iteration from
        // overshooting on non-quadratic Hamiltonians.
        let base_norm: f64 = grad.iter().map(|g| g * g).sum();
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha >= 1e-4 {
            let cand: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(ui, s)| ui + alpha * s)
                .collect();
            hamiltonian_grad_control(prob, t, x, lam, &cand, &mut grad_p, &mut jac_u);
            let cand_norm: f64 = grad_p.iter().map(|g| g * g).sum();
            if cand_norm <= base_norm * (1.0 - 1e-4 * alpha) || cand_norm < tol * tol {
                u.copy_from_slice(&cand);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(PmpError::Stationarity { residual: res });
        }
    }
    let mut final_grad = vec![0.0; m];
    hamiltonian_grad_control(prob, t, x, lam, u, &mut final_grad, &mut jac_u);
    let res = final_grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if res < 1e-10 {
        Ok(())
    } else {
        Err(PmpError::Stationarity { residual: res })
    }
}

/// Costate equation right-hand side at the Hamiltonian minimizer:
/// d(lambda)/dt = -(dL/dx + (df/dx)^T lambda).
pub fn costate_rhs(
    prob: &dyn TpbvpProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    u: &[f64],
    out: &mut [f64],
) {
    let n = prob.state_dim();
    let mut jac_x = vec![0.0; n * n];
    costate_rhs_with(prob, t, x, lam, u, out, &mut jac_x);
}

/// [`costate_rhs`] with a caller-provided n*n scratch buffer for df/dx.
pub fn costate_rhs_with(
    prob: &dyn TpbvpProblem,
    t: f64,
    x: &[f64],
    lam: &[f64],
    u: &[f64],
    out: &mut [f64],
    jac_x_scratch: &mut [f64],
) {
    let n = prob.state_dim();
    prob.running_cost_grad_state(t, x, u, out);
    prob.dynamics_jac_state(t, x, u, jac_x_scratch);
    for j in 0..n {
        let mut acc = out[j];
        for i in 0..n {
            acc += jac_x_scratch[i * n + j] * lam[i];
        }
        out[j] = -acc;
    }
}

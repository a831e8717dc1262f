use crate::{ops, PmpError, TpbvpProblem};
use control_core::{evaluate_cost, Trajectory};
use nalgebra::{DMatrix, DVector};

/// Tolerances and discretization of the multiple-shooting solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Number of shooting segments.
    pub segments: usize,
    /// Integration step for the Pontryagin system; the effective step is
    /// adjusted so that it divides the horizon exactly.
    pub dt: f64,
    /// Terminal condition tolerance, relative to 1 + ||grad M||.
    pub tol_bc: f64,
    /// Pointwise stationarity tolerance |dH/du|.
    pub tol_stationarity: f64,
    /// Shooting continuity tolerance (re-integrated state mismatch).
    pub tol_mesh: f64,
    /// Newton stopping tolerance on the max-norm of the shooting residual.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Base relative step for finite-difference shooting Jacobians.
    pub fd_step: f64,
    /// Continuation steps used by space marching when building default
    /// schedules.
    pub march_steps: usize,
    /// Whether repeated solves along a sampling iteration reuse the
    /// previous solution as the initial guess.
    pub warm_start_from_previous: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            segments: 8,
            dt: 0.02,
            tol_bc: 1e-6,
            tol_stationarity: 1e-8,
            tol_mesh: 1e-8,
            newton_tol: 1e-9,
            max_newton_iters: 80,
            fd_step: 1e-6,
            march_steps: 10,
            warm_start_from_previous: true,
        }
    }
}

/// Residual diagnostics of a converged (or attempted) solve.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    /// ||lambda(T) - grad M(x(T))||_2.
    pub terminal_costate_gap: f64,
    /// max_t ||dH/du||_inf along the returned trajectory.
    pub max_stationarity: f64,
    /// Largest shooting continuity defect (max-norm).
    pub mesh_residual: f64,
}

/// State and costate trajectories of one open-loop solve.
#[derive(Debug, Clone)]
pub struct TpbvpSolution {
    pub trajectory: Trajectory,
    /// One costate vector per trajectory node.
    pub costates: Vec<Vec<f64>>,
    pub converged: bool,
    pub residuals: Residuals,
    pub newton_iters: usize,
    /// Total cost of the returned trajectory.
    pub cost: f64,
}

impl TpbvpSolution {
    /// Linear interpolation of the costate at an arbitrary time.
    pub fn costate_interp(&self, t: f64) -> Vec<f64> {
        let times = self.trajectory.times();
        if t <= times[0] {
            return self.costates[0].clone();
        }
        if t >= *times.last().unwrap() {
            return self.costates.last().unwrap().clone();
        }
        let hi = times.partition_point(|&s| s < t).max(1);
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        self.costates[lo]
            .iter()
            .zip(&self.costates[hi])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// Scratch buffers reused across every integration of one solve.
struct Workspace {
    u: Vec<f64>,
    f: Vec<f64>,
    jac_x: Vec<f64>,
    k: [Vec<f64>; 4],
    y_stage: Vec<f64>,
    /// Base segment outputs cached by the latest residual evaluation.
    seg_outputs: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(n: usize, m: usize, segments: usize) -> Self {
        Self {
            u: vec![0.0; m],
            f: vec![0.0; n],
            jac_x: vec![0.0; n * n],
            k: std::array::from_fn(|_| vec![0.0; 2 * n]),
            y_stage: vec![0.0; 2 * n],
            seg_outputs: vec![Vec::new(); segments],
        }
    }
}

struct Shooting<'a> {
    prob: &'a dyn TpbvpProblem,
    x0: &'a [f64],
    /// Shooting node times, segments + 1 entries.
    node_times: Vec<f64>,
    /// Integration steps per segment.
    seg_steps: Vec<usize>,
    dt: f64,
    n: usize,
    m: usize,
}

impl<'a> Shooting<'a> {
    /// Augmented right-hand side at (t, y) with y = (x, lambda); control is
    /// the pointwise Hamiltonian minimizer. Returns false on failure.
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64], ws: &mut Workspace) -> bool {
        let n = self.n;
        let (x, lam) = y.split_at(n);
        if !self
            .prob
            .minimize_hamiltonian_closed_form(t, x, lam, &mut ws.u)
        {
            let mut u = std::mem::take(&mut ws.u);
            let ok = ops::minimize_hamiltonian(self.prob, t, x, lam, &mut u).is_ok();
            ws.u = u;
            if !ok {
                return false;
            }
        }
        self.prob.dynamics(t, x, &ws.u, &mut ws.f);
        out[..n].copy_from_slice(&ws.f);
        ops::costate_rhs_with(
            self.prob,
            t,
            x,
            lam,
            &ws.u,
            &mut out[n..],
            &mut ws.jac_x,
        );
        out.iter().all(|v| v.is_finite())
    }

    fn rk4_aug(&self, t: f64, y: &mut [f64], h: f64, ws: &mut Workspace) -> bool {
        let dim = 2 * self.n;
        let mut k = std::mem::take(&mut ws.k);
        let mut stage = std::mem::take(&mut ws.y_stage);
        let mut ok = self.rhs(t, y, &mut k[0], ws);
        if ok {
            for i in 0..dim {
                stage[i] = y[i] + 0.5 * h * k[0][i];
            }
            ok = self.rhs(t + 0.5 * h, &stage, &mut k[1], ws);
        }
        if ok {
            for i in 0..dim {
                stage[i] = y[i] + 0.5 * h * k[1][i];
            }
            ok = self.rhs(t + 0.5 * h, &stage, &mut k[2], ws);
        }
        if ok {
            for i in 0..dim {
                stage[i] = y[i] + h * k[2][i];
            }
            ok = self.rhs(t + h, &stage, &mut k[3], ws);
        }
        if ok {
            for i in 0..dim {
                y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            ok = y.iter().all(|v| v.is_finite());
        }
        ws.k = k;
        ws.y_stage = stage;
        ok
    }

    /// Integrates segment `k` from the given node values. Returns the
    /// terminal (x, lambda) of the segment, or None on divergence.
    fn integrate_segment(
        &self,
        seg: usize,
        x: &[f64],
        lam: &[f64],
        ws: &mut Workspace,
        mut record: Option<&mut Vec<(f64, Vec<f64>, Vec<f64>)>>,
    ) -> Option<Vec<f64>> {
        let n = self.n;
        let mut y = vec![0.0; 2 * n];
        y[..n].copy_from_slice(x);
        y[n..].copy_from_slice(lam);
        let t_start = self.node_times[seg];
        if let Some(rec) = record.as_deref_mut() {
            rec.push((t_start, x.to_vec(), lam.to_vec()));
        }
        for step in 0..self.seg_steps[seg] {
            let t = t_start + step as f64 * self.dt;
            if !self.rk4_aug(t, &mut y, self.dt, ws) {
                return None;
            }
            if let Some(rec) = record.as_deref_mut() {
                let t_next = if step + 1 == self.seg_steps[seg] {
                    self.node_times[seg + 1]
                } else {
                    t_start + (step + 1) as f64 * self.dt
                };
                rec.push((t_next, y[..n].to_vec(), y[n..].to_vec()));
            }
        }
        Some(y)
    }

    /// Output map of segment `k`: end (x, lambda) for interior segments,
    /// the terminal costate residual lambda(T) - grad M(x(T)) for the last.
    fn segment_output(&self, seg: usize, node: &[f64], ws: &mut Workspace) -> Option<Vec<f64>> {
        let n = self.n;
        let (x, lam) = if seg == 0 {
            (self.x0, node)
        } else {
            node.split_at(n)
        };
        let y_end = self.integrate_segment(seg, x, lam, ws, None)?;
        if seg + 1 == self.seg_steps.len() {
            let mut grad = vec![0.0; n];
            self.prob.terminal_cost_grad(&y_end[..n], &mut grad);
            Some((0..n).map(|i| y_end[n + i] - grad[i]).collect())
        } else {
            Some(y_end)
        }
    }

    fn segments(&self) -> usize {
        self.seg_steps.len()
    }

    /// Unknown-vector slice boundaries for a shooting node.
    fn node_range(&self, node: usize) -> std::ops::Range<usize> {
        let n = self.n;
        if node == 0 {
            0..n
        } else {
            n + (node - 1) * 2 * n..n + node * 2 * n
        }
    }

    fn unknown_count(&self) -> usize {
        self.n * (2 * self.segments() - 1)
    }

    /// Residual rows of segment `k`'s output block.
    fn row_range(&self, seg: usize) -> std::ops::Range<usize> {
        let n = self.n;
        let start = seg * 2 * n;
        if seg + 1 == self.segments() {
            start..start + n
        } else {
            start..start + 2 * n
        }
    }

    fn residual(&self, z: &DVector<f64>, ws: &mut Workspace) -> Option<DVector<f64>> {
        let mut r = DVector::zeros(self.unknown_count());
        let s = self.segments();
        for seg in 0..s {
            let node = &z.as_slice()[self.node_range(seg)];
            let out = self.segment_output(seg, node, ws)?;
            ws.seg_outputs[seg] = out.clone();
            let rows = self.row_range(seg);
            if seg + 1 == s {
                for (i, row) in rows.enumerate() {
                    r[row] = out[i];
                }
            } else {
                let next = &z.as_slice()[self.node_range(seg + 1)];
                for (i, row) in rows.enumerate() {
                    r[row] = out[i] - next[i];
                }
            }
        }
        Some(r)
    }

    /// Forward-difference Jacobian of the shooting residual, exploiting the
    /// block-bidiagonal structure: each segment output depends only on its
    /// own node, each junction subtracts the next node.
    fn jacobian(&self, z: &DVector<f64>, fd_step: f64, ws: &mut Workspace) -> DMatrix<f64> {
        let dim = self.unknown_count();
        let n = self.n;
        let mut jac = DMatrix::zeros(dim, dim);
        let s = self.segments();
        for seg in 0..s {
            let cols = self.node_range(seg);
            let rows = self.row_range(seg);
            let base = ws.seg_outputs[seg].clone();
            let node: Vec<f64> = z.as_slice()[cols.clone()].to_vec();
            for (j, col) in cols.clone().enumerate() {
                let h = fd_step * (1.0 + node[j].abs());
                let mut pert = node.clone();
                pert[j] += h;
                let out = self
                    .segment_output(seg, &pert, ws)
                    .unwrap_or_else(|| base.clone());
                for (i, row) in rows.clone().enumerate() {
                    jac[(row, col)] = (out[i] - base[i]) / h;
                }
            }
            if seg + 1 < s {
                let next_cols = self.node_range(seg + 1);
                for (i, row) in rows.clone().enumerate() {
                    jac[(row, next_cols.start + i)] = -1.0;
                }
            }
        }
        let _ = n;
        jac
    }
}

fn build_shooting<'a>(
    prob: &'a dyn TpbvpProblem,
    x0: &'a [f64],
    t0: f64,
    opts: &SolverOptions,
) -> Result<Shooting<'a>, PmpError> {
    let horizon = prob.horizon();
    let span = horizon - t0;
    if span <= 0.0 {
        return Err(PmpError::InvalidArgument(format!(
            "initial time {t0} is not before the horizon {horizon}"
        )));
    }
    if x0.len() != prob.state_dim() {
        return Err(PmpError::InvalidArgument(format!(
            "initial state has {} entries, problem expects {}",
            x0.len(),
            prob.state_dim()
        )));
    }
    let n_total = ((span / opts.dt).round() as usize).max(1);
    let dt = span / n_total as f64;
    let segments = opts.segments.clamp(1, n_total);
    let base = n_total / segments;
    let rem = n_total % segments;
    let mut seg_steps = Vec::with_capacity(segments);
    let mut node_times = Vec::with_capacity(segments + 1);
    node_times.push(t0);
    let mut acc = 0usize;
    for k in 0..segments {
        let steps = base + usize::from(k < rem);
        acc += steps;
        seg_steps.push(steps);
        node_times.push(if k + 1 == segments {
            horizon
        } else {
            t0 + acc as f64 * dt
        });
    }
    Ok(Shooting {
        prob,
        x0,
        node_times,
        seg_steps,
        dt,
        n: prob.state_dim(),
        m: prob.control_dim(),
    })
}

/// Builds the cold-start unknown vector: states from a rollout under the
/// zero-costate reference control, costates frozen at grad M of the rollout
/// endpoint.
fn cold_start(sh: &Shooting, ws: &mut Workspace) -> DVector<f64> {
    let n = sh.n;
    let mut z = DVector::zeros(sh.unknown_count());
    // State-only rollout with lambda = 0 (the control reference).
    let mut y = vec![0.0; 2 * n];
    y[..n].copy_from_slice(sh.x0);
    let mut node_states = vec![sh.x0.to_vec()];
    let mut ok = true;
    for seg in 0..sh.segments() {
        let t_start = sh.node_times[seg];
        for step in 0..sh.seg_steps[seg] {
            y[n..].fill(0.0);
            if !sh.rk4_aug(t_start + step as f64 * sh.dt, &mut y, sh.dt, ws) {
                ok = false;
                break;
            }
        }
        if !ok {
            break;
        }
        node_states.push(y[..n].to_vec());
    }
    let x_ref = if ok {
        node_states.last().unwrap().clone()
    } else {
        sh.x0.to_vec()
    };
    let mut lam_cold = vec![0.0; n];
    sh.prob.terminal_cost_grad(&x_ref, &mut lam_cold);

    z.as_mut_slice()[..n].copy_from_slice(&lam_cold);
    for node in 1..sh.segments() {
        let range = sh.node_range(node);
        let xs = node_states
            .get(node)
            .cloned()
            .unwrap_or_else(|| sh.x0.to_vec());
        z.as_mut_slice()[range.start..range.start + n].copy_from_slice(&xs);
        z.as_mut_slice()[range.start + n..range.end].copy_from_slice(&lam_cold);
    }
    z
}

fn warm_start(sh: &Shooting, guess: &TpbvpSolution) -> DVector<f64> {
    let n = sh.n;
    let mut z = DVector::zeros(sh.unknown_count());
    let lam0 = guess.costate_interp(sh.node_times[0]);
    z.as_mut_slice()[..n].copy_from_slice(&lam0);
    for node in 1..sh.segments() {
        let t = sh.node_times[node];
        let range = sh.node_range(node);
        let xs = guess.trajectory.state_interp(t);
        let ls = guess.costate_interp(t);
        z.as_mut_slice()[range.start..range.start + n].copy_from_slice(&xs);
        z.as_mut_slice()[range.start + n..range.end].copy_from_slice(&ls);
    }
    z
}

/// Solves the two-point boundary value problem by multiple shooting with a
/// damped Newton iteration on the junction and terminal residuals.
///
/// Newton failure (divergence of the iteration, stalled line search,
/// iteration cap) returns a solution with `converged = false` and residuals
/// populated; a rollout that leaves the finite range from the initial guess
/// itself is an error.
pub fn solve_tpbvp(
    prob: &dyn TpbvpProblem,
    x0: &[f64],
    t0: f64,
    guess: Option<&TpbvpSolution>,
    opts: &SolverOptions,
) -> Result<TpbvpSolution, PmpError> {
    let sh = build_shooting(prob, x0, t0, opts)?;
    let mut ws = Workspace::new(sh.n, sh.m, sh.segments());

    let mut z = match guess {
        Some(g) => warm_start(&sh, g),
        None => cold_start(&sh, &mut ws),
    };
    let mut residual = match sh.residual(&z, &mut ws) {
        Some(r) => r,
        None => {
            return Err(PmpError::IntegrationDiverged {
                last_finite_time: t0,
            })
        }
    };

    let mut best_z = z.clone();
    let mut best_norm = residual.amax();
    let mut iters = 0usize;
    let mut stalls = 0usize;

    while iters < opts.max_newton_iters && best_norm > opts.newton_tol {
        let jac = sh.jacobian(&z, opts.fd_step, &mut ws);
        let step = match jac.lu().solve(&(-&residual)) {
            Some(s) => s,
            None => break,
        };
        let base_l2 = residual.norm();
        let mut alpha = 1.0f64;
        let mut accepted = false;
        while alpha >= 1e-4 {
            let cand = &z + &step * alpha;
            if let Some(r_cand) = sh.residual(&cand, &mut ws) {
                if r_cand.norm() <= base_l2 * (1.0 - 1e-4 * alpha) {
                    z = cand;
                    residual = r_cand;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        iters += 1;
        if !accepted {
            break;
        }
        let norm = residual.amax();
        if norm < best_norm {
            if norm > 0.9 * best_norm {
                stalls += 1;
            } else {
                stalls = 0;
            }
            best_norm = norm;
            best_z.copy_from(&z);
        } else {
            stalls += 1;
        }
        if stalls >= 3 {
            break;
        }
    }

    // Re-run the residual at the best iterate so the cached segment outputs
    // match the assembled solution.
    if sh.residual(&best_z, &mut ws).is_none() {
        return Err(PmpError::IntegrationDiverged {
            last_finite_time: t0,
        });
    }
    assemble_solution(&sh, &best_z, iters, opts, &mut ws)
}

fn assemble_solution(
    sh: &Shooting,
    z: &DVector<f64>,
    newton_iters: usize,
    opts: &SolverOptions,
    ws: &mut Workspace,
) -> Result<TpbvpSolution, PmpError> {
    let n = sh.n;
    let m = sh.m;
    let mut nodes: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut mesh_residual = 0.0f64;

    for seg in 0..sh.segments() {
        let node = &z.as_slice()[sh.node_range(seg)];
        let (x, lam): (Vec<f64>, Vec<f64>) = if seg == 0 {
            (sh.x0.to_vec(), node.to_vec())
        } else {
            (node[..n].to_vec(), node[n..].to_vec())
        };
        if seg > 0 {
            // Continuity defect against the previous segment's endpoint.
            let last = nodes.last().unwrap();
            let defect = x
                .iter()
                .zip(&last.1)
                .chain(lam.iter().zip(&last.2))
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            mesh_residual = mesh_residual.max(defect);
            nodes.pop();
        }
        let mut rec = Vec::new();
        let end = sh.integrate_segment(seg, &x, &lam, ws, Some(&mut rec));
        match end {
            Some(_) => nodes.extend(rec),
            None => {
                return Err(PmpError::IntegrationDiverged {
                    last_finite_time: sh.node_times[seg],
                })
            }
        }
    }

    let mut times = Vec::with_capacity(nodes.len());
    let mut states = Vec::with_capacity(nodes.len());
    let mut costates = Vec::with_capacity(nodes.len());
    let mut controls = Vec::with_capacity(nodes.len());
    let mut max_stationarity = 0.0f64;
    let mut grad_u = vec![0.0; m];
    let mut jac_u = vec![0.0; n * m];
    for (t, x, lam) in nodes {
        let mut u = vec![0.0; m];
        if !sh.prob.minimize_hamiltonian_closed_form(t, &x, &lam, &mut u) {
            ops::minimize_hamiltonian(sh.prob, t, &x, &lam, &mut u)
                .map_err(|_| PmpError::Stationarity { residual: f64::NAN })?;
        }
        ops::hamiltonian_grad_control(sh.prob, t, &x, &lam, &u, &mut grad_u, &mut jac_u);
        max_stationarity = max_stationarity.max(grad_u.iter().fold(0.0f64, |a, g| a.max(g.abs())));
        times.push(t);
        states.push(x);
        costates.push(lam);
        controls.push(u);
    }

    let x_end = states.last().unwrap().clone();
    let lam_end = costates.last().unwrap().clone();
    let mut grad_m = vec![0.0; n];
    sh.prob.terminal_cost_grad(&x_end, &mut grad_m);
    let gap = lam_end
        .iter()
        .zip(&grad_m)
        .map(|(l, g)| (l - g) * (l - g))
        .sum::<f64>()
        .sqrt();
    let grad_norm = grad_m.iter().map(|g| g * g).sum::<f64>().sqrt();

    let trajectory = Trajectory::new(times, states, controls)
        .map_err(|e| PmpError::InvalidArgument(e.to_string()))?;
    let cost = evaluate_cost(sh.prob as &dyn control_core::ControlProblem, &trajectory)
        .map_err(|e| PmpError::InvalidArgument(e.to_string()))?;

    let residuals = Residuals {
        terminal_costate_gap: gap,
        max_stationarity,
        mesh_residual,
    };
    let converged = gap <= opts.tol_bc * (1.0 + grad_norm)
        && max_stationarity <= opts.tol_stationarity
        && mesh_residual <= opts.tol_mesh;
    Ok(TpbvpSolution {
        trajectory,
        costates,
        converged,
        residuals,
        newton_iters,
        cost,
    })
}

/// Upcast helper: `&dyn TpbvpProblem` to `&dyn ControlProblem`.
trait AsControlProblem {
    fn as_control_problem(&self) -> &dyn control_core::ControlProblem;
}

impl AsControlProblem for dyn TpbvpProblem + '_ {
    fn as_control_problem(&self) -> &dyn control_core::ControlProblem {
        // SAFETY-free upcast via a generic shim would need unstable trait
        // upcasting before Rust 1.86; the blanket method below sidesteps it.
        self.upcast()
    }
}

/// Object-safe upcasting shim implemented for all sized problems.
pub(crate) trait Upcast {
    fn upcast(&self) -> &dyn control_core::ControlProblem;
}

impl<T: TpbvpProblem + Sized> Upcast for T {
    fn upcast(&self) -> &dyn control_core::ControlProblem {
        self
    }
}

impl Upcast for dyn TpbvpProblem + '_ {
    fn upcast(&self) -> &dyn control_core::ControlProblem {
        // Trait-object upcasting is stable since Rust 1.86.
        self
    }
}

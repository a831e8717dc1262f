use crate::{times_close, CoreError, DataPoint};

/// A single trajectory: a strictly increasing time grid with one state and
/// one control vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    controls: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        controls: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        if times.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "trajectory needs at least two nodes".into(),
            ));
        }
        if times.len() != states.len() || times.len() != controls.len() {
            return Err(CoreError::InvalidArgument(format!(
                "node count mismatch: {} times, {} states, {} controls",
                times.len(),
                states.len(),
                controls.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidArgument(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        let n = states[0].len();
        let m = controls[0].len();
        if states.iter().any(|s| s.len() != n) || controls.iter().any(|c| c.len() != m) {
            return Err(CoreError::InvalidArgument(
                "ragged state or control arrays".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            controls,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn control_dim(&self) -> usize {
        self.controls[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn control(&self, k: usize) -> &[f64] {
        &self.controls[k]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Index of the node whose time matches `t` on the stored grid.
    pub fn node_at(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| times_close(s, t))
    }

    /// Linear interpolation of the state at an arbitrary time inside the
    /// trajectory span; clamps outside.
    pub fn state_interp(&self, t: f64) -> Vec<f64> {
        self.interp(t, &self.states)
    }

    /// Linear interpolation of the stored control at an arbitrary time.
    pub fn control_interp(&self, t: f64) -> Vec<f64> {
        self.interp(t, &self.controls)
    }

    fn interp(&self, t: f64, rows: &[Vec<f64>]) -> Vec<f64> {
        if t <= self.times[0] {
            return rows[0].clone();
        }
        if t >= *self.times.last().unwrap() {
            return rows.last().unwrap().clone();
        }
        let hi = self.times.partition_point(|&s| s < t).max(1);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        rows[lo]
            .iter()
            .zip(&rows[hi])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Serializes to CSV with header `t,x0..x{n-1},u0..u{m-1}` and one row
    /// per node, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.state_dim();
        let m = self.control_dim();
        let mut out = String::from("t");
        for i in 0..n {
            out.push_str(&format!(",x{i}"));
        }
        for j in 0..m {
            out.push_str(&format!(",u{j}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!("{:.16e}", self.times[k]));
            for v in &self.states[k] {
                out.push_str(&format!(",{v:.16e}"));
            }
            for v in &self.controls[k] {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout produced by [`Trajectory::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, CoreError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::InvalidArgument("empty trajectory CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let n = cols.iter().filter(|c| c.starts_with('x')).count();
        let m = cols.iter().filter(|c| c.starts_with('u')).count();
        if cols.len() != 1 + n + m || cols[0] != "t" {
            return Err(CoreError::InvalidArgument(format!(
                "unexpected trajectory CSV header: {header}"
            )));
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut controls = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals
                .map_err(|e| CoreError::InvalidArgument(format!("bad CSV number: {e}")))?;
            if vals.len() != 1 + n + m {
                return Err(CoreError::InvalidArgument(format!(
                    "CSV row has {} fields, expected {}",
                    vals.len(),
                    1 + n + m
                )));
            }
            times.push(vals[0]);
            states.push(vals[1..1 + n].to_vec());
            controls.push(vals[1 + n..].to_vec());
        }
        Self::new(times, states, controls)
    }
}

/// Extracts time-state-control tuples at times t0, t0 + delta, ... from a
/// solved trajectory. `delta` must align with the stored grid; the terminal
/// node is included whenever (T - t0)/delta is integral.
pub fn sample_dataset(traj: &Trajectory, delta: f64) -> Result<Vec<DataPoint>, CoreError> {
    if delta <= 0.0 {
        return Err(CoreError::InvalidArgument(format!(
            "sampling step must be positive, got {delta}"
        )));
    }
    let t0 = traj.start_time();
    let t_end = traj.end_time();
    let mut points = Vec::new();
    let mut k = 0usize;
    loop {
        let target = t0 + k as f64 * delta;
        if target > t_end && !times_close(target, t_end) {
            break;
        }
        match traj.node_at(target) {
            Some(idx) => points.push(DataPoint {
                t: traj.times[idx],
                x: traj.states[idx].clone(),
                u: traj.controls[idx].clone(),
            }),
            None => return Err(CoreError::Misaligned { delta, near: target }),
        }
        k += 1;
    }
    Ok(points)
}

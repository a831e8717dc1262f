use crate::{times_close, CoreError};

/// One regression sample: the control label observed at a time-state pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// A training dataset of time-state-control tuples grouped by source
/// trajectory, with a common sampling step `delta`.
///
/// Within a trajectory id the sample times are distinct multiples of
/// `delta` offset by that trajectory's start time, which is what makes the
/// iteration splice rule (replace all samples at t >= knot) well defined.
#[derive(Debug, Clone)]
pub struct Dataset {
    delta: f64,
    /// (trajectory id, point), sorted by id then time.
    points: Vec<(usize, DataPoint)>,
}

impl Dataset {
    pub fn new(delta: f64) -> Result<Self, CoreError> {
        if delta <= 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "dataset step must be positive, got {delta}"
            )));
        }
        Ok(Self {
            delta,
            points: Vec::new(),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds all samples of one trajectory. Times must sit on the delta grid
    /// anchored at the trajectory's first sample.
    pub fn push_trajectory(
        &mut self,
        traj_id: usize,
        points: Vec<DataPoint>,
    ) -> Result<(), CoreError> {
        if points.is_empty() {
            return Ok(());
        }
        let t0 = points[0].t;
        for p in &points {
            let steps = (p.t - t0) / self.delta;
            if (steps - steps.round()).abs() > 1e-6 {
                return Err(CoreError::Misaligned {
                    delta: self.delta,
                    near: p.t,
                });
            }
        }
        if self
            .points
            .iter()
            .any(|(id, p)| *id == traj_id && points.iter().any(|q| times_close(p.t, q.t)))
        {
            return Err(CoreError::InvalidArgument(format!(
                "duplicate samples for trajectory {traj_id}"
            )));
        }
        self.points.extend(points.into_iter().map(|p| (traj_id, p)));
        self.points
            .sort_by(|a, b| (a.0, a.1.t).partial_cmp(&(b.0, b.1.t)).unwrap());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &DataPoint)> {
        self.points.iter().map(|(id, p)| (*id, p))
    }

    pub fn trajectory_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.points.iter().map(|(id, _)| *id).collect();
        ids.dedup();
        ids
    }

    /// Samples of one trajectory, in time order.
    pub fn trajectory(&self, traj_id: usize) -> Vec<&DataPoint> {
        self.points
            .iter()
            .filter(|(id, _)| *id == traj_id)
            .map(|(_, p)| p)
            .collect()
    }

    /// All samples whose time matches `t`.
    pub fn at_time(&self, t: f64) -> Vec<(usize, &DataPoint)> {
        self.points
            .iter()
            .filter(|(_, p)| times_close(p.t, t))
            .map(|(id, p)| (*id, p))
            .collect()
    }

    /// The splice rule of the sampling iteration: keep every sample of
    /// `self` strictly before `cutoff`, then take all of `newer`.
    ///
    /// Trajectories of `self` that have no replacement in `newer` keep only
    /// their pre-cutoff samples; their stale tail is dropped.
    pub fn splice(&self, newer: &Dataset, cutoff: f64) -> Dataset {
        let mut out = Dataset {
            delta: self.delta,
            points: Vec::with_capacity(self.points.len()),
        };
        for (id, p) in &self.points {
            if p.t < cutoff && !times_close(p.t, cutoff) {
                out.points.push((*id, p.clone()));
            }
        }
        out.points.extend(newer.points.iter().cloned());
        out.points
            .sort_by(|a, b| (a.0, a.1.t).partial_cmp(&(b.0, b.1.t)).unwrap());
        out
    }
}

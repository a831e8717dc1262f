use control_core::Trajectory;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// CSV serialization round-trips trajectories bit-exactly.
    #[test]
    fn trajectory_csv_roundtrip(
        rows in prop::collection::vec(
            (prop::num::f64::NORMAL, prop::num::f64::NORMAL, prop::num::f64::NORMAL),
            2..20,
        )
    ) {
        let times: Vec<f64> = (0..rows.len()).map(|k| k as f64 * 0.25).collect();
        let states: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
        let controls: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.2]).collect();
        let traj = Trajectory::new(times, states, controls).unwrap();
        let back = Trajectory::from_csv(&traj.to_csv()).unwrap();
        prop_assert_eq!(traj, back);
    }

    /// Linear interpolation is exact at nodes and stays inside the hull
    /// between adjacent nodes.
    #[test]
    fn state_interp_is_consistent(vals in prop::collection::vec(-10.0f64..10.0, 3..12)) {
        let times: Vec<f64> = (0..vals.len()).map(|k| k as f64).collect();
        let states: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
        let controls = vec![vec![0.0]; vals.len()];
        let traj = Trajectory::new(times, states, controls).unwrap();
        for (k, &v) in vals.iter().enumerate() {
            prop_assert!((traj.state_interp(k as f64)[0] - v).abs() < 1e-12);
        }
        for k in 0..vals.len() - 1 {
            let mid = traj.state_interp(k as f64 + 0.5)[0];
            let (lo, hi) = (vals[k].min(vals[k + 1]), vals[k].max(vals[k + 1]));
            prop_assert!(mid >= lo - 1e-12 && mid <= hi + 1e-12);
        }
    }
}

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use setmem::builtin;
use setmem::dynamics::{self, SwitchedSystem, Trajectory};
use setmem::noise::{NoiseSampler, NoiseSet};

fn switched(seed: u64, switches: &[usize]) -> Trajectory {
    let sys = SwitchedSystem::new(builtin::bandit_arms()).unwrap();
    let mut s = NoiseSampler::new(NoiseSet::symmetric_box(4, 1.0).unwrap(), seed);
    dynamics::simulate(&sys, switches, &DVector::zeros(4), &mut s, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grouping_partitions_the_pairs(seed in any::<u64>(), switches in prop::collection::vec(0usize..4, 0..60)) {
        let traj = switched(seed, &switches);
        let groups = dynamics::group(&traj, 4).unwrap();
        prop_assert_eq!(groups.iter().map(|g| g.len()).sum::<usize>(), switches.len());
        // every pair is (x_t, x_{t+1}) for some t with that switch, in time order
        for (p, g) in groups.iter().enumerate() {
            let ts: Vec<usize> = (0..switches.len()).filter(|&t| switches[t] == p).collect();
            prop_assert_eq!(ts.len(), g.len());
            for (k, &t) in ts.iter().enumerate() {
                prop_assert_eq!(&g.xs[k], &traj.states[t]);
                prop_assert_eq!(&g.ys[k], &traj.states[t + 1]);
            }
        }
    }

    #[test]
    fn residuals_are_the_drawn_noise(seed in any::<u64>(), switches in prop::collection::vec(0usize..4, 1..40)) {
        let traj = switched(seed, &switches);
        let arms = builtin::bandit_arms();
        let noises = traj.noises.as_ref().unwrap();
        for (t, &p) in switches.iter().enumerate() {
            let r: DVector<f64> = &traj.states[t + 1] - &arms[p] * &traj.states[t];
            prop_assert!((r - &noises[t]).amax() <= 1e-9 * traj.states[t + 1].amax().max(1.0));
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(seed in any::<u64>(), switches in prop::collection::vec(0usize..4, 0..50)) {
        let mut traj = switched(seed, &switches);
        traj.noises = None;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, traj);
    }
}

#[test]
fn prefix_is_the_first_pairs() {
    let traj = switched(1, &[0; 10]);
    let g = dynamics::group(&traj, 1).unwrap().remove(0);
    let p = g.prefix(4);
    assert_eq!(p.len(), 4);
    assert_eq!(p.xs[..], g.xs[..4]);
    assert_eq!(p.regressors(), DMatrix::from_fn(4, 4, |i, j| g.xs[i][j]));
}

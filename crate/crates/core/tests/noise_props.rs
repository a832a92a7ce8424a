use proptest::prelude::*;
use setmem::noise::{NoiseSampler, NoiseSet};

fn boxes() -> impl Strategy<Value = NoiseSet> {
    (1usize..5).prop_flat_map(|d| {
        (
            prop::collection::vec(0.01f64..3.0, d),
            prop::collection::vec(0.01f64..3.0, d),
        )
            .prop_map(|(lo, hi)| NoiseSet::new_box(lo.iter().map(|v| -v).collect(), hi).unwrap())
    })
}

/// Cross-polytope `Σ|u_j| ≤ r` written as `2^d` halfspaces.
fn cross_polytope(d: usize, r: f64) -> NoiseSet {
    let mut h = Vec::new();
    for mask in 0..(1u32 << d) {
        h.push(
            (0..d)
                .map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect(),
        );
    }
    let n = h.len();
    NoiseSet::new_polytope(h, vec![r; n]).unwrap()
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, d)
}

proptest! {
    #[test]
    fn box_distance_zero_iff_contained(set in boxes(), seed in 0u64..1000) {
        let d = set.dim();
        let mut rng = NoiseSampler::new(NoiseSet::symmetric_box(d, 5.0).unwrap(), seed);
        let u: Vec<f64> = rng.sample().unwrap().iter().copied().collect();
        let inside = set.contains(&u, 0.0).unwrap();
        prop_assert_eq!(set.distance(&u).unwrap() == 0.0, inside);
        let p = set.project(&u).unwrap();
        prop_assert!(set.contains(&p, 0.0).unwrap());
        // projecting twice changes nothing
        prop_assert_eq!(set.project(&p).unwrap(), p);
    }

    #[test]
    fn polytope_projection_is_nearest_feasible(u in point(3), r in 0.5f64..3.0) {
        let set = cross_polytope(3, r);
        let p = set.project(&u).unwrap();
        prop_assert!(set.contains(&p, 1e-9).unwrap());
        let dist = set.distance(&u).unwrap();
        let l1: f64 = u.iter().map(|v| v.abs()).sum();
        prop_assert_eq!(dist == 0.0, l1 <= r);
        // no vertex is closer than the projection
        for j in 0..3 {
            for s in [-r, r] {
                let mut v = [0.0; 3];
                v[j] = s;
                let dv: f64 = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dist <= dv + 1e-9);
            }
        }
    }

    #[test]
    fn samples_stay_in_box(set in boxes(), seed in any::<u64>()) {
        let mut s = NoiseSampler::new(set.clone(), seed);
        for _ in 0..50 {
            let w = s.sample().unwrap();
            prop_assert!(set.contains(w.as_slice(), 0.0).unwrap());
        }
    }

    #[test]
    fn json_round_trip(set in boxes()) {
        let text = serde_json::to_string(&set).unwrap();
        let back: NoiseSet = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, set);
    }
}

#[test]
fn json_surface_syntax() {
    let w: NoiseSet =
        serde_json::from_str(r#"{"kind":"box","lower":[-1,-2],"upper":[1,2]}"#).unwrap();
    assert_eq!(w.bounds().unwrap(), (&[-1.0, -2.0][..], &[1.0, 2.0][..]));
}

#[test]
fn same_seed_same_draws() {
    let w = NoiseSet::symmetric_box(4, 1.0).unwrap();
    let (mut a, mut b) = (
        NoiseSampler::new(w.clone(), 9),
        NoiseSampler::new(w.clone(), 9),
    );
    let mut c = NoiseSampler::with_stream(w, 9, 1);
    let (x, y, z) = (
        a.sample().unwrap(),
        b.sample().unwrap(),
        c.sample().unwrap(),
    );
    assert_eq!(x, y);
    assert_ne!(x, z);
}

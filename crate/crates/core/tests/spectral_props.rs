use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use setmem::builtin;
use setmem::spectral::{eigenvalues, report, spectral_norm, spectral_radius};

/// Monic characteristic polynomial coefficients `[c_0, .., c_{n-1}, 1]`.
fn faddeev_leverrier(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

/// Simultaneous Weierstrass iteration on a monic polynomial.
fn durand_kerner(c: &[f64]) -> Vec<Complex<f64>> {
    let n = c.len() - 1;
    let eval = |z: Complex<f64>| {
        c.iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, &ck| acc * z + ck)
    };
    let bound = 1.0 + c[..n].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            Complex::from_polar(
                0.5 * bound,
                0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64,
            )
        })
        .collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

fn matrices(max_d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_d).prop_flat_map(|d| {
        prop::collection::vec(-2.0f64..2.0, d * d)
            .prop_map(move |v| DMatrix::from_row_slice(d, d, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigenvalues_match_characteristic_polynomial(a in matrices(6)) {
        let ev = eigenvalues(&a).unwrap();
        prop_assert!(ev.converged);
        let got: Vec<Complex<f64>> = ev.re.iter().zip(&ev.im).map(|(&r, &i)| Complex::new(r, i)).collect();
        let mut used = vec![false; got.len()];
        for root in durand_kerner(&faddeev_leverrier(&a)) {
            let (k, dist) = got
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, g)| (k, (g - root).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            used[k] = true;
            prop_assert!(dist <= 1e-6 * root.norm().max(1.0), "root {root} off by {dist}");
        }
    }

    #[test]
    fn radius_bounded_by_norm(a in matrices(6)) {
        prop_assert!(spectral_radius(&a).unwrap() <= spectral_norm(&a).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn symmetric_radius_equals_norm(a in matrices(6)) {
        let s = &a + a.transpose();
        let (r, n) = (spectral_radius(&s).unwrap(), spectral_norm(&s).unwrap());
        prop_assert!((r - n).abs() <= 1e-10 * n.max(1.0));
    }

    #[test]
    fn similarity_and_scaling_invariance(a in matrices(5), p in matrices(5), c in -3.0f64..3.0) {
        prop_assume!(a.nrows() == p.nrows());
        let d = a.nrows();
        // well-conditioned change of basis
        let s = DMatrix::<f64>::identity(d, d) + p * 0.1;
        let si = s.clone().try_inverse().unwrap();
        let r = spectral_radius(&a).unwrap();
        let rs = spectral_radius(&(&s * &a * si)).unwrap();
        prop_assert!((r - rs).abs() <= 1e-8 * r.max(1.0), "{r} vs {rs}");
        let rc = spectral_radius(&(&a * c)).unwrap();
        prop_assert!((rc - c.abs() * r).abs() <= 1e-10 * rc.max(1.0));
    }
}

#[test]
fn builtin_reports_are_consistent() {
    for a in builtin::bandit_arms() {
        let r = report(&a).unwrap();
        assert!(r.converged);
        assert_eq!(r.eigen_moduli.len(), 4);
        assert_eq!(r.radius, *r.eigen_moduli.last().unwrap());
        assert!(r.eigen_moduli.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn defective_jordan_block() {
    // repeated eigenvalue with a single eigenvector
    let a = DMatrix::from_row_slice(3, 3, &[1.1, 1.0, 0.0, 0.0, 1.1, 1.0, 0.0, 0.0, 1.1]);
    assert!((spectral_radius(&a).unwrap() - 1.1).abs() < 1e-5);
}

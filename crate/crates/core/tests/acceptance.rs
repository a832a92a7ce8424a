//! Acceptance report. Prints one PASS/FAIL line per criterion at pinned
//! tolerances; run with `cargo test --test acceptance -- --nocapture`.
//!
//! A check listed in `UNATTAINABLE` is expected to fail for a documented
//! reason. It is still computed and reported; the test only errors if it
//! unexpectedly passes or if anything else fails.

use std::fs;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setmem::builtin;
use setmem::dynamics::{self, MeasurementGroup, SwitchedSystem};
use setmem::estimators::certificate::{verify, Certificate};
use setmem::estimators::{
    self, ErrorMetric, EstimateProblem, EstimateResult, Loss, Status, DEFAULT_RIDGE,
};
use setmem::experiments::{self, median, ExperimentConfig, ExperimentKind};
use setmem::noise::{NoiseSampler, NoiseSet};
use setmem::policy::{self, BanditState, Environment, TraceStatus};
use setmem::spectral;

const VIOLATION_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-8;

/// `‖A1‖₂ = 2.9136`: the printed entries of A1 give 2.80462, so no
/// implementation can match it.
///
/// `ρ̂₁` within 0.05 of 0.79 once arm 1 holds 100 pairs, on every seed: A1
/// is far from normal (its repeated eigenvalue 0.79 is coupled through the
/// 1.6 entries), so eigenvalue error scales like the square root of the
/// matrix error, and the matrix error at 100 pairs is still 0.02 to 0.3.
const UNATTAINABLE: &[&str] = &[
    "golden_spectral_values/norm_A1",
    "bandit_rho_hat_arm1_at_100_pairs",
];

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.lines.push((name.to_string(), ok, detail));
    }
}

/// Collects certificates of every Optimal result handed to it.
#[derive(Default)]
struct Certs {
    checked: usize,
    worst_violation: f64,
    worst_kkt: f64,
}

impl Certs {
    fn add(&mut self, g: &MeasurementGroup, w: &NoiseSet, ridge: f64, r: &EstimateResult) {
        if r.status != Status::Optimal {
            return;
        }
        let c: Certificate = verify(g, w, Loss::Squared, ridge, &r.a_hat).unwrap();
        self.checked += 1;
        self.worst_violation = self.worst_violation.max(c.max_violation);
        self.worst_kkt = self.worst_kkt.max(c.kkt_residual);
    }

    fn ok(&self) -> bool {
        self.worst_violation <= VIOLATION_TOL && self.worst_kkt <= KKT_TOL
    }
}

fn golden_spectral_values(rep: &mut Report) {
    let radii = [0.79, 1.1, 1.2899, 1.2992];
    let norms = [2.9136, 1.1, 1.2899, 1.2992];
    for (k, a) in builtin::bandit_arms().iter().enumerate() {
        let rho = spectral::spectral_radius(a).unwrap();
        let nrm = spectral::spectral_norm(a).unwrap();
        rep.check(
            &format!("golden_spectral_values/radius_A{}", k + 1),
            (rho - radii[k]).abs() <= 1e-3,
            format!("rho={rho:.6} expected {} +-1e-3", radii[k]),
        );
        rep.check(
            &format!("golden_spectral_values/norm_A{}", k + 1),
            (nrm - norms[k]).abs() <= 1e-3,
            format!("norm={nrm:.6} expected {} +-1e-3", norms[k]),
        );
    }
}

/// Interval intersection of `|y − a x| ≤ 1` followed by clamping the
/// unconstrained least-squares minimizer into it.
fn scalar_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&x, &y) in xs.iter().zip(ys) {
        let (a, b) = ((y - 1.0) / x, (y + 1.0) / x);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if lo > hi {
        // a single feasible point, crossed by rounding
        return 0.5 * (lo + hi);
    }
    (sxy / sxx).clamp(lo, hi)
}

fn scalar_oracle_equivalence(rep: &mut Report, certs: &mut Certs) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w = NoiseSet::symmetric_box(1, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut non_optimal = 0;
    for case in 0..1000u64 {
        let a0: f64 = rng.random_range(-3.0..=3.0);
        let n: usize = rng.random_range(1..=50);
        let mut x: f64 = rng.random_range(-1.0..=1.0);
        let mut noise = NoiseSampler::new(w.clone(), case);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let y = a0 * x + noise.sample().unwrap()[0];
            xs.push(x);
            ys.push(y);
            x = y;
        }
        let g = MeasurementGroup::from_pairs(
            0,
            xs.iter()
                .zip(&ys)
                .map(|(&x, &y)| (DVector::from_element(1, x), DVector::from_element(1, y)))
                .collect(),
        )
        .unwrap();
        let r = estimators::sme_estimate(&EstimateProblem::new(&g, &w).with_ridge(0.0)).unwrap();
        if r.status != Status::Optimal {
            non_optimal += 1;
        }
        certs.add(&g, &w, 0.0, &r);
        worst = worst.max((r.a_hat[(0, 0)] - scalar_oracle(&xs, &ys)).abs());
    }
    rep.check(
        "scalar_oracle_equivalence",
        worst <= 1e-8 && non_optimal == 0,
        format!("1000 cases, max |a_sme - a_oracle| = {worst:.3e} (tol 1e-8), non-optimal {non_optimal}"),
    );
}

fn random_with_radius(rng: &mut ChaCha8Rng, rho: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..=1.0));
    let r = spectral::spectral_radius(&m).unwrap();
    m * (rho / r)
}

fn exact_data_recovery(rep: &mut Report, certs: &mut Certs) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let w = NoiseSet::symmetric_box(4, 1.0).unwrap();
    let (mut worst_sme, mut worst_ols): (f64, f64) = (0.0, 0.0);
    for case in 0..20 {
        let rho = if case < 10 {
            rng.random_range(0.5..0.95)
        } else {
            rng.random_range(1.05..1.5)
        };
        let a0 = random_with_radius(&mut rng, rho);
        let sys = SwitchedSystem::new(vec![a0.clone()]).unwrap();
        let x0 = DVector::from_fn(4, |_, _| rng.random_range(-5.0..=5.0));
        let mut zero = NoiseSampler::new(NoiseSet::zero(4), 0);
        let traj = dynamics::simulate(&sys, &[0; 12], &x0, &mut zero, false).unwrap();
        let g = dynamics::group(&traj, 1).unwrap().remove(0);
        let sme = estimators::sme_estimate(&EstimateProblem::new(&g, &w)).unwrap();
        let ols = estimators::ols_estimate(&g).unwrap();
        certs.add(&g, &w, DEFAULT_RIDGE, &sme);
        worst_sme = worst_sme.max((&sme.a_hat - &a0).norm());
        worst_ols = worst_ols.max((&ols.a_hat - &a0).norm());
    }
    rep.check(
        "exact_data_recovery",
        worst_sme <= 1e-6 && worst_ols <= 1e-6,
        format!(
            "20 systems, max ||A_hat - A0||_F sme={worst_sme:.3e} ols={worst_ols:.3e} (tol 1e-6)"
        ),
    );
}

fn compare_ols_claims(rep: &mut Report, certs: &mut Certs) {
    let a2 = builtin::a2();
    let w = NoiseSet::symmetric_box(4, 1.0).unwrap();
    let checkpoints = [25, 100, 200];
    let mut rows = Vec::new();
    for seed in 0..10 {
        let seed_rows = experiments::compare_ols_seed(
            &a2,
            &w,
            seed,
            200,
            &checkpoints,
            Loss::Squared,
            DEFAULT_RIDGE,
            ErrorMetric::Frobenius,
        )
        .unwrap();
        // same trajectory, rebuilt for the independent check
        let sys = SwitchedSystem::new(vec![a2.clone()]).unwrap();
        let mut sampler = NoiseSampler::new(w.clone(), seed);
        let traj =
            dynamics::simulate(&sys, &[0; 200], &DVector::zeros(4), &mut sampler, false).unwrap();
        let g = dynamics::group(&traj, 1).unwrap().remove(0);
        for r in &seed_rows {
            certs.add(&g.prefix(r.n), &w, DEFAULT_RIDGE, &r.sme);
        }
        rows.extend(seed_rows);
    }
    let med = |n: usize, sme: bool| {
        let mut v: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| if sme { r.err_sme } else { r.err_ols })
            .collect();
        median(&mut v).unwrap()
    };
    let (s25, s200, o100, o200) = (
        med(25, true),
        med(200, true),
        med(100, false),
        med(200, false),
    );
    rep.check(
        "sme_consistency_trend",
        s200 < s25 && s200 < 0.5 * o200,
        format!(
            "median sme n=25 {s25:.4}, n=200 {s200:.4}; 0.5 x median ols n=200 {:.4}",
            0.5 * o200
        ),
    );
    rep.check(
        "ols_error_does_not_vanish",
        o200 > 0.5 * o100,
        format!(
            "median ols n=100 {o100:.4}, n=200 {o200:.4}; need n=200 > {:.4}",
            0.5 * o100
        ),
    );
}

/// `sup_{k ≥ k0} ‖A^k‖₂` and `Σ_{k ≥ 0} ‖A^k‖₂`, truncated once the terms
/// are negligible.
fn power_norms(a: &DMatrix<f64>, k0: usize) -> (f64, f64) {
    let mut p = DMatrix::<f64>::identity(a.nrows(), a.ncols());
    let (mut sup, mut sum) = (0.0f64, 0.0f64);
    for k in 0..5000 {
        let n = spectral::spectral_norm(&p).unwrap();
        sum += n;
        if k >= k0 {
            sup = sup.max(n);
        }
        if k > k0 && n < 1e-18 {
            break;
        }
        p = &p * a;
    }
    (sup, sum)
}

fn bandit_stabilization(rep: &mut Report, certs: &mut Certs) {
    let arms = builtin::bandit_arms();
    let sys = SwitchedSystem::new(arms.clone()).unwrap();
    let w = NoiseSet::symmetric_box(4, 1.0).unwrap();
    let (horizon, tail) = (300, 100);
    // worst-case noise norm on the box
    let wmax = 2.0;
    let (_, series) = power_norms(&arms[0], 0);
    let mut all_ok = true;
    let mut detail = Vec::new();
    let mut replay_ok = true;
    let mut rho_dev = Vec::new();
    for seed in 0..10u64 {
        let tr = policy::run(&sys, &w, horizon, seed, ErrorMetric::Frobenius).unwrap();
        let complete = tr.status == TraceStatus::Complete && tr.records.len() == horizon;
        let last = &tr.records[horizon - tail..];
        let arm1_only = complete && last.iter().all(|r| r.arm == 0);
        let lock = tr.lock_in_step().unwrap_or(horizon);
        // x_t = A1^{t-s} x_s + Σ A1^j w: transient from the lock-in state
        // plus the geometric series of the noise.
        let (sup, _) = power_norms(&arms[0], (horizon - tail).saturating_sub(lock));
        let bound = sup * tr.records[lock.min(horizon - 1)].state_norm + wmax * series;
        let peak = last.iter().map(|r| r.state_norm).fold(0.0, f64::max);
        let ok = arm1_only && peak < bound;
        all_ok &= ok;
        detail.push(format!("s{seed}:lock={lock},peak={peak:.1}<{bound:.1}"));

        // replay through the public step API to certify every estimate
        let mut env = Environment::new(
            sys.clone(),
            NoiseSampler::new(w.clone(), seed),
            DVector::zeros(4),
        )
        .unwrap();
        let mut st = BanditState::new(arms.len(), w.clone(), seed).unwrap();
        for t in 0..tr.records.len() {
            let p = if t < arms.len() { t } else { st.choose_arm() };
            replay_ok &= p == tr.records[t].arm;
            let (x, y) = env.pull(p).unwrap();
            st.update(p, x, y).unwrap();
            certs.add(
                st.group(p),
                &w,
                DEFAULT_RIDGE,
                st.estimate_result(p).unwrap(),
            );
            if p == 0 && st.counts()[0] == 100 {
                rho_dev.push((st.radius(0).unwrap() - 0.79).abs());
            }
        }
    }
    rep.check(
        "bandit_stabilization",
        all_ok && replay_ok,
        format!(
            "10 seeds, last {tail} steps arm 1 only and peak |x| under bound (noise series {:.1}); replay matches: {replay_ok}; {}",
            wmax * series,
            detail.join(" ")
        ),
    );
    let within = rho_dev.iter().filter(|&&e| e <= 0.05).count();
    let devs: Vec<String> = rho_dev.iter().map(|e| format!("{e:.3}")).collect();
    rep.check(
        "bandit_rho_hat_arm1_at_100_pairs",
        rho_dev.len() == 10 && within == 10,
        format!(
            "|rho_hat_1 - 0.79| <= 0.05 on {within}/10 seeds; deviations {}",
            devs.join(" ")
        ),
    );
}

fn determinism(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let mut configs = Vec::new();
    let mut c = ExperimentConfig::new(ExperimentKind::CompareOls);
    c.seeds = vec![7, 8];
    configs.push((c, "compare_ols.csv"));
    let mut c = ExperimentConfig::new(ExperimentKind::Bandit);
    c.seeds = vec![7];
    configs.push((c, "trace.csv"));
    let mut c = ExperimentConfig::new(ExperimentKind::Simulate);
    c.seeds = vec![7];
    configs.push((c, "trajectory.csv"));
    configs.push((
        ExperimentConfig::new(ExperimentKind::Spectral),
        "spectral.csv",
    ));

    let mut same = true;
    let mut names = Vec::new();
    for (cfg, file) in &configs {
        let a = experiments::run(cfg, &dir.path().join("a")).unwrap();
        let first = fs::read(dir.path().join("a").join(file)).unwrap();
        experiments::run(cfg, &dir.path().join("b")).unwrap();
        let second = fs::read(dir.path().join("b").join(file)).unwrap();
        same &= first == second && !a.files.is_empty();
        names.push(*file);
    }
    // estimate reads the simulated trajectory
    experiments::run(&configs[2].0, &sim_dir).unwrap();
    let mut est = ExperimentConfig::new(ExperimentKind::Estimate);
    est.trajectory = Some(sim_dir.join("trajectory.csv"));
    let runs: Vec<Vec<u8>> = ["e1", "e2"]
        .iter()
        .map(|d| {
            experiments::run(&est, &dir.path().join(d)).unwrap();
            fs::read(dir.path().join(d).join("estimates.csv")).unwrap()
        })
        .collect();
    same &= runs[0] == runs[1];
    names.push("estimates.csv");
    rep.check(
        "determinism",
        same,
        format!("byte-identical reruns of {}", names.join(", ")),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { lines: Vec::new() };
    let mut certs = Certs::default();
    golden_spectral_values(&mut rep);
    scalar_oracle_equivalence(&mut rep, &mut certs);
    exact_data_recovery(&mut rep, &mut certs);
    compare_ols_claims(&mut rep, &mut certs);
    bandit_stabilization(&mut rep, &mut certs);
    rep.check(
        "solver_certificates",
        certs.ok() && certs.checked > 0,
        format!(
            "{} optimal results independently checked, worst violation {:.3e} (tol 1e-9), worst kkt {:.3e} (tol 1e-8)",
            certs.checked, certs.worst_violation, certs.worst_kkt
        ),
    );
    determinism(&mut rep);

    let mut unexpected = Vec::new();
    for (name, ok, detail) in &rep.lines {
        let known = UNATTAINABLE.contains(&name.as_str());
        let tag = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (unattainable, see notes)",
            (false, false) => "FAIL",
        };
        println!("ACCEPTANCE {tag:<30} {name}: {detail}");
        if *ok == known {
            unexpected.push(name.clone());
        }
    }
    assert!(
        unexpected.is_empty(),
        "unexpected outcome for {unexpected:?}"
    );
}

//! End-to-end experiments: estimator comparison against least squares, the
//! bandit stabilization run, plain simulation, offline estimation from a
//! trajectory file and a spectral summary. Each writes CSV tables and SVG
//! charts into an output directory.

pub mod chart;
pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::builtin;
use crate::dynamics::{self, format_float, SwitchedSystem, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{self, ErrorMetric, EstimateProblem, EstimateResult, Loss, Status};
use crate::noise::{NoiseSampler, NoiseSet};
use crate::policy::{self, PolicyTrace, TraceStatus};
use crate::spectral::{self, SpectralReport};
use chart::{emit_chart, ChartSpec, Table};
pub use config::{ExperimentConfig, ExperimentKind};

/// Stream used for random switching sequences in `simulate`.
pub const SWITCH_STREAM: u64 = 2;

pub const COMPARE_HEADER: [&str; 6] = [
    "seed",
    "n",
    "status_sme",
    "status_ols",
    "err_sme",
    "err_ols",
];
pub const ESTIMATE_HEADER: [&str; 7] = [
    "p",
    "n_p",
    "status",
    "error_frobenius",
    "objective",
    "max_violation",
    "kkt_residual",
];
pub const SPECTRAL_HEADER: [&str; 6] = [
    "name",
    "spectral_radius",
    "spectral_norm",
    "eigen_moduli",
    "iterations",
    "converged",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub seed: u64,
    pub n: usize,
    pub sme: EstimateResult,
    pub ols: EstimateResult,
    pub err_sme: f64,
    pub err_ols: f64,
}

/// Simulates `x_{t+1} = A x_t + w_t` from zero for `horizon` steps and
/// compares both estimators on the first `n` pairs at every checkpoint.
#[allow(clippy::too_many_arguments)]
pub fn compare_ols_seed(
    a: &DMatrix<f64>,
    noise: &NoiseSet,
    seed: u64,
    horizon: usize,
    checkpoints: &[usize],
    loss: Loss,
    ridge: f64,
    metric: ErrorMetric,
) -> Result<Vec<CompareRow>> {
    let sys = SwitchedSystem::new(vec![a.clone()])?;
    let mut sampler = NoiseSampler::new(noise.clone(), seed);
    let traj = dynamics::simulate(
        &sys,
        &vec![0; horizon],
        &DVector::zeros(sys.dim()),
        &mut sampler,
        false,
    )?;
    let group = dynamics::group(&traj, 1)?.remove(0);
    let mut rows = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        if n > group.len() {
            return Err(Error::Config(format!(
                "checkpoint {n} beyond horizon {horizon}"
            )));
        }
        let g = group.prefix(n);
        let sme = estimators::sme_estimate(
            &EstimateProblem::new(&g, noise)
                .with_loss(loss)
                .with_ridge(ridge),
        )?;
        let ols = estimators::ols_estimate(&g)?;
        let err_sme = estimators::estimation_error(&sme.a_hat, a, metric)?;
        let err_ols = estimators::estimation_error(&ols.a_hat, a, metric)?;
        rows.push(CompareRow {
            seed,
            n,
            sme,
            ols,
            err_sme,
            err_ols,
        });
    }
    Ok(rows)
}

pub fn run_compare_ols(cfg: &ExperimentConfig) -> Result<Vec<CompareRow>> {
    let systems = cfg.systems()?;
    let [(_, a)] = systems.as_slice() else {
        return Err(Error::Config("compare-ols takes exactly one system".into()));
    };
    let noise = cfg.noise_set(a.nrows())?;
    let checkpoints = cfg.checkpoints();
    if checkpoints.is_empty() {
        return Err(Error::Config("no checkpoint within the horizon".into()));
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        rows.extend(compare_ols_seed(
            a,
            &noise,
            seed,
            cfg.horizon(),
            &checkpoints,
            cfg.loss,
            cfg.ridge,
            cfg.error_metric,
        )?);
    }
    Ok(rows)
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// `(n, median SME error, median OLS error)` over seeds, by checkpoint.
pub fn median_curves(rows: &[CompareRow]) -> Vec<(usize, f64, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let at: Vec<&CompareRow> = rows.iter().filter(|r| r.n == n).collect();
            let mut s: Vec<f64> = at.iter().map(|r| r.err_sme).collect();
            let mut o: Vec<f64> = at.iter().map(|r| r.err_ols).collect();
            (
                n,
                median(&mut s).unwrap_or(f64::NAN),
                median(&mut o).unwrap_or(f64::NAN),
            )
        })
        .collect()
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.sme.status.to_string(),
            r.ols.status.to_string(),
            format_float(r.err_sme),
            format_float(r.err_ols),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_bandit(cfg: &ExperimentConfig) -> Result<Vec<PolicyTrace>> {
    let systems = cfg.systems()?;
    let sys = SwitchedSystem::new(systems.into_iter().map(|(_, m)| m).collect())?;
    let noise = cfg.noise_set(sys.dim())?;
    cfg.seeds
        .iter()
        .map(|&seed| policy::run(&sys, &noise, cfg.horizon(), seed, cfg.error_metric))
        .collect()
}

fn trace_status(t: &PolicyTrace) -> String {
    match t.status {
        TraceStatus::Complete => "complete".into(),
        TraceStatus::Exploded { t } => format!("exploded@{t}"),
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map_or(String::new(), format_float)
}

/// `seed,t,arm,state_norm,rho_hat_1..q,err_1..q,status` with 1-based arms.
/// A truncated trace carries `exploded@t` in every row.
pub fn write_trace_csv<W: Write>(traces: &[PolicyTrace], num_arms: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["seed", "t", "arm", "state_norm"]
        .map(String::from)
        .to_vec();
    header.extend((1..=num_arms).map(|p| format!("rho_hat_{p}")));
    header.extend((1..=num_arms).map(|p| format!("err_{p}")));
    header.push("status".into());
    w.write_record(&header)?;
    for tr in traces {
        let status = trace_status(tr);
        for r in &tr.records {
            let mut row = vec![
                tr.seed.to_string(),
                r.t.to_string(),
                (r.arm + 1).to_string(),
                format_float(r.state_norm),
            ];
            row.extend(r.radii.iter().map(|v| opt_float(*v)));
            row.extend(r.errors.iter().map(|v| opt_float(*v)));
            row.push(status.clone());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Switching sequence for `simulate`: the configured one, or uniform draws.
pub fn switching_sequence(cfg: &ExperimentConfig, num_systems: usize, seed: u64) -> Vec<usize> {
    match &cfg.switches {
        Some(sw) => sw.iter().map(|a| a - 1).collect(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SWITCH_STREAM);
            (0..cfg.horizon())
                .map(|_| rng.random_range(0..num_systems))
                .collect()
        }
    }
}

pub fn run_simulate(cfg: &ExperimentConfig, seed: u64) -> Result<Trajectory> {
    let systems = cfg.systems()?;
    let sys = SwitchedSystem::new(systems.into_iter().map(|(_, m)| m).collect())?;
    let noise = cfg.noise_set(sys.dim())?;
    let switches = switching_sequence(cfg, sys.num_systems(), seed);
    let mut sampler = NoiseSampler::new(noise, seed);
    dynamics::simulate(
        &sys,
        &switches,
        &DVector::zeros(sys.dim()),
        &mut sampler,
        false,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    /// 0-based subsystem index.
    pub p: usize,
    pub n_p: usize,
    /// `None` when the subsystem was never active.
    pub result: Option<EstimateResult>,
    pub error_frobenius: Option<f64>,
}

/// Estimates every subsystem seen in `traj`. When `truth` is given it also
/// fixes the subsystem count and supplies the error column.
pub fn estimate_trajectory(
    traj: &Trajectory,
    noise: &NoiseSet,
    loss: Loss,
    ridge: f64,
    truth: Option<&[DMatrix<f64>]>,
) -> Result<Vec<EstimateRow>> {
    let seen = traj.switches.iter().max().map_or(0, |m| m + 1);
    let q = truth.map_or(seen, |t| t.len());
    if seen > q {
        return Err(Error::InvalidSystem(format!(
            "trajectory uses subsystem {seen} but only {q} are configured"
        )));
    }
    let groups = dynamics::group(traj, q)?;
    let mut rows = Vec::with_capacity(q);
    for (p, g) in groups.iter().enumerate() {
        if g.is_empty() {
            rows.push(EstimateRow {
                p,
                n_p: 0,
                result: None,
                error_frobenius: None,
            });
            continue;
        }
        let res = estimators::sme_estimate(
            &EstimateProblem::new(g, noise)
                .with_loss(loss)
                .with_ridge(ridge),
        )?;
        let error_frobenius = truth
            .map(|t| estimators::estimation_error(&res.a_hat, &t[p], ErrorMetric::Frobenius))
            .transpose()?;
        rows.push(EstimateRow {
            p,
            n_p: g.len(),
            result: Some(res),
            error_frobenius,
        });
    }
    Ok(rows)
}

pub fn write_estimate_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER)?;
    for r in rows {
        let mut rec = vec![(r.p + 1).to_string(), r.n_p.to_string()];
        match &r.result {
            Some(res) => rec.extend([
                res.status.to_string(),
                opt_float(r.error_frobenius),
                format_float(res.objective),
                format_float(res.max_violation),
                format_float(res.kkt_residual),
            ]),
            None => rec.extend([
                "empty".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar with the estimates themselves: `p,row,a_1..a_d`.
pub fn write_matrices_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let d = rows
        .iter()
        .find_map(|r| r.result.as_ref())
        .map_or(0, |r| r.a_hat.ncols());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["p".to_string(), "row".to_string()];
    header.extend((1..=d).map(|j| format!("a_{j}")));
    w.write_record(&header)?;
    for r in rows {
        let Some(res) = &r.result else { continue };
        for i in 0..res.a_hat.nrows() {
            let mut rec = vec![(r.p + 1).to_string(), (i + 1).to_string()];
            rec.extend(res.a_hat.row(i).iter().map(|v| format_float(*v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run_spectral(cfg: &ExperimentConfig) -> Result<Vec<(String, SpectralReport)>> {
    cfg.systems()?
        .into_iter()
        .map(|(name, m)| Ok((name, spectral::report(&m)?)))
        .collect()
}

/// One row per matrix; moduli are `;`-separated in ascending order.
pub fn write_spectral_csv<W: Write>(rows: &[(String, SpectralReport)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRAL_HEADER)?;
    for (name, r) in rows {
        let moduli: Vec<String> = r.eigen_moduli.iter().map(|v| format_float(*v)).collect();
        w.write_record([
            name.clone(),
            format_float(r.radius),
            format_float(r.norm),
            moduli.join(";"),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// What an experiment wrote and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs `cfg` and writes its tables and charts into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = RunOutput::default();
    let written = |name: &str| out_dir.join(name);
    match cfg.experiment {
        ExperimentKind::CompareOls => {
            let rows = run_compare_ols(cfg)?;
            write_compare_csv(&rows, create(out_dir, "compare_ols.csv")?)?;
            let curves = median_curves(&rows);
            let mut table = Table::new(vec!["n".into(), "SME".into(), "OLS".into()]);
            let mut summary = String::from("n\tmedian_sme\tmedian_ols\n");
            for &(n, s, o) in &curves {
                table.push(vec![n as f64, s, o])?;
                summary.push_str(&format!("{n}\t{s:.6}\t{o:.6}\n"));
            }
            let spec =
                ChartSpec::lines("Median estimation error", "n", &["SME", "OLS"], "error").log_y();
            emit_chart(&table, &spec, &written("compare_ols.svg"))?;
            for status in [Status::Underdetermined, Status::Infeasible, Status::MaxIter] {
                let k = rows.iter().filter(|r| r.sme.status == status).count();
                if k > 0 {
                    summary.push_str(&format!("{k} SME solve(s) {status}\n"));
                }
            }
            out.summary = summary;
            out.files = vec![written("compare_ols.csv"), written("compare_ols.svg")];
        }
        ExperimentKind::Bandit => {
            let traces = run_bandit(cfg)?;
            let q = cfg.systems()?.len();
            write_trace_csv(&traces, q, create(out_dir, "trace.csv")?)?;
            bandit_charts(&traces[0], q, out_dir)?;
            let mut summary = String::from("seed\tlock_in\tfinal_arm\tstatus\n");
            for tr in &traces {
                summary.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    tr.seed,
                    tr.lock_in_step().map_or("-".into(), |s| s.to_string()),
                    tr.records
                        .last()
                        .map_or("-".into(), |r| (r.arm + 1).to_string()),
                    trace_status(tr)
                ));
            }
            out.summary = summary;
            out.files = [
                "trace.csv",
                "bandit_error.svg",
                "bandit_arm.svg",
                "bandit_state_norm.svg",
            ]
            .iter()
            .map(|n| written(n))
            .collect();
        }
        ExperimentKind::Simulate => {
            for &seed in &cfg.seeds {
                let traj = run_simulate(cfg, seed)?;
                let name = if cfg.seeds.len() == 1 {
                    "trajectory.csv".to_string()
                } else {
                    format!("trajectory_{seed}.csv")
                };
                traj.write_csv(create(out_dir, &name)?)?;
                out.summary.push_str(&format!(
                    "seed {seed}: T={} final |x|={:.6e}\n",
                    traj.len(),
                    traj.states.last().map_or(0.0, |x| x.norm())
                ));
                out.files.push(written(&name));
            }
        }
        ExperimentKind::Estimate => {
            let path = cfg
                .trajectory
                .as_ref()
                .ok_or_else(|| Error::Config("missing trajectory".into()))?;
            let traj = Trajectory::read_csv(File::open(path)?)?;
            let truth: Vec<DMatrix<f64>> = if cfg.systems.is_empty() {
                Vec::new()
            } else {
                cfg.systems()?.into_iter().map(|(_, m)| m).collect()
            };
            let noise = cfg.noise_set(traj.dim())?;
            let rows = estimate_trajectory(
                &traj,
                &noise,
                cfg.loss,
                cfg.ridge,
                (!truth.is_empty()).then_some(truth.as_slice()),
            )?;
            write_estimate_csv(&rows, create(out_dir, "estimates.csv")?)?;
            write_matrices_csv(&rows, create(out_dir, "estimates_matrices.csv")?)?;
            for r in &rows {
                out.summary.push_str(&format!(
                    "p={} n_p={} status={}\n",
                    r.p + 1,
                    r.n_p,
                    r.result.as_ref().map_or("empty", |res| res.status.as_str())
                ));
            }
            out.files = vec![written("estimates.csv"), written("estimates_matrices.csv")];
        }
        ExperimentKind::Spectral => {
            let rows = run_spectral(cfg)?;
            write_spectral_csv(&rows, create(out_dir, "spectral.csv")?)?;
            let mut buf = Vec::new();
            write_spectral_csv(&rows, &mut buf)?;
            out.summary = String::from_utf8_lossy(&buf).into_owned();
            out.files = vec![written("spectral.csv")];
        }
    }
    Ok(out)
}

/// Error, arm and state-norm charts for one trace.
pub fn bandit_charts(trace: &PolicyTrace, num_arms: usize, dir: &Path) -> Result<()> {
    let errs: Vec<String> = (1..=num_arms).map(|p| format!("err_{p}")).collect();
    let mut cols = vec!["t".to_string()];
    cols.extend(errs.iter().cloned());
    cols.extend(["arm".to_string(), "state_norm".to_string()]);
    let mut table = Table::new(cols);
    for r in &trace.records {
        let mut row = vec![r.t as f64];
        row.extend(r.errors.iter().map(|e| e.unwrap_or(f64::NAN)));
        row.extend([(r.arm + 1) as f64, r.state_norm]);
        table.push(row)?;
    }
    let refs: Vec<&str> = errs.iter().map(String::as_str).collect();
    let seed = trace.seed;
    emit_chart(
        &table,
        &ChartSpec::lines(
            &format!("Estimation error per arm (seed {seed})"),
            "t",
            &refs,
            "error",
        )
        .log_y(),
        &dir.join("bandit_error.svg"),
    )?;
    emit_chart(
        &table,
        &ChartSpec::lines(&format!("Arm pulled (seed {seed})"), "t", &["arm"], "arm").points(),
        &dir.join("bandit_arm.svg"),
    )?;
    emit_chart(
        &table,
        &ChartSpec::lines(
            &format!("State norm (seed {seed})"),
            "t",
            &["state_norm"],
            "|x_t|",
        )
        .log_y(),
        &dir.join("bandit_state_norm.svg"),
    )
}

//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string, so
//! the same functions are callable (and tested) natively.

use nalgebra::DMatrix;
use serde_json::{json, Value};
use setmem::builtin;
use setmem::dynamics::SwitchedSystem;
use setmem::estimators::{ErrorMetric, Loss, DEFAULT_RIDGE};
use setmem::experiments::{compare_ols_seed, median_curves};
use setmem::noise::NoiseSet;
use setmem::policy::{self, TraceStatus};
use setmem::{spectral, Error};
use wasm_bindgen::prelude::wasm_bindgen;

/// Rows separated by `;` or newlines, entries by `,` or whitespace.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, Error> {
    let rows: Vec<Vec<f64>> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| {
            r.split([',', ' ', '\t'])
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number '{s}'")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn fail(e: Error) -> String {
    e.to_string()
}

/// Spectral radius, norm and eigenvalue moduli. `input` is a built-in name
/// (`A1`..`A4`) or a matrix such as `"0.5, 1; 0, 0.9"`.
#[wasm_bindgen]
pub fn spectral_summary(input: &str) -> Result<String, String> {
    let a = match builtin::by_name(input.trim()) {
        Some(a) => a,
        None => parse_matrix(input).map_err(fail)?,
    };
    let r = spectral::report(&a).map_err(fail)?;
    Ok(json!({
        "radius": r.radius,
        "norm": r.norm,
        "moduli": r.eigen_moduli,
        "converged": r.converged,
    })
    .to_string())
}

/// Median SME and OLS errors on `A2` over `seeds` runs of length `horizon`.
#[wasm_bindgen]
pub fn compare_ols_curve(seeds: u32, horizon: u32, noise_radius: f64) -> Result<String, String> {
    let a = builtin::a2();
    let noise = NoiseSet::symmetric_box(4, noise_radius).map_err(fail)?;
    let horizon = horizon as usize;
    let checkpoints: Vec<usize> = [2, 5, 10, 25, 50, 100, 150, 200, 300, 400]
        .into_iter()
        .filter(|&n| n <= horizon)
        .collect();
    let mut rows = Vec::new();
    for seed in 0..u64::from(seeds.max(1)) {
        rows.extend(
            compare_ols_seed(
                &a,
                &noise,
                seed,
                horizon,
                &checkpoints,
                Loss::Squared,
                DEFAULT_RIDGE,
                ErrorMetric::Frobenius,
            )
            .map_err(fail)?,
        );
    }
    let curves: Vec<Value> = median_curves(&rows)
        .into_iter()
        .map(|(n, s, o)| json!({"n": n, "sme": s, "ols": o}))
        .collect();
    Ok(Value::Array(curves).to_string())
}

/// One bandit run over `A1`..`A4`: arms (1-based), state norms and
/// per-arm estimation errors by step.
#[wasm_bindgen]
pub fn bandit_trace(seed: u32, horizon: u32) -> Result<String, String> {
    let sys = SwitchedSystem::new(builtin::bandit_arms()).map_err(fail)?;
    let noise = NoiseSet::symmetric_box(4, 1.0).map_err(fail)?;
    let tr = policy::run(
        &sys,
        &noise,
        horizon as usize,
        u64::from(seed),
        ErrorMetric::Frobenius,
    )
    .map_err(fail)?;
    let arms: Vec<usize> = tr.records.iter().map(|r| r.arm + 1).collect();
    let norms: Vec<f64> = tr.records.iter().map(|r| r.state_norm).collect();
    let errors: Vec<Vec<Option<f64>>> = tr.records.iter().map(|r| r.errors.clone()).collect();
    let status = match tr.status {
        TraceStatus::Complete => "complete".to_string(),
        TraceStatus::Exploded { t } => format!("exploded@{t}"),
    };
    Ok(json!({
        "arms": arms,
        "state_norm": norms,
        "errors": errors,
        "lock_in": tr.lock_in_step(),
        "status": status,
    })
    .to_string())
}

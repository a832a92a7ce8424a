//! Set-membership estimation of a dynamics matrix from measurement pairs,
//! its pure-feasibility variant, and the ordinary least-squares baseline.
//!
//! The set-membership estimate solves
//!
//! ```text
//!     minimize    Σ_i ‖y_i − A x_i‖² + ridge·‖A‖²_F
//!     subject to  y_i − A x_i ∈ W      for every pair i
//! ```
//!
//! The ridge defaults to zero. When the regressors are rank deficient the
//! minimizer is not unique and [`FALLBACK_RIDGE`] picks the one of least
//! norm.
//!
//! For a box `W` the constraints act on each row of `A` separately, so the
//! problem splits into `d` QPs in `d` variables. Each row QP is rewritten
//! through the triangular factor `R` of `[X; √ridge·I]` as a Euclidean
//! projection in `z = R a`, which is then solved exactly by the dual
//! active-set method in [`crate::qp`].
//!
//! Constraint rows are divided by `max(1, ‖x_i‖)`, so violations and slack
//! tolerances are measured per unit of regressor norm. This keeps the
//! tolerances meaningful on explosive trajectories where `‖x_t‖` grows
//! geometrically.

pub mod certificate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::MeasurementGroup;
use crate::error::{check_dim, Error, Result};
use crate::noise::NoiseSet;
use crate::qp::{self, Halfspaces, ProjectionStatus};

pub use certificate::{verify, Certificate};

pub const DEFAULT_RIDGE: f64 = 0.0;
/// Tie-breaking ridge for rank-deficient data and the feasibility loss.
pub const FALLBACK_RIDGE: f64 = 1e-9;
/// Primal feasibility, scaled residual units.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Relative stationarity.
pub const KKT_TOL: f64 = 1e-8;
pub const MAX_ITER_PER_ROW: usize = 10_000;

const SOLVER_SLACK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `Σ ‖y_i − A x_i‖²`
    Squared,
    /// Any feasible point; the ridge term picks the minimum-norm one.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Underdetermined,
    MaxIter,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Underdetermined => "underdetermined",
            Status::MaxIter => "max_iter",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    #[default]
    Frobenius,
    Spectral,
}

#[derive(Debug, Clone)]
pub struct EstimateProblem<'a> {
    pub group: &'a MeasurementGroup,
    pub noise: &'a NoiseSet,
    pub loss: Loss,
    pub ridge: f64,
}

impl<'a> EstimateProblem<'a> {
    pub fn new(group: &'a MeasurementGroup, noise: &'a NoiseSet) -> Self {
        Self {
            group,
            noise,
            loss: Loss::Squared,
            ridge: DEFAULT_RIDGE,
        }
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub a_hat: DMatrix<f64>,
    pub status: Status,
    pub max_violation: f64,
    pub kkt_residual: f64,
    pub objective: f64,
    pub n_used: usize,
    pub iterations: usize,
}

/// Set-membership estimate with the squared-residual loss (or whichever
/// loss the problem names).
pub fn sme_estimate(problem: &EstimateProblem<'_>) -> Result<EstimateResult> {
    let group = problem.group;
    if group.is_empty() {
        return Err(Error::NoPairs);
    }
    let d = group.dim().unwrap_or(0);
    check_dim(problem.noise.dim(), d)?;
    let (lower, upper) = problem
        .noise
        .bounds()
        .ok_or(Error::Unsupported("estimation with a polytope noise set"))?;
    if !(problem.ridge >= 0.0 && problem.ridge.is_finite()) {
        return Err(Error::Config(format!(
            "ridge must be >= 0, got {}",
            problem.ridge
        )));
    }

    let x = group.regressors();
    let y = group.responses();
    let n = group.len();
    let underdetermined = numerical_rank(&x) < d;

    let (r, z0) = match transform(&x, &y, problem.loss, problem.ridge) {
        (Some(r), z0) => (r, z0),
        // rank-deficient data with no ridge
        (None, _) => match transform(&x, &y, problem.loss, FALLBACK_RIDGE) {
            (Some(r), z0) => (r, z0),
            (None, _) => return Err(Error::InvalidSystem("degenerate regressors".into())),
        },
    };

    // column i is m_i = R⁻ᵀ x_i, so that x_i·a = m_i·z
    let m = r
        .tr_solve_upper_triangular(&x.transpose())
        .ok_or_else(|| Error::InvalidSystem("singular factor".into()))?;
    let scale: Vec<f64> = group.xs.iter().map(|xi| xi.norm().max(1.0)).collect();

    let mut a_hat = DMatrix::zeros(d, d);
    let mut any_infeasible = false;
    let mut any_maxiter = false;
    let mut kkt: f64 = 0.0;
    let mut iterations = 0;
    for j in 0..d {
        let mut hs = Halfspaces::new(d);
        let mut normal = vec![0.0; d];
        for i in 0..n {
            let s = scale[i];
            for k in 0..d {
                normal[k] = -m[(k, i)] / s;
            }
            // y_ij − x_i·a ≥ lo_j
            hs.push(&normal, (lower[j] - y[(i, j)]) / s);
            for v in normal.iter_mut() {
                *v = -*v;
            }
            // y_ij − x_i·a ≤ up_j
            hs.push(&normal, (y[(i, j)] - upper[j]) / s);
        }
        let z0j = z0.column(j).into_owned();
        let proj = qp::project(&z0j, &hs, SOLVER_SLACK_TOL, MAX_ITER_PER_ROW);
        iterations += proj.iterations;
        match proj.status {
            ProjectionStatus::Infeasible => any_infeasible = true,
            ProjectionStatus::MaxIter => any_maxiter = true,
            ProjectionStatus::Optimal => {}
        }
        kkt = kkt.max(projection_kkt(&z0j, &proj.point, &proj.active, &hs));
        let row = r
            .solve_upper_triangular(&proj.point)
            .expect("nonsingular factor");
        a_hat.set_row(j, &row.transpose());
    }

    let max_violation = scaled_violation(group, lower, upper, &a_hat);
    let objective = match problem.loss {
        Loss::Squared => residual_sum_of_squares(group, &a_hat),
        Loss::Zero => soft_objective(group, problem.noise, &a_hat)?,
    };
    let status = if any_infeasible {
        Status::Infeasible
    } else if any_maxiter {
        Status::MaxIter
    } else if underdetermined {
        Status::Underdetermined
    } else {
        Status::Optimal
    };
    Ok(EstimateResult {
        a_hat,
        status,
        max_violation,
        kkt_residual: kkt,
        objective,
        n_used: n,
        iterations,
    })
}

/// Feasibility-only estimate: any `A` with every residual in `W`, chosen as
/// the one of least Frobenius norm.
pub fn feasible_estimate(group: &MeasurementGroup, noise: &NoiseSet) -> Result<EstimateResult> {
    let mut res = sme_estimate(&EstimateProblem::new(group, noise).with_loss(Loss::Zero))?;
    if res.objective > group.len() as f64 * FEASIBILITY_TOL * FEASIBILITY_TOL {
        res.status = Status::Infeasible;
    }
    Ok(res)
}

/// Ordinary least squares `Â = (Σ y xᵀ)(Σ x xᵀ)⁻¹`, through the pseudo-inverse
/// when the regressors are rank deficient.
pub fn ols_estimate(group: &MeasurementGroup) -> Result<EstimateResult> {
    if group.is_empty() {
        return Err(Error::NoPairs);
    }
    let d = group.dim().unwrap_or(0);
    let x = group.regressors();
    let y = group.responses();
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rank_cutoff(&x, smax);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let b = svd
        .solve(&y, cutoff.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidSystem(e.to_string()))?;
    let a_hat = b.transpose();

    let gram = x.tr_mul(&x);
    let cross = x.tr_mul(&y);
    let normal_residual = (&gram * &b - &cross).norm();
    let scale = (gram.norm() * b.norm() + cross.norm()).max(f64::MIN_POSITIVE);
    Ok(EstimateResult {
        objective: residual_sum_of_squares(group, &a_hat),
        a_hat,
        status: if rank < d {
            Status::Underdetermined
        } else {
            Status::Optimal
        },
        max_violation: 0.0,
        kkt_residual: normal_residual / scale,
        n_used: group.len(),
        iterations: 0,
    })
}

/// `‖Â − A‖` in the chosen norm.
pub fn estimation_error(
    a_hat: &DMatrix<f64>,
    a_true: &DMatrix<f64>,
    metric: ErrorMetric,
) -> Result<f64> {
    check_dim(a_true.nrows(), a_hat.nrows())?;
    check_dim(a_true.ncols(), a_hat.ncols())?;
    let diff = a_hat - a_true;
    Ok(match metric {
        ErrorMetric::Frobenius => diff.norm(),
        ErrorMetric::Spectral => crate::spectral::spectral_norm(&diff)?,
    })
}

fn rank_cutoff(x: &DMatrix<f64>, smax: f64) -> f64 {
    x.nrows().max(x.ncols()) as f64 * f64::EPSILON * smax
}

pub(crate) fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.is_empty() {
        return 0;
    }
    let sv = x.clone().singular_values();
    let cutoff = rank_cutoff(x, sv.max());
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Returns the triangular factor of the objective rows and the projected
/// targets `z0` (one column per row of `A`), or `None` for the factor if it
/// is singular.
fn transform(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    loss: Loss,
    ridge: f64,
) -> (Option<DMatrix<f64>>, DMatrix<f64>) {
    let (n, d) = x.shape();
    let sr = ridge.sqrt();
    let (r, z0) = match loss {
        Loss::Squared => {
            let mut b = DMatrix::zeros(n + d, d);
            b.view_mut((0, 0), (n, d)).copy_from(x);
            for k in 0..d {
                b[(n + k, k)] = sr;
            }
            let mut rhs = DMatrix::zeros(n + d, d);
            rhs.view_mut((0, 0), (n, d)).copy_from(y);
            let qr = b.qr();
            let z0 = qr.q().tr_mul(&rhs);
            (qr.r(), z0)
        }
        Loss::Zero => (DMatrix::identity(d, d) * sr, DMatrix::zeros(d, d)),
    };
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    // with a positive ridge RᵀR ⪰ ridge·I, so only exact breakdown counts
    let rel = if ridge > 0.0 { 0.0 } else { 1e-14 };
    let singular = !(dmax > 0.0 && dmax.is_finite()) || diag.iter().any(|&v| v <= rel * dmax);
    (if singular { None } else { Some(r) }, z0)
}

/// Relative stationarity of a projection, from the solver's own multipliers.
fn projection_kkt(
    z0: &DVector<f64>,
    z: &DVector<f64>,
    active: &[(usize, f64)],
    hs: &Halfspaces,
) -> f64 {
    let mut resid = z - z0;
    let mut mag = z.amax().max(z0.amax());
    for &(k, u) in active {
        let nk = DVector::from_column_slice(hs.normal(k));
        mag = mag.max(u.abs() * nk.amax());
        resid.axpy(-u, &nk, 1.0);
    }
    resid.amax() / mag.max(f64::MIN_POSITIVE)
}

/// Largest residual violation of `W`, per unit `max(1, ‖x_i‖)`.
pub(crate) fn scaled_violation(
    group: &MeasurementGroup,
    lower: &[f64],
    upper: &[f64],
    a: &DMatrix<f64>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in group.xs.iter().zip(&group.ys) {
        let s = x.norm().max(1.0);
        let r = y - a * x;
        for j in 0..r.len() {
            let v = (lower[j] - r[j]).max(r[j] - upper[j]).max(0.0);
            worst = worst.max(v / s);
        }
    }
    worst
}

pub(crate) fn residual_sum_of_squares(group: &MeasurementGroup, a: &DMatrix<f64>) -> f64 {
    group
        .xs
        .iter()
        .zip(&group.ys)
        .map(|(x, y)| (y - a * x).norm_squared())
        .sum()
}

fn soft_objective(group: &MeasurementGroup, noise: &NoiseSet, a: &DMatrix<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in group.xs.iter().zip(&group.ys) {
        let r = y - a * x;
        total += noise.distance(r.as_slice())?.powi(2);
    }
    Ok(total)
}

//! Independent optimality check for a set-membership estimate.
//!
//! Recomputes primal feasibility and stationarity from `Â` and the data
//! alone. Multipliers are recovered by nonnegative least squares over the
//! constraints found active at `Â`, so nothing here depends on the active
//! set or multipliers the QP solver reported.

use nalgebra::{DMatrix, DVector};

use super::{scaled_violation, Loss};
use crate::dynamics::MeasurementGroup;
use crate::error::{check_dim, Error, Result};
use crate::nnls::nnls;
use crate::noise::NoiseSet;

/// Constraints whose scaled slack is below this count as active.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest residual excursion outside `W` per unit `max(1, ‖x_i‖)`.
    pub max_violation: f64,
    /// Stationarity residual relative to the size of the gradient terms.
    pub kkt_residual: f64,
}

impl Certificate {
    pub fn passes(&self, violation_tol: f64, kkt_tol: f64) -> bool {
        self.max_violation <= violation_tol && self.kkt_residual <= kkt_tol
    }
}

pub fn verify(
    group: &MeasurementGroup,
    noise: &NoiseSet,
    loss: Loss,
    ridge: f64,
    a_hat: &DMatrix<f64>,
) -> Result<Certificate> {
    let (lower, upper) = noise
        .bounds()
        .ok_or(Error::Unsupported("certificates for polytope noise sets"))?;
    let d = a_hat.nrows();
    check_dim(d, lower.len())?;
    if let Some(gd) = group.dim() {
        check_dim(d, gd)?;
    }

    let max_violation = scaled_violation(group, lower, upper, a_hat);
    let mut kkt: f64 = 0.0;
    for j in 0..d {
        let a = a_hat.row(j).transpose();
        // gradient of the row objective, and the magnitude of its terms
        let mut grad = &a * (2.0 * ridge);
        let mut mag = 2.0 * ridge * a.norm();
        let mut columns: Vec<DVector<f64>> = Vec::new();
        for (x, y) in group.xs.iter().zip(&group.ys) {
            let fit = a.dot(x);
            let r = y[j] - fit;
            if loss == Loss::Squared {
                grad.axpy(-2.0 * r, x, 1.0);
                mag += 2.0 * (fit.abs() + y[j].abs()) * x.norm();
            }
            let xn = x.norm();
            if xn == 0.0 {
                continue;
            }
            let s = xn.max(1.0);
            // r − lo ≥ 0 has gradient −x; up − r ≥ 0 has gradient +x
            if (r - lower[j]) / s <= ACTIVE_TOL {
                columns.push(-x / xn);
            }
            if (upper[j] - r) / s <= ACTIVE_TOL {
                columns.push(x / xn);
            }
        }
        let resid = if columns.is_empty() {
            grad.amax()
        } else {
            let n = DMatrix::from_columns(&columns);
            let mu = nnls(&n, &grad);
            (n * mu - &grad).amax()
        };
        let rel = if mag > 0.0 { resid / mag } else { resid };
        kkt = kkt.max(rel);
    }
    Ok(Certificate {
        max_violation,
        kkt_residual: kkt,
    })
}

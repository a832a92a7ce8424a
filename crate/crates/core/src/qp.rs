//! Euclidean projection onto a polyhedron `{z : n_k·z >= b_k}`.
//!
//! This is the dual active-set method of Goldfarb and Idnani specialised to
//! an identity Hessian: starting from the unconstrained minimiser `z0`, the
//! most violated constraint is added one at a time, dropping active
//! constraints whose multipliers would turn negative. Every least-squares QP
//! in the crate is mapped onto this form by a change of variables, so the
//! solver never sees an ill-conditioned Hessian.
//!
//! The active normals are kept linearly independent by construction, so the
//! active set never exceeds `d` entries and refactoring it from scratch at
//! each step is cheap for the small state dimensions targeted here.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub point: DVector<f64>,
    /// `(constraint index, multiplier)` for each active constraint.
    pub active: Vec<(usize, f64)>,
    pub iterations: usize,
    pub status: ProjectionStatus,
}

/// Half-space system stored row-major: constraint `k` reads
/// `normals[k*d..(k+1)*d] · z >= rhs[k]`.
#[derive(Debug, Clone)]
pub struct Halfspaces {
    pub dim: usize,
    pub normals: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Halfspaces {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            normals: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn push(&mut self, normal: &[f64], rhs: f64) {
        debug_assert_eq!(normal.len(), self.dim);
        self.normals.extend_from_slice(normal);
        self.rhs.push(rhs);
    }

    pub fn normal(&self, k: usize) -> &[f64] {
        &self.normals[k * self.dim..(k + 1) * self.dim]
    }

    /// `n_k·z - b_k`; negative means violated.
    pub fn slack(&self, k: usize, z: &DVector<f64>) -> f64 {
        dot(self.normal(k), z.as_slice()) - self.rhs[k]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects `z0` onto the polyhedron. A constraint counts as violated when
/// its slack is below `-tol·max(1, |b_k|)`; callers normalise rows
/// beforehand.
pub fn project(z0: &DVector<f64>, hs: &Halfspaces, tol: f64, max_iter: usize) -> Projection {
    let d = hs.dim;
    let mut z = z0.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        // most violated constraint
        let mut worst = None;
        let mut worst_slack = 0.0;
        for k in 0..hs.len() {
            if active.contains(&k) {
                continue;
            }
            let s = hs.slack(k, &z);
            if s < -tol * hs.rhs[k].abs().max(1.0) && s < worst_slack {
                worst_slack = s;
                worst = Some(k);
            }
        }
        let Some(p) = worst else {
            return Projection {
                point: z,
                active: active.into_iter().zip(mult).collect(),
                iterations,
                status: ProjectionStatus::Optimal,
            };
        };

        let np = DVector::from_column_slice(hs.normal(p));
        let mut u_p = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Projection {
                    point: z,
                    active: active.into_iter().zip(mult).collect(),
                    iterations,
                    status: ProjectionStatus::MaxIter,
                };
            }

            let (step, r) = directions(hs, &active, &np, d);

            // largest dual step keeping active multipliers nonnegative
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 0.0 {
                    let ratio = mult[j] / rj;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }

            let curvature = step.dot(&np);
            let degenerate = step.norm() <= 1e-12 * np.norm().max(f64::MIN_POSITIVE);
            let t2 = if degenerate || curvature <= 0.0 {
                f64::INFINITY
            } else {
                -hs.slack(p, &z) / curvature
            };

            if t1.is_infinite() && t2.is_infinite() {
                return Projection {
                    point: z,
                    active: active.into_iter().zip(mult).collect(),
                    iterations,
                    status: ProjectionStatus::Infeasible,
                };
            }

            let t = t1.min(t2);
            if t2.is_finite() {
                z.axpy(t, &step, 1.0);
            }
            for (m, rj) in mult.iter_mut().zip(r.iter()) {
                *m -= t * rj;
            }
            u_p += t;

            if t2 <= t1 {
                active.push(p);
                mult.push(u_p);
                break;
            }
            let j = drop.expect("finite t1 has a blocking index");
            active.remove(j);
            mult.remove(j);
        }
    }
}

/// Primal step direction (projection of `np` onto the null space of the
/// active normals) and the dual direction `N^+ np`.
fn directions(
    hs: &Halfspaces,
    active: &[usize],
    np: &DVector<f64>,
    d: usize,
) -> (DVector<f64>, DVector<f64>) {
    if active.is_empty() {
        return (np.clone(), DVector::zeros(0));
    }
    let n = DMatrix::from_fn(d, active.len(), |i, j| hs.normal(active[j])[i]);
    let qr = n.qr();
    let q = qr.q();
    let rmat = qr.r();
    let coeff = q.tr_mul(np);
    let step = np - &q * &coeff;
    let r = rmat
        .solve_upper_triangular(&coeff)
        .unwrap_or_else(|| DVector::zeros(active.len()));
    (step, r)
}

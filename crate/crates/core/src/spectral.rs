//! Spectral radius and spectral norm of small dense matrices.
//!
//! The radius needs every eigenvalue, including complex pairs and repeated
//! roots, so it goes through balancing, Householder reduction to upper
//! Hessenberg form and the Francis double-shift QR iteration. The norm is
//! the square root of the largest eigenvalue of `AᵀA`.

// index loops mirror the textbook matrix algorithms
#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub radius: f64,
    pub norm: f64,
    /// Eigenvalue moduli, ascending.
    pub eigen_moduli: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalues {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Eigenvalues {
    pub fn moduli(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r.hypot(*i))
            .collect();
        m.sort_by(f64::total_cmp);
        m
    }
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSystem("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Eigenvalues> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Eigenvalues {
            re: vec![],
            im: vec![],
            iterations: 0,
            converged: true,
        });
    }
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).collect())
        .collect();
    balance(&mut h);
    hessenberg(&mut h);
    Ok(hqr(&mut h))
}

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    let ev = eigenvalues(a)?;
    Ok(ev.moduli().last().copied().unwrap_or(0.0))
}

pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSystem("matrix has non-finite entries".into()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let gram = a.tr_mul(a);
    let eig = SymmetricEigen::new(gram);
    Ok(eig.eigenvalues.max().max(0.0).sqrt())
}

pub fn report(a: &DMatrix<f64>) -> Result<SpectralReport> {
    let ev = eigenvalues(a)?;
    let eigen_moduli = ev.moduli();
    Ok(SpectralReport {
        radius: eigen_moduli.last().copied().unwrap_or(0.0),
        norm: spectral_norm(a)?,
        eigen_moduli,
        iterations: ev.iterations,
        converged: ev.converged,
    })
}

/// Diagonal similarity scaling by powers of two so row and column norms
/// are comparable.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha: f64 = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let sign = if a[k + 1][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = vec![0.0; n];
        v[k + 1] = a[k + 1][k] + sign * alpha;
        for i in k + 2..n {
            v[i] = a[i][k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2vvᵀ/vᵀv) A (I - 2vvᵀ/vᵀv)
        for j in 0..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k + 1..n {
                a[i][j] -= s * v[i];
            }
        }
        for row in a.iter_mut() {
            let s: f64 = (k + 1..n).map(|j| row[j] * v[j]).sum::<f64>() * 2.0 / vnorm2;
            for j in k + 1..n {
                row[j] -= s * v[j];
            }
        }
        a[k + 1][k] = -sign * alpha;
        for i in k + 2..n {
            a[i][k] = 0.0;
        }
    }
}

const DEFLATION_TOL: f64 = 1e-12;

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
/// At most `100·n` sweeps; on failure the remaining diagonal entries stand
/// in for the undeflated eigenvalues.
fn hqr(a: &mut [Vec<f64>]) -> Eigenvalues {
    let n = a.len();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let max_sweeps = 100 * n;
    let mut sweeps = 0;

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nu;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= DEFLATION_TOL * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }

            if sweeps >= max_sweeps {
                for i in 0..=nu {
                    wr[i] = a[i][i] + t;
                    wi[i] = 0.0;
                }
                return Eigenvalues {
                    re: wr,
                    im: wi,
                    iterations: sweeps,
                    converged: false,
                };
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            sweeps += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let s = y - z;
                p = (rr * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // double QR step on rows l..=nu, columns m..=nu
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nu - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nu - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Eigenvalues {
        re: wr,
        im: wi,
        iterations: sweeps,
        converged: true,
    }
}

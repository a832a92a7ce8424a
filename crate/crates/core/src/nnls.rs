//! Lawson–Hanson nonnegative least squares, used where a certificate must
//! be recomputed without trusting the QP solver's own multipliers.

use nalgebra::{DMatrix, DVector};

/// Minimises `‖E x − f‖₂` subject to `x ≥ 0`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let k = e.ncols();
    let mut x = DVector::zeros(k);
    if k == 0 {
        return x;
    }
    let mut passive = vec![false; k];
    let scale = e.amax().max(1.0) * f.amax().max(1.0);
    let tol = 1e-13 * scale * (e.nrows().max(k) as f64);
    let max_outer = 3 * k + 10;

    for _ in 0..max_outer {
        let w = e.tr_mul(&(f - e * &x));
        let candidate = (0..k)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        match candidate {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }

        for _ in 0..max_outer {
            let s = passive_solve(e, f, &passive);
            let bad: Vec<usize> = (0..k).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if bad.is_empty() {
                x = s;
                break;
            }
            let alpha = bad
                .iter()
                .map(|&i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for i in 0..k {
                if passive[i] && x[i] <= 1e-15 * scale {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

fn passive_solve(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = e.select_columns(&idx);
    let sol = sub
        .svd(true, true)
        .solve(f, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    let mut out = DVector::zeros(passive.len());
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = sol[pos];
    }
    out
}

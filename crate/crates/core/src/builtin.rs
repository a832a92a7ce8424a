//! The four 4×4 dynamics matrices used by the reference experiments.
//!
//! `A1` is Schur stable; `A2`, `A3` and `A4` are not. `A2` has the
//! repeated unstable eigenvalue 1.1 on which ordinary least squares is
//! inconsistent.

use nalgebra::DMatrix;

#[rustfmt::skip]
const A1: [f64; 16] = [
    0.76, 0.0,  1.6,  1.6,
    0.0,  0.78, 0.0,  1.6,
    0.0,  0.0,  0.79, 0.0,
    0.0,  0.0,  0.0,  0.79,
];

#[rustfmt::skip]
const A2: [f64; 16] = [
    0.0, 1.1, 0.0, 0.0,
    1.1, 0.0, 0.0, 0.0,
    0.0, 0.0, 1.1, 0.0,
    0.0, 0.0, 0.0, 1.1,
];

#[rustfmt::skip]
const A3: [f64; 16] = [
    0.91, 0.7, 0.0,  0.0,
    0.7,  0.0, 0.0,  0.0,
    0.0,  0.0, 0.28, 0.0,
    0.0,  0.0, 0.0,  1.05,
];

#[rustfmt::skip]
const A4: [f64; 16] = [
    0.0,  0.0,  0.98, 0.0,
    0.0,  0.0,  0.0,  0.77,
    0.98, 0.0,  0.56, 0.0,
    0.0,  0.84, 0.0,  0.14,
];

pub fn a1() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &A1)
}

pub fn a2() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &A2)
}

pub fn a3() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &A3)
}

pub fn a4() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &A4)
}

/// Looks up `"A1"`..`"A4"` (case-insensitive).
pub fn by_name(name: &str) -> Option<DMatrix<f64>> {
    match name.to_ascii_uppercase().as_str() {
        "A1" => Some(a1()),
        "A2" => Some(a2()),
        "A3" => Some(a3()),
        "A4" => Some(a4()),
        _ => None,
    }
}

/// `[A1, A2, A3, A4]`, the bandit environment.
pub fn bandit_arms() -> Vec<DMatrix<f64>> {
    vec![a1(), a2(), a3(), a4()]
}

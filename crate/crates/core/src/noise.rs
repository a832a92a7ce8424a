//! The known, compact, convex support of the process noise.

use nalgebra::{DMatrix, DVector};
use rand::distr::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nnls::nnls;
use crate::qp::{self, Halfspaces, ProjectionStatus};

/// Default per-inequality membership slack.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Noise support `W`.
///
/// Boxes are the working case: estimation decomposes row by row only for
/// axis-aligned boxes. Polytopes `{u : H u <= h}` support membership and
/// distance queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Polytope { h: Vec<Vec<f64>>, rhs: Vec<f64> },
}

impl NoiseSet {
    /// Box with `lower < 0 < upper`-style bounds; requires a strict interior
    /// and `0 ∈ W`.
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = NoiseSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    /// The symmetric box `[-r, r]^d`.
    pub fn symmetric_box(d: usize, r: f64) -> Result<Self> {
        Self::new_box(vec![-r; d], vec![r; d])
    }

    /// The degenerate box `{0}`. It has no interior and is only meant for
    /// noise-free simulation; it is never a valid estimation set.
    pub fn zero(d: usize) -> Self {
        NoiseSet::Box {
            lower: vec![0.0; d],
            upper: vec![0.0; d],
        }
    }

    pub fn new_polytope(h: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let set = NoiseSet::Polytope { h, rhs };
        set.validate()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            NoiseSet::Box { lower, .. } => lower.len(),
            NoiseSet::Polytope { h, .. } => h.first().map_or(0, Vec::len),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, NoiseSet::Box { .. })
    }

    /// Returns `(lower, upper)` for a box.
    pub fn bounds(&self) -> Option<(&[f64], &[f64])> {
        match self {
            NoiseSet::Box { lower, upper } => Some((lower, upper)),
            NoiseSet::Polytope { .. } => None,
        }
    }

    /// Checks the construction invariants. Deserialized sets should be
    /// passed through here before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSet::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::InvalidNoiseSet("box has dimension 0".into()));
                }
                check_dim(lower.len(), upper.len())?;
                for (j, (&lo, &hi)) in lower.iter().zip(upper).enumerate() {
                    if !(lo.is_finite() && hi.is_finite()) {
                        return Err(Error::InvalidNoiseSet(format!("bound {j} is not finite")));
                    }
                    if lo >= hi {
                        return Err(Error::InvalidNoiseSet(format!(
                            "coordinate {j}: lower {lo} must be below upper {hi}"
                        )));
                    }
                    if lo > 0.0 || hi < 0.0 {
                        return Err(Error::InvalidNoiseSet(format!(
                            "coordinate {j}: [{lo}, {hi}] does not contain 0"
                        )));
                    }
                }
                Ok(())
            }
            NoiseSet::Polytope { h, rhs } => {
                let d = self.dim();
                if d == 0 || h.is_empty() {
                    return Err(Error::InvalidNoiseSet("polytope has no rows".into()));
                }
                check_dim(h.len(), rhs.len())?;
                for row in h {
                    check_dim(d, row.len())?;
                }
                if !polytope_is_bounded(h, d) {
                    return Err(Error::InvalidNoiseSet("polytope is unbounded".into()));
                }
                let proj = qp::project(&DVector::zeros(d), &self.halfspaces(), 1e-12, 10_000);
                if proj.status == ProjectionStatus::Infeasible {
                    return Err(Error::InvalidNoiseSet("polytope is empty".into()));
                }
                Ok(())
            }
        }
    }

    /// True iff every defining inequality holds up to `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            NoiseSet::Box { lower, upper } => u
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&x, (&lo, &hi))| x >= lo - tol && x <= hi + tol),
            NoiseSet::Polytope { h, rhs } => h
                .iter()
                .zip(rhs)
                .all(|(row, &b)| qp::dot(row, u) <= b + tol),
        })
    }

    /// Euclidean projection of `u` onto the set.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            NoiseSet::Box { lower, upper } => u
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&lo, &hi))| x.clamp(lo, hi))
                .collect(),
            NoiseSet::Polytope { .. } => {
                if self.contains(u, 0.0)? {
                    return Ok(u.to_vec());
                }
                let z0 = DVector::from_column_slice(u);
                let proj = qp::project(&z0, &self.halfspaces(), 1e-14, 10_000);
                proj.point.as_slice().to_vec()
            }
        })
    }

    /// Euclidean distance from `u` to the set; zero exactly on the set.
    pub fn distance(&self, u: &[f64]) -> Result<f64> {
        if self.contains(u, 0.0)? {
            return Ok(0.0);
        }
        let p = self.project(u)?;
        let d = u
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        // a point outside a closed set is at positive distance
        Ok(if d > 0.0 { d } else { f64::MIN_POSITIVE })
    }

    fn halfspaces(&self) -> Halfspaces {
        let d = self.dim();
        let mut hs = Halfspaces::new(d);
        if let NoiseSet::Polytope { h, rhs } = self {
            for (row, &b) in h.iter().zip(rhs) {
                let neg: Vec<f64> = row.iter().map(|v| -v).collect();
                hs.push(&neg, -b);
            }
        }
        hs
    }
}

/// `{u : H u <= h}` is bounded iff the rows of `H` positively span `R^d`,
/// i.e. every `±e_j` is a nonnegative combination of rows.
fn polytope_is_bounded(h: &[Vec<f64>], d: usize) -> bool {
    let ht = DMatrix::from_fn(d, h.len(), |i, k| h[k][i]);
    let scale = ht.amax().max(1.0);
    (0..d).all(|j| {
        [1.0, -1.0].iter().all(|&sign| {
            let mut e = DVector::zeros(d);
            e[j] = sign;
            let x = nnls(&ht, &e);
            (&ht * x - e).norm() <= 1e-10 * scale
        })
    })
}

/// Seeded i.i.d. uniform draws from a box.
///
/// Single-owner: parallel callers should hold distinct samplers, created
/// from distinct seeds or from [`NoiseSampler::with_stream`].
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    set: NoiseSet,
    seed: u64,
    rng: ChaCha8Rng,
    coords: Vec<Uniform<f64>>,
}

impl NoiseSampler {
    pub fn new(set: NoiseSet, seed: u64) -> Self {
        Self::with_stream(set, seed, 0)
    }

    /// Independent sub-stream of the same seed.
    pub fn with_stream(set: NoiseSet, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let coords = match &set {
            NoiseSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| Uniform::new_inclusive(lo, hi).expect("finite box bounds"))
                .collect(),
            NoiseSet::Polytope { .. } => Vec::new(),
        };
        Self {
            set,
            seed,
            rng,
            coords,
        }
    }

    pub fn set(&self) -> &NoiseSet {
        &self.set
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn sample(&mut self) -> Result<DVector<f64>> {
        if !self.set.is_box() {
            return Err(Error::Unsupported("sampling from a polytope noise set"));
        }
        let rng = &mut self.rng;
        Ok(DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|u| rng.sample(u)),
        ))
    }
}

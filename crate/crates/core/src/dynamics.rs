//! Switched autonomous linear dynamics `x_{t+1} = A_{α_t} x_t + w_t` and the
//! regrouping of one trajectory into per-subsystem measurement pairs.
//!
//! Subsystem indices are 0-based in the API; the CSV format writes them
//! 1-based.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::noise::NoiseSampler;

/// States with `‖x‖∞` above this abort a simulation.
pub const EXPLOSION_LIMIT: f64 = 1e100;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    matrices: Vec<DMatrix<f64>>,
}

impl SwitchedSystem {
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidSystem(
                "at least one subsystem is required".into(),
            ));
        };
        let d = first.nrows();
        if d == 0 {
            return Err(Error::InvalidSystem("state dimension is 0".into()));
        }
        for (p, a) in matrices.iter().enumerate() {
            if a.nrows() != d || a.ncols() != d {
                return Err(Error::InvalidSystem(format!(
                    "matrix {} is {}x{}, expected {d}x{d}",
                    p + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        Ok(Self { matrices })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn num_systems(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, p: usize) -> &DMatrix<f64> {
        &self.matrices[p]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }
}

/// `A x + w`.
pub fn step(a: &DMatrix<f64>, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(a.ncols(), x.len())?;
    check_dim(a.nrows(), w.len())?;
    Ok(a * x + w)
}

pub(crate) fn check_explosion(t: usize, x: &DVector<f64>) -> Result<()> {
    let norm = x.amax();
    if norm > EXPLOSION_LIMIT || !norm.is_finite() {
        Err(Error::Explosion { t, norm })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub switches: Vec<usize>,
    pub noises: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn new(states: Vec<DVector<f64>>, switches: Vec<usize>) -> Result<Self> {
        if states.len() != switches.len() + 1 {
            return Err(Error::InvalidSystem(format!(
                "{} states for {} switches",
                states.len(),
                switches.len()
            )));
        }
        let d = states[0].len();
        for x in &states {
            check_dim(d, x.len())?;
        }
        Ok(Self {
            states,
            switches,
            noises: None,
        })
    }

    /// Number of transitions `T`.
    pub fn len(&self) -> usize {
        self.switches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switches.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Writes `t,alpha_t,x_1..x_d`; `alpha_t` is 1-based and empty on the
    /// final row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "alpha_t".to_string()];
        header.extend((1..=self.dim()).map(|j| format!("x_{j}")));
        w.write_record(&header)?;
        for (t, x) in self.states.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.push(
                self.switches
                    .get(t)
                    .map_or(String::new(), |a| (a + 1).to_string()),
            );
            row.extend(x.iter().map(|v| format_float(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "t" || &headers[1] != "alpha_t" {
            return Err(Error::Config(
                "trajectory csv must start with t,alpha_t,x_1".into(),
            ));
        }
        let d = headers.len() - 2;
        let mut states = Vec::new();
        let mut switches = Vec::new();
        let mut ended = false;
        for (row_no, rec) in r.records().enumerate() {
            let rec = rec?;
            if ended {
                return Err(Error::Config(format!(
                    "row {} follows the final state",
                    row_no + 1
                )));
            }
            let t: usize = parse(&rec[0], row_no)?;
            if t != row_no {
                return Err(Error::Config(format!(
                    "row {}: expected t = {row_no}",
                    row_no + 1
                )));
            }
            let alpha = rec[1].trim();
            if alpha.is_empty() {
                ended = true;
            } else {
                let a: usize = parse(alpha, row_no)?;
                if a == 0 {
                    return Err(Error::Config(format!(
                        "row {}: alpha_t is 1-based",
                        row_no + 1
                    )));
                }
                switches.push(a - 1);
            }
            let x: Vec<f64> = (0..d)
                .map(|j| parse(&rec[j + 2], row_no))
                .collect::<Result<_>>()?;
            states.push(DVector::from_vec(x));
        }
        if !ended {
            return Err(Error::Config("final row must have an empty alpha_t".into()));
        }
        Trajectory::new(states, switches)
    }
}

fn parse<T: std::str::FromStr>(s: &str, row: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("row {}: cannot parse '{s}'", row + 1)))
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Simulates the switched system along `switches` (0-based) from `x0`,
/// drawing one noise vector per transition.
pub fn simulate(
    sys: &SwitchedSystem,
    switches: &[usize],
    x0: &DVector<f64>,
    sampler: &mut NoiseSampler,
    record_noise: bool,
) -> Result<Trajectory> {
    let d = sys.dim();
    check_dim(d, x0.len())?;
    check_dim(d, sampler.dim())?;
    if let Some(&bad) = switches.iter().find(|&&a| a >= sys.num_systems()) {
        return Err(Error::InvalidSystem(format!(
            "switch index {} outside 1..={}",
            bad + 1,
            sys.num_systems()
        )));
    }
    check_explosion(0, x0)?;
    let mut states = Vec::with_capacity(switches.len() + 1);
    let mut noises = record_noise.then(|| Vec::with_capacity(switches.len()));
    states.push(x0.clone());
    for (t, &alpha) in switches.iter().enumerate() {
        let w = sampler.sample()?;
        let next = step(sys.matrix(alpha), &states[t], &w)?;
        check_explosion(t + 1, &next)?;
        if let Some(ns) = noises.as_mut() {
            ns.push(w);
        }
        states.push(next);
    }
    Ok(Trajectory {
        states,
        switches: switches.to_vec(),
        noises,
    })
}

/// Pairs `(x_i, y_i)` observed while subsystem `system` was active.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub system: usize,
    pub xs: Vec<DVector<f64>>,
    pub ys: Vec<DVector<f64>>,
}

impl MeasurementGroup {
    pub fn new(system: usize) -> Self {
        Self {
            system,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    pub fn from_pairs(system: usize, pairs: Vec<(DVector<f64>, DVector<f64>)>) -> Result<Self> {
        let mut g = Self::new(system);
        for (x, y) in pairs {
            g.push(x, y)?;
        }
        Ok(g)
    }

    pub fn push(&mut self, x: DVector<f64>, y: DVector<f64>) -> Result<()> {
        check_dim(x.len(), y.len())?;
        if let Some(first) = self.xs.first() {
            check_dim(first.len(), x.len())?;
        }
        self.xs.push(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.xs.first().map(|x| x.len())
    }

    /// The first `n` pairs.
    pub fn prefix(&self, n: usize) -> MeasurementGroup {
        let n = n.min(self.len());
        Self {
            system: self.system,
            xs: self.xs[..n].to_vec(),
            ys: self.ys[..n].to_vec(),
        }
    }

    /// `n × d` regressor matrix, one row per `x_i`.
    pub fn regressors(&self) -> DMatrix<f64> {
        let d = self.dim().unwrap_or(0);
        DMatrix::from_fn(self.len(), d, |i, j| self.xs[i][j])
    }

    /// `n × d` response matrix, one row per `y_i`.
    pub fn responses(&self) -> DMatrix<f64> {
        let d = self.dim().unwrap_or(0);
        DMatrix::from_fn(self.len(), d, |i, j| self.ys[i][j])
    }
}

/// Splits a trajectory into `num_systems` groups, keeping time order within
/// each group.
pub fn group(traj: &Trajectory, num_systems: usize) -> Result<Vec<MeasurementGroup>> {
    let mut groups: Vec<MeasurementGroup> = (0..num_systems).map(MeasurementGroup::new).collect();
    for (t, &alpha) in traj.switches.iter().enumerate() {
        let g = groups.get_mut(alpha).ok_or_else(|| {
            Error::InvalidSystem(format!(
                "switch {} at t = {t} exceeds q = {num_systems}",
                alpha + 1
            ))
        })?;
        g.push(traj.states[t].clone(), traj.states[t + 1].clone())?;
    }
    Ok(groups)
}

//! Greedy bandit policy that stabilizes a switched system by exploiting the
//! first subsystem whose estimated spectral radius is below one.
//!
//! Each arm keeps its own measurement group. Every pull appends one pair
//! `(x_t, x_{t+1})` to the pulled arm and re-solves that arm's
//! set-membership estimate over its full history. While every estimated
//! radius is at least one the arm is drawn uniformly at random from a
//! dedicated seeded stream; otherwise the smallest index with `ρ̂ < 1` is
//! pulled.
//!
//! The stabilization guarantee presumes exactly one arm with `ρ < 1` and all
//! others with `ρ > 1`; nothing here checks that.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, MeasurementGroup, SwitchedSystem};
use crate::error::{check_dim, Error, Result};
use crate::estimators::{self, ErrorMetric, EstimateProblem, EstimateResult, Status};
use crate::noise::{NoiseSampler, NoiseSet};
use crate::spectral;

/// Stream of the seed used for arm selection; the noise uses stream 0.
pub const POLICY_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    InitSweep,
    Running,
}

/// The plant seen by the policy: true matrices, noise and current state.
#[derive(Debug, Clone)]
pub struct Environment {
    system: SwitchedSystem,
    sampler: NoiseSampler,
    state: DVector<f64>,
    t: usize,
}

impl Environment {
    pub fn new(system: SwitchedSystem, sampler: NoiseSampler, x0: DVector<f64>) -> Result<Self> {
        check_dim(system.dim(), x0.len())?;
        check_dim(system.dim(), sampler.dim())?;
        Ok(Self {
            system,
            sampler,
            state: x0,
            t: 0,
        })
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn system(&self) -> &SwitchedSystem {
        &self.system
    }

    /// Applies arm `p` and returns the measurement pair `(x_t, x_{t+1})`.
    pub fn pull(&mut self, p: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        if p >= self.system.num_systems() {
            return Err(Error::InvalidSystem(format!(
                "arm {} does not exist",
                p + 1
            )));
        }
        let w = self.sampler.sample()?;
        let next = dynamics::step(self.system.matrix(p), &self.state, &w)?;
        dynamics::check_explosion(self.t + 1, &next)?;
        let prev = std::mem::replace(&mut self.state, next);
        self.t += 1;
        Ok((prev, self.state.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct BanditState {
    noise: NoiseSet,
    groups: Vec<MeasurementGroup>,
    estimates: Vec<Option<EstimateResult>>,
    radii: Vec<Option<f64>>,
    rng: ChaCha8Rng,
    phase: Phase,
}

impl BanditState {
    pub fn new(num_arms: usize, noise: NoiseSet, seed: u64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidSystem("at least one arm is required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(POLICY_STREAM);
        Ok(Self {
            noise,
            groups: (0..num_arms).map(MeasurementGroup::new).collect(),
            estimates: vec![None; num_arms],
            radii: vec![None; num_arms],
            rng,
            phase: Phase::InitSweep,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.groups.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(MeasurementGroup::len).collect()
    }

    pub fn group(&self, p: usize) -> &MeasurementGroup {
        &self.groups[p]
    }

    pub fn estimate(&self, p: usize) -> Option<&DMatrix<f64>> {
        self.estimates[p].as_ref().map(|e| &e.a_hat)
    }

    pub fn estimate_result(&self, p: usize) -> Option<&EstimateResult> {
        self.estimates[p].as_ref()
    }

    pub fn radius(&self, p: usize) -> Option<f64> {
        self.radii[p]
    }

    pub fn radii(&self) -> &[Option<f64>] {
        &self.radii
    }

    /// Pulls every arm once, in index order.
    pub fn init_sweep(&mut self, env: &mut Environment) -> Result<Vec<usize>> {
        if self.phase != Phase::InitSweep {
            return Err(Error::InvalidSystem("init sweep already done".into()));
        }
        let mut arms = Vec::with_capacity(self.num_arms());
        for p in 0..self.num_arms() {
            let (x, y) = env.pull(p)?;
            self.update(p, x, y)?;
            arms.push(p);
        }
        self.phase = Phase::Running;
        Ok(arms)
    }

    /// Random arm while no estimate looks stable, otherwise the smallest
    /// index with `ρ̂ < 1`.
    pub fn choose_arm(&mut self) -> usize {
        let stable = self
            .radii
            .iter()
            .position(|r| matches!(r, Some(v) if *v < 1.0));
        match stable {
            Some(p) => p,
            None => self.rng.random_range(0..self.num_arms()),
        }
    }

    /// Appends a pair to arm `p` and re-estimates that arm only.
    pub fn update(&mut self, p: usize, x: DVector<f64>, y: DVector<f64>) -> Result<()> {
        self.groups[p].push(x, y)?;
        let est = estimators::sme_estimate(&EstimateProblem::new(&self.groups[p], &self.noise))?;
        if est.status == Status::Infeasible {
            return Err(Error::Infeasible { arm: p + 1 });
        }
        self.radii[p] = Some(spectral::spectral_radius(&est.a_hat)?);
        self.estimates[p] = Some(est);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// 0-based arm pulled at `t`.
    pub arm: usize,
    /// `‖x_t‖₂`, the state the arm acted on.
    pub state_norm: f64,
    /// `ρ̂_p` after the update at `t`; `None` before an arm's first pull.
    pub radii: Vec<Option<f64>>,
    /// `‖Â_p − A_p‖` after the update at `t`.
    pub errors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Complete,
    /// The state exceeded the explosion limit at step `t`.
    Exploded {
        t: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTrace {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub status: TraceStatus,
}

impl PolicyTrace {
    pub fn arms(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.arm).collect()
    }

    /// Start of the longest constant suffix of arm choices.
    pub fn lock_in_step(&self) -> Option<usize> {
        let last = self.records.last()?.arm;
        let n = self
            .records
            .iter()
            .rev()
            .take_while(|r| r.arm == last)
            .count();
        Some(self.records.len() - n)
    }
}

/// Runs the policy for `horizon` pulls from `x_0 = 0`. Noise and arm choice
/// use independent streams of `seed`. An explosion ends the trace early
/// with [`TraceStatus::Exploded`].
pub fn run(
    system: &SwitchedSystem,
    noise: &NoiseSet,
    horizon: usize,
    seed: u64,
    metric: ErrorMetric,
) -> Result<PolicyTrace> {
    let q = system.num_systems();
    if horizon <= q {
        return Err(Error::Config(format!(
            "horizon {horizon} must exceed the arm count {q}"
        )));
    }
    let sampler = NoiseSampler::new(noise.clone(), seed);
    let mut env = Environment::new(system.clone(), sampler, DVector::zeros(system.dim()))?;
    let mut state = BanditState::new(q, noise.clone(), seed)?;
    let mut records = Vec::with_capacity(horizon);
    let mut status = TraceStatus::Complete;

    for t in 0..horizon {
        let arm = if t < q { t } else { state.choose_arm() };
        let state_norm = env.state().norm();
        let pair = match env.pull(arm) {
            Ok(pair) => pair,
            Err(Error::Explosion { t, .. }) => {
                status = TraceStatus::Exploded { t };
                break;
            }
            Err(e) => return Err(e),
        };
        state.update(arm, pair.0, pair.1)?;
        if t + 1 == q {
            state.phase = Phase::Running;
        }
        let errors = (0..q)
            .map(|p| {
                state
                    .estimate(p)
                    .map(|a| estimators::estimation_error(a, system.matrix(p), metric))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(StepRecord {
            t,
            arm,
            state_norm,
            radii: state.radii().to_vec(),
            errors,
        });
    }
    Ok(PolicyTrace {
        seed,
        records,
        status,
    })
}

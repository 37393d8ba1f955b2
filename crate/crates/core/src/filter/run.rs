//! Sequential measurements: post-selected trajectories and sampled runs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chebyshev::CosinePropagator;
use super::schedule::{Schedule, Step, StepOrder};
use super::spectral::{apply_step_spectral, SpectralState};
use crate::error::{QpfError, Result};
use crate::operators::{state::expectation_of, SparseHermitianOperator, StateVector};
use crate::rng;

/// A representation in which filter steps can be applied.
pub trait FilterBackend: Sync {
    type State: Clone + Send + Sync;

    /// Applies `cos(t O + δ)`, renormalizes, and returns the probability of
    /// the 0 outcome.
    fn step(&self, state: &Self::State, step: Step) -> Result<(Self::State, f64)>;

    /// Energy expectation reported in trajectories.
    fn energy(&self, state: &Self::State) -> Result<f64>;
}

/// Eigenlevel representation; the filter operator and the energy coincide.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralBackend;

impl FilterBackend for SpectralBackend {
    type State = SpectralState;

    fn step(&self, state: &SpectralState, step: Step) -> Result<(SpectralState, f64)> {
        apply_step_spectral(state, step.time, step.phase)
    }

    fn energy(&self, state: &SpectralState) -> Result<f64> {
        Ok(state.energy())
    }
}

/// State-vector representation: steps go through the Chebyshev route on
/// `filter`, energies are measured with `observable` (for example `J²`
/// filtering while reporting the scaled Hamiltonian).
#[derive(Debug, Clone)]
pub struct OperatorBackend<'a> {
    propagator: CosinePropagator<'a>,
    observable: &'a SparseHermitianOperator,
}

impl<'a> OperatorBackend<'a> {
    pub fn new(propagator: CosinePropagator<'a>, observable: &'a SparseHermitianOperator) -> Self {
        OperatorBackend { propagator, observable }
    }
}

impl FilterBackend for OperatorBackend<'_> {
    type State = StateVector;

    fn step(&self, state: &StateVector, step: Step) -> Result<(StateVector, f64)> {
        self.propagator.step(state, step.time, step.phase)
    }

    fn energy(&self, state: &StateVector) -> Result<f64> {
        expectation_of(self.observable, state.amplitudes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// 1-based measurement index.
    pub step: usize,
    pub cumulative_time: f64,
    pub energy: f64,
    pub step_probability: f64,
    pub cumulative_probability: f64,
}

#[derive(Debug, Clone)]
pub struct FilterTrajectory<S> {
    pub initial_energy: f64,
    pub records: Vec<TrajectoryRecord>,
    pub final_state: S,
}

impl<S> FilterTrajectory<S> {
    pub fn final_probability(&self) -> f64 {
        self.records.last().map_or(1.0, |r| r.cumulative_probability)
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }
}

/// Where a post-selected run stopped because the surviving branch vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    /// 1-based index of the measurement that could not read 0.
    pub step: usize,
    pub probability: f64,
}

/// Applies every step in `order`, post-selecting the 0 outcome each time,
/// and records energies and probabilities after each measurement.
pub fn run_postselected<B: FilterBackend>(
    backend: &B,
    initial: &B::State,
    schedule: &Schedule,
    order: StepOrder,
) -> Result<FilterTrajectory<B::State>> {
    let (trajectory, extinction) = run_postselected_partial(backend, initial, schedule, order)?;
    match extinction {
        Some(e) => Err(QpfError::Extinction { step: e.step, probability: e.probability }),
        None => Ok(trajectory),
    }
}

/// Like [`run_postselected`], but an extinct branch ends the run and the
/// records up to that point are kept.
pub fn run_postselected_partial<B: FilterBackend>(
    backend: &B,
    initial: &B::State,
    schedule: &Schedule,
    order: StepOrder,
) -> Result<(FilterTrajectory<B::State>, Option<Extinction>)> {
    let initial_energy = backend.energy(initial)?;
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(schedule.len());
    let mut time = 0.0;
    let mut cumulative = 1.0;
    let mut extinction = None;
    for (i, step) in schedule.ordered(order).into_iter().enumerate() {
        let (next, p) = match backend.step(&state, step) {
            Ok(v) => v,
            Err(QpfError::Extinction { probability, .. }) => {
                extinction = Some(Extinction { step: i + 1, probability });
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        time += step.time;
        cumulative *= p;
        records.push(TrajectoryRecord {
            step: i + 1,
            cumulative_time: time,
            energy: backend.energy(&state)?,
            step_probability: p,
            cumulative_probability: cumulative,
        });
    }
    Ok((FilterTrajectory { initial_energy, records, final_state: state }, extinction))
}

/// Outcome of repeated sampled attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Ancilla readouts of each attempt; an attempt stops at its first 1.
    pub outcomes: Vec<Vec<u8>>,
    pub attempts_until_success: usize,
    pub success: bool,
    pub seed: u64,
}

/// Probabilities of the 0 outcome along the post-selected branch. That
/// branch is deterministic, so sampling only needs these numbers; they are
/// computed lazily as attempts get deeper.
struct BranchProbabilities<'a, B: FilterBackend> {
    backend: &'a B,
    steps: Vec<Step>,
    state: B::State,
    probabilities: Vec<f64>,
    extinct: bool,
}

impl<'a, B: FilterBackend> BranchProbabilities<'a, B> {
    fn new(backend: &'a B, initial: &B::State, schedule: &Schedule, order: StepOrder) -> Self {
        BranchProbabilities {
            backend,
            steps: schedule.ordered(order),
            state: initial.clone(),
            probabilities: Vec::new(),
            extinct: false,
        }
    }

    fn get(&mut self, i: usize) -> Result<f64> {
        while self.probabilities.len() <= i {
            if self.extinct {
                self.probabilities.push(0.0);
                continue;
            }
            match self.backend.step(&self.state, self.steps[self.probabilities.len()]) {
                Ok((next, p)) => {
                    self.state = next;
                    self.probabilities.push(p);
                }
                Err(QpfError::Extinction { probability, .. }) => {
                    self.extinct = true;
                    self.probabilities.push(probability.max(0.0));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(self.probabilities[i])
    }

    fn all(&mut self) -> Result<Vec<f64>> {
        for i in 0..self.steps.len() {
            self.get(i)?;
        }
        Ok(self.probabilities.clone())
    }
}

fn attempt(probabilities: &[f64], seed: u64, index: u64) -> Vec<u8> {
    let mut rng = rng::stream(seed, index);
    let mut outcomes = Vec::with_capacity(probabilities.len());
    for &p in probabilities {
        let bit = if rng.random::<f64>() < p { 0 } else { 1 };
        outcomes.push(bit);
        if bit == 1 {
            break;
        }
    }
    outcomes
}

/// Samples ancilla outcomes with the Born probabilities, restarting from
/// `initial` after any 1, until an attempt reads all zeros or
/// `max_attempts` is reached.
pub fn run_sampled<B: FilterBackend>(
    backend: &B,
    initial: &B::State,
    schedule: &Schedule,
    order: StepOrder,
    seed: u64,
    max_attempts: usize,
) -> Result<MeasurementRecord> {
    let mut branch = BranchProbabilities::new(backend, initial, schedule, order);
    let mut outcomes = Vec::new();
    for a in 0..max_attempts {
        let mut rng = rng::stream(seed, a as u64);
        let mut readout = Vec::new();
        for i in 0..schedule.len() {
            let p = branch.get(i)?;
            let bit = if rng.random::<f64>() < p { 0 } else { 1 };
            readout.push(bit);
            if bit == 1 {
                break;
            }
        }
        let success = readout.iter().all(|&b| b == 0);
        outcomes.push(readout);
        if success {
            return Ok(MeasurementRecord { outcomes, attempts_until_success: a + 1, success: true, seed });
        }
    }
    Ok(MeasurementRecord { outcomes, attempts_until_success: max_attempts, success: false, seed })
}

/// Number of all-zero attempts out of `attempts` independent ones.
pub fn sampled_acceptance<B: FilterBackend>(
    backend: &B,
    initial: &B::State,
    schedule: &Schedule,
    order: StepOrder,
    attempts: usize,
    seed: u64,
) -> Result<usize> {
    let probabilities = BranchProbabilities::new(backend, initial, schedule, order).all()?;
    Ok((0..attempts as u64)
        .into_par_iter()
        .filter(|&a| attempt(&probabilities, seed, a).iter().all(|&b| b == 0))
        .count())
}

//! Diagonal representation: a state written as amplitudes on the
//! eigenlevels of the filtering operator, where every filter step is a
//! pointwise multiplication.

use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, Step};
use crate::error::{QpfError, Result};
use crate::linalg::{self, C64};
use crate::operators::{EigenDecomposition, SparseHermitianOperator, SpectralMeasure};

/// Probabilities below this cannot be post-selected on.
pub const EXTINCTION_THRESHOLD: f64 = 1e-300;

/// Relative tolerance (times the spectrum width) for grouping levels.
pub const DEFAULT_DEGENERACY_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    /// Eigenvalues of the filtering operator, already shifted so the target
    /// sits at zero.
    energies: Vec<f64>,
    amplitudes: Vec<C64>,
    degeneracy_tolerance: f64,
}

/// Eigenlevels whose energies agree within the degeneracy tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub probability: f64,
    pub members: Vec<usize>,
}

impl SpectralState {
    /// Builds a normalized state; the amplitudes are rescaled to unit norm.
    pub fn new(energies: Vec<f64>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if energies.len() != amplitudes.len() {
            return Err(QpfError::DimensionMismatch { expected: energies.len(), got: amplitudes.len() });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(QpfError::Domain("spectral state has a non-finite energy".into()));
        }
        if linalg::normalize(&mut amplitudes) == 0.0 || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(QpfError::Domain("spectral state has zero or non-finite norm".into()));
        }
        let (lo, hi) = energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let width = if hi > lo { hi - lo } else { 1.0 };
        Ok(SpectralState { energies, amplitudes, degeneracy_tolerance: DEFAULT_DEGENERACY_FRACTION * width })
    }

    pub fn from_real(energies: Vec<f64>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(energies, amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Expands `state` in the eigenbasis of `decomposition`.
    pub fn from_eigenbasis(decomposition: &EigenDecomposition, state: &[C64]) -> Result<Self> {
        let coefficients = decomposition.project(state)?;
        Self::new(decomposition.eigenvalues.clone(), coefficients)
    }

    pub fn from_measure(measure: &SpectralMeasure) -> Result<Self> {
        Self::from_real(measure.nodes.clone(), &measure.amplitudes)
    }

    pub fn with_degeneracy_tolerance(mut self, tolerance: f64) -> Self {
        self.degeneracy_tolerance = tolerance;
        self
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.degeneracy_tolerance
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ |c_n|² E_n`
    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().zip(&self.energies).map(|(a, e)| a.norm_sqr() * e).sum()
    }

    /// Total probability on levels within the degeneracy tolerance of zero.
    pub fn target_population(&self) -> f64 {
        self.population_where(|e| e.abs() <= self.degeneracy_tolerance)
    }

    pub fn population_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.energies)
            .filter(|&(_, &e)| keep(e))
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    /// Groups eigenlevels into degenerate multiplets, ascending in energy.
    pub fn group_levels(&self) -> Vec<Level> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]));
        let mut levels: Vec<Level> = Vec::new();
        for k in order {
            let e = self.energies[k];
            let p = self.amplitudes[k].norm_sqr();
            match levels.last_mut() {
                Some(level) if (e - self.energies[level.members[0]]).abs() <= self.degeneracy_tolerance => {
                    level.probability += p;
                    level.members.push(k);
                }
                _ => levels.push(Level { energy: e, probability: p, members: vec![k] }),
            }
        }
        for level in &mut levels {
            level.energy = level.members.iter().map(|&k| self.energies[k]).sum::<f64>() / level.members.len() as f64;
        }
        levels
    }
}

/// Subtracting a target eigenvalue, so the filter acts on `O - o_target`.
pub trait ShiftTarget: Sized {
    fn shift_target(&self, o_target: f64) -> Self;
}

impl ShiftTarget for SpectralState {
    fn shift_target(&self, o_target: f64) -> Self {
        SpectralState {
            energies: self.energies.iter().map(|e| e - o_target).collect(),
            amplitudes: self.amplitudes.clone(),
            degeneracy_tolerance: self.degeneracy_tolerance,
        }
    }
}

impl ShiftTarget for SparseHermitianOperator {
    fn shift_target(&self, o_target: f64) -> Self {
        self.affine(o_target, 1.0)
    }
}

pub fn shift_target<T: ShiftTarget>(value: &T, o_target: f64) -> T {
    value.shift_target(o_target)
}

/// One post-selected measurement in the diagonal representation.
///
/// Returns the renormalized surviving state and the probability
/// `Σ |c_n|² cos²(t E_n + δ)` of reading the ancilla in 0.
pub fn apply_step_spectral(state: &SpectralState, time: f64, phase: f64) -> Result<(SpectralState, f64)> {
    let step = Step::new(time, phase);
    let filtered: Vec<C64> = state.amplitudes.iter().zip(&state.energies).map(|(a, &e)| a * step.factor(e)).collect();
    let p = linalg::norm_sqr(&filtered);
    if !(p >= EXTINCTION_THRESHOLD) {
        return Err(QpfError::Extinction { step: 0, probability: p });
    }
    let scale = 1.0 / p.sqrt();
    Ok((
        SpectralState {
            energies: state.energies.clone(),
            amplitudes: filtered.into_iter().map(|a| a * scale).collect(),
            degeneracy_tolerance: state.degeneracy_tolerance,
        },
        p,
    ))
}

/// Probability that every measurement of `schedule` reads 0:
/// `Σ_n |c_n|² Π_i cos²(t_i E_n + δ_i)`, evaluated in one pass.
pub fn success_probability(initial: &SpectralState, schedule: &Schedule) -> f64 {
    initial
        .amplitudes
        .iter()
        .zip(&initial.energies)
        .map(|(a, &e)| {
            let f = schedule.filter_value(e);
            a.norm_sqr() * f * f
        })
        .sum()
}

/// Converged success probability `f(0)² |⟨Ψ₀|ψ⟩|²` with `f(0) = Π cos δ_i`.
pub fn asymptotic_success(initial_overlap2: f64, schedule: &Schedule) -> Result<f64> {
    if !(0.0..=1.0).contains(&initial_overlap2) {
        return Err(QpfError::Domain(format!("overlap² must lie in [0, 1], got {initial_overlap2}")));
    }
    let f0 = schedule.f_at_zero();
    Ok(f0 * f0 * initial_overlap2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::schedule::ScheduleLabel;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn two_level(e1: f64) -> SpectralState {
        SpectralState::from_real(vec![0.0, e1], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
    }

    #[test]
    fn identity_step() {
        let s = two_level(2.0);
        let (out, p) = apply_step_spectral(&s, 0.0, 0.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        for (a, b) in out.amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_period_projects_to_ground() {
        let (out, p) = apply_step_spectral(&two_level(2.0), FRAC_PI_4, 0.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((out.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        assert!(out.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn pure_phase_step_only_costs_probability() {
        let s = two_level(1.0);
        let (out, p) = apply_step_spectral(&s, 0.0, PI / 3.0).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        for (a, b) in out.amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn annihilated_branch_is_extinction() {
        // cos(π/2) rounds to 6e-17, so a quarter period still leaves a
        // representable branch; only an undefined probability is extinct
        let s = SpectralState::from_real(vec![2.0], &[1.0]).unwrap();
        let (_, p) = apply_step_spectral(&s, FRAC_PI_4, 0.0).unwrap();
        assert!(p < 1e-30);
        let err = apply_step_spectral(&s, f64::INFINITY, 0.0).unwrap_err();
        assert!(matches!(err, QpfError::Extinction { .. }));
    }

    #[test]
    fn success_probability_edge_cases() {
        let s = two_level(2.0);
        assert!((success_probability(&s, &Schedule::empty()) - 1.0).abs() < 1e-15);
        let ground = SpectralState::from_real(vec![0.0], &[1.0]).unwrap();
        let sched = Schedule::new(ScheduleLabel::Custom, vec![Step::new(1.3, 0.0), Step::new(7.0, 0.0)]).unwrap();
        assert_eq!(success_probability(&ground, &sched), 1.0);
    }

    #[test]
    fn asymptotic_success_cases() {
        let zero = Schedule::new(ScheduleLabel::Custom, vec![Step::new(1.0, 0.0)]).unwrap();
        assert_eq!(asymptotic_success(0.3, &zero).unwrap(), 0.3);
        let quarter = Schedule::new(ScheduleLabel::Custom, vec![Step::new(1.0, FRAC_PI_2)]).unwrap();
        assert!(asymptotic_success(0.3, &quarter).unwrap() < 1e-32);
        assert!(asymptotic_success(1.2, &zero).is_err());
    }

    #[test]
    fn target_shifts() {
        let j2 = SpectralState::from_real(vec![0.0, 2.0, 12.0, 3.75], &[0.5; 4]).unwrap();
        assert_eq!(j2.shift_target(12.0).energies()[2], 0.0);
        assert_eq!(j2.shift_target(3.75).energies()[3], 0.0);
        assert_eq!(j2.shift_target(0.0), j2);
        let op = SparseHermitianOperator::diagonal(&[0.0, 12.0]);
        assert_eq!(shift_target(&op, 12.0).get(1, 1).re, 0.0);
    }

    #[test]
    fn degenerate_levels_are_grouped() {
        let s = SpectralState::from_real(vec![1.0, 0.0, 1.0 + 1e-12, 0.5], &[0.5; 4]).unwrap();
        let levels = s.group_levels();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[2].members, vec![0, 2]);
        assert!((levels[2].probability - 0.5).abs() < 1e-15);
        let total: f64 = levels.iter().map(|l| l.probability).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::Basis;
use super::eigen::EigenDecomposition;
use super::models::SpinLatticeSpec;
use super::sparse::SparseHermitianOperator;
use crate::error::{QpfError, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::rng;

/// Normalized state over an explicit list of basis bit-strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    basis_labels: Vec<u64>,
}

impl StateVector {
    /// Renormalizes `amplitudes`; fails on a zero vector or length mismatch.
    pub fn new(basis_labels: Vec<u64>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if basis_labels.len() != amplitudes.len() {
            return Err(QpfError::DimensionMismatch { expected: basis_labels.len(), got: amplitudes.len() });
        }
        if linalg::normalize(&mut amplitudes) == 0.0 {
            return Err(QpfError::Domain("state vector has zero norm".into()));
        }
        Ok(StateVector { amplitudes, basis_labels })
    }

    pub fn basis_state(basis: &Basis, bits: u64) -> Result<Self> {
        let index = basis
            .index_of(bits)
            .ok_or_else(|| QpfError::Domain(format!("bit-string {bits:#b} is not in the basis")))?;
        let mut amplitudes = vec![ZERO; basis.len()];
        amplitudes[index] = ONE;
        Ok(StateVector { amplitudes, basis_labels: basis.labels() })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis_labels(&self) -> &[u64] {
        &self.basis_labels
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// Same labels, new amplitudes (renormalized).
    pub fn with_amplitudes(&self, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(self.basis_labels.clone(), amplitudes)
    }
}

/// Alternating product state: spin up on the even sublattice, down on the odd.
pub fn neel_bits(spec: &SpinLatticeSpec) -> u64 {
    (0..spec.sites()).filter(|&q| spec.is_even_site(q)).fold(0, |acc, q| acc | 1 << q)
}

pub fn neel_state(spec: &SpinLatticeSpec) -> Result<StateVector> {
    neel_state_in(spec, &Basis::full(spec.sites())?)
}

pub fn neel_state_in(spec: &SpinLatticeSpec, basis: &Basis) -> Result<StateVector> {
    spec.validate(super::basis::DEFAULT_MAX_QUBITS)?;
    StateVector::basis_state(basis, neel_bits(spec))
}

/// Uniform draws in `[-1, 1]` used as excited-state coefficients by
/// [`random_trial_state`].
pub fn trial_draws(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Coefficient 1 on the lowest eigenvector, [`trial_draws`] on every other
/// eigenvector, then normalized.
pub fn random_trial_state(decomposition: &EigenDecomposition, basis: &Basis, seed: u64) -> Result<StateVector> {
    let vectors = decomposition
        .eigenvectors
        .as_ref()
        .ok_or_else(|| QpfError::Dependency("random trial state needs eigenvectors".into()))?;
    let dim = vectors.nrows();
    if dim != basis.len() {
        return Err(QpfError::DimensionMismatch { expected: basis.len(), got: dim });
    }
    let draws = trial_draws(dim.saturating_sub(1), seed);
    let mut amplitudes = vec![ZERO; dim];
    for (k, coefficient) in std::iter::once(1.0).chain(draws).enumerate() {
        for (a, v) in amplitudes.iter_mut().zip(vectors.column(k).iter()) {
            *a += v * coefficient;
        }
    }
    StateVector::new(basis.labels(), amplitudes)
}

/// `⟨ψ|A|ψ⟩`; fails if the imaginary part exceeds `1e-10` relative, which
/// only happens for non-hermitian input.
pub fn expectation(op: &SparseHermitianOperator, state: &StateVector) -> Result<f64> {
    expectation_of(op, state.amplitudes())
}

pub fn expectation_of(op: &SparseHermitianOperator, amplitudes: &[C64]) -> Result<f64> {
    let applied = op.apply(amplitudes)?;
    let value = linalg::dot(amplitudes, &applied) / linalg::norm_sqr(amplitudes);
    if value.im.abs() > 1e-10 * value.re.abs().max(1.0) {
        return Err(QpfError::Structure(format!(
            "expectation value {value} is not real; operator is not hermitian"
        )));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::basis::SectorBasis;
    use crate::operators::eigen::eigendecompose;
    use crate::operators::models::{build_heisenberg_in, build_jz_in};

    #[test]
    fn neel_on_two_sites() {
        let psi = neel_state(&SpinLatticeSpec::new(1, 2, false)).unwrap();
        assert_eq!(psi.amplitudes()[0b01], ONE);
        assert_eq!(linalg::norm_sqr(psi.amplitudes()), 1.0);
    }

    #[test]
    fn neel_has_zero_jz_on_square_lattice() {
        let spec = SpinLatticeSpec::new(4, 4, true);
        let basis = Basis::Sector(SectorBasis::jz(16, 0.0).unwrap());
        let psi = neel_state_in(&spec, &basis).unwrap();
        let jz = build_jz_in(&basis).unwrap();
        assert_eq!(expectation(&jz, &psi).unwrap(), 0.0);
        assert_eq!(neel_bits(&spec).count_ones(), 8);
    }

    #[test]
    fn expectation_basics() {
        let id = SparseHermitianOperator::identity(3);
        let psi = StateVector::new(vec![0, 1, 2], vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), ONE]).unwrap();
        assert!((expectation(&id, &psi).unwrap() - 1.0).abs() < 1e-15);
        // σ_z = diag(1, -1) in the (|0⟩, |1⟩) basis
        let sigma_z = SparseHermitianOperator::diagonal(&[1.0, -1.0]);
        let zero = StateVector::new(vec![0, 1], vec![ONE, ZERO]).unwrap();
        assert_eq!(expectation(&sigma_z, &zero).unwrap(), 1.0);
        let wrong = StateVector::new(vec![0, 1], vec![ONE; 2]).unwrap();
        assert!(matches!(
            expectation(&SparseHermitianOperator::identity(3), &wrong),
            Err(QpfError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trial_state_is_seed_deterministic_and_has_expected_ground_overlap() {
        let spec = SpinLatticeSpec::new(1, 4, true);
        let basis = Basis::full(4).unwrap();
        let h = build_heisenberg_in(&spec, &basis).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let a = random_trial_state(&eig, &basis, 7).unwrap();
        let b = random_trial_state(&eig, &basis, 7).unwrap();
        assert_eq!(a, b);
        let draws = trial_draws(15, 7);
        let expected = 1.0 / (1.0 + draws.iter().map(|r| r * r).sum::<f64>());
        let ground: Vec<C64> = eig.eigenvectors.as_ref().unwrap().column(0).iter().copied().collect();
        let overlap = linalg::dot(&ground, a.amplitudes()).norm_sqr();
        assert!((overlap - expected).abs() < 1e-12);
    }

    #[test]
    fn trial_state_in_one_dimension_is_the_ground_state() {
        let op = SparseHermitianOperator::diagonal(&[2.5]);
        let eig = eigendecompose(&op).unwrap();
        let basis = Basis::Sector(SectorBasis::jz(2, 1.0).unwrap());
        let psi = random_trial_state(&eig, &basis, 3).unwrap();
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trial_state_without_vectors_is_dependency_error() {
        let mut eig = eigendecompose(&SparseHermitianOperator::identity(2)).unwrap();
        eig.eigenvectors = None;
        let err = random_trial_state(&eig, &Basis::full(1).unwrap(), 1).unwrap_err();
        assert!(matches!(err, QpfError::Dependency(_)));
    }
}

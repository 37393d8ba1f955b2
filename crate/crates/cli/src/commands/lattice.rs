use qpf_core::filter::{halving_schedule, CosinePropagator, Schedule};
use qpf_core::linalg::C64;
use qpf_core::operators::*;
use qpf_core::{QpfError, Result};

use crate::config::{ExperimentConfig, LatticeModel, ModelSource, TrialState};

/// How amplitudes in the energy eigenbasis are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Dense,
    Krylov,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Dense => "dense",
            Route::Krylov => "krylov",
        }
    }
}

pub struct LatticeSetup {
    pub spec: SpinLatticeSpec,
    pub basis: Basis,
    /// Hamiltonian shifted and scaled so the ground state sits at 0 and the
    /// spectrum spans `[0, 1]`.
    pub scaled: SparseHermitianOperator,
    pub j2: SparseHermitianOperator,
    pub e_min: f64,
    pub e_max: f64,
    pub route: Route,
    pub decomposition: Option<EigenDecomposition>,
}

pub fn lattice_model(config: &ExperimentConfig) -> Result<&LatticeModel> {
    match &config.model {
        ModelSource::Lattice(m) => Ok(m),
        _ => Err(QpfError::Domain("this command needs a `lattice` model".into())),
    }
}

impl LatticeSetup {
    pub fn build(model: &LatticeModel, heavy: bool, need_eigenvectors: bool) -> Result<Self> {
        let spec = model.spec();
        spec.validate(DEFAULT_MAX_QUBITS)?;
        let n = spec.sites();
        let jz = model.sector_jz.unwrap_or_else(|| neel_bits(&spec).count_ones() as f64 - n as f64 / 2.0);
        let basis = Basis::Sector(SectorBasis::jz(n, jz)?);
        let dim = basis.len();
        if dim > DEFAULT_DENSE_LIMIT && !heavy {
            return Err(QpfError::Capacity(format!(
                "{} states in the J_z = {jz} sector exceed {DEFAULT_DENSE_LIMIT}; rerun with --heavy",
                dim
            )));
        }
        let h = build_heisenberg_in(&spec, &basis)?;
        let j2 = build_total_spin_squared_in(&basis)?;
        let (e_min, e_max) = extremal_eigenvalues(&h, 1e-10)?;
        let scaled = scale_and_shift(&h, e_min, e_min, e_max)?;
        let route = if dim <= DEFAULT_DENSE_LIMIT { Route::Dense } else { Route::Krylov };
        let decomposition = match route {
            Route::Dense if need_eigenvectors => Some(eigendecompose(&scaled)?),
            _ => None,
        };
        Ok(LatticeSetup { spec, basis, scaled, j2, e_min, e_max, route, decomposition })
    }

    pub fn basis_label(&self) -> String {
        match &self.basis {
            Basis::Sector(s) => format!("{}={}", s.constraint().name(), s.constraint().value()),
            Basis::Full { .. } => "full".into(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Largest `J(J+1)`.
    pub fn j2_max(&self) -> f64 {
        let j = self.spec.sites() as f64 / 2.0;
        j * (j + 1.0)
    }

    pub fn j2_propagator(&self) -> CosinePropagator<'_> {
        CosinePropagator::with_bounds(&self.j2, 0.0, self.j2_max(), 1e-12)
    }

    pub fn energy_propagator(&self) -> CosinePropagator<'_> {
        CosinePropagator::with_bounds(&self.scaled, 0.0, 1.0, 1e-12)
    }

    pub fn trial_state(&self, kind: TrialState, seed: u64) -> Result<StateVector> {
        match kind {
            TrialState::Neel => neel_state_in(&self.spec, &self.basis),
            TrialState::Random | TrialState::Ground => {
                let eig = self.decomposition.as_ref().ok_or_else(|| {
                    QpfError::Dependency("this trial state needs dense eigenvectors (sector too large)".into())
                })?;
                if kind == TrialState::Random {
                    return random_trial_state(eig, &self.basis, seed);
                }
                let vectors = eig.eigenvectors.as_ref().expect("dense route keeps eigenvectors");
                StateVector::new(self.basis.labels(), vectors.column(0).iter().copied().collect())
            }
        }
    }

    /// Uniform draws over the sector basis: overlaps every eigenvector.
    pub fn generic_state(&self, seed: u64) -> Result<StateVector> {
        let draws = trial_draws(self.dimension(), seed).into_iter().map(|x| C64::new(x, 0.0)).collect();
        StateVector::new(self.basis.labels(), draws)
    }
}

/// `t1, t1/2, t1/4` with `t1 = π/4`: removes every `J` from 1 to 14.
pub fn default_projection() -> Schedule {
    halving_schedule(std::f64::consts::FRAC_PI_4, 3).expect("fixed schedule")
}

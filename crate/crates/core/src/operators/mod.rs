//! Many-body spin operators, symmetry sectors, trial states and
//! diagonalization.

pub mod basis;
pub mod eigen;
pub mod models;
pub mod sparse;
pub mod state;

pub use basis::{Basis, SectorBasis, SectorConstraint, DEFAULT_MAX_QUBITS};
pub use eigen::{
    eigendecompose, eigendecompose_with_limit, extremal_eigenvalues, scale_and_shift, spectral_measure,
    widen_bounds, EigenDecomposition, SpectralMeasure, DEFAULT_DENSE_LIMIT, HEAVY_DENSE_LIMIT,
};
pub use models::{
    build_heisenberg, build_heisenberg_in, build_jz, build_jz_in, build_total_spin_squared,
    build_total_spin_squared_in, sector_restrict, SpinLatticeSpec,
};
pub use sparse::{EnergyFrame, SparseHermitianOperator};
pub use state::{expectation, neel_bits, neel_state, neel_state_in, random_trial_state, trial_draws, StateVector};

//! Ancilla filter: each measurement that reads 0 applies `cos(t O + δ)`.

pub mod chebyshev;
pub mod run;
pub mod schedule;
pub mod spectral;

pub use chebyshev::{apply_step_statevector, bessel_j_sequence, CosinePropagator};
pub use run::{
    run_postselected, run_postselected_partial, run_sampled, sampled_acceptance, Extinction, FilterBackend, FilterTrajectory, MeasurementRecord,
    OperatorBackend, SpectralBackend, TrajectoryRecord,
};
pub use schedule::{
    constant_schedule, exponential_schedule, filter_curve, filter_value, gaussian_schedule, halving_schedule,
    Schedule, ScheduleLabel, Step, StepOrder,
};
pub use spectral::{
    apply_step_spectral, asymptotic_success, shift_target, success_probability, Level, ShiftTarget,
    SpectralState, EXTINCTION_THRESHOLD,
};

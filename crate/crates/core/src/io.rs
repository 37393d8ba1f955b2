//! JSON documents for operators, states, schedules and spectra, and the
//! trajectory CSV.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};
use crate::filter::{Schedule, ScheduleLabel, SpectralState, Step, TrajectoryRecord};
use crate::linalg::{self, C64};
use crate::operators::{SparseHermitianOperator, StateVector};
use crate::optimize::{OptimizationConfig, OptimizationResult};

/// Hermiticity tolerance for imported operators, relative to the largest
/// entry.
pub const IMPORT_HERMITIAN_TOL: f64 = 1e-12;

/// Input spectra further than this from unit norm are renormalized with a
/// warning.
pub const NORM_TOLERANCE: f64 = 1e-8;

pub const TRAJECTORY_HEADER: [&str; 5] = ["step", "time", "energy", "step_prob", "cum_prob"];

#[derive(Serialize, Deserialize)]
struct OperatorDoc {
    dimension: usize,
    entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    labels: Vec<u64>,
    amplitudes: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct SpectralDoc {
    energies: Vec<f64>,
    amplitudes: Vec<(f64, f64)>,
}

/// Provenance of an optimized schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    pub objective: f64,
    pub f0: f64,
    pub seed: u64,
    pub config: OptimizationConfig,
    #[serde(default)]
    pub converged: bool,
}

impl ScheduleMetadata {
    pub fn from_result(result: &OptimizationResult, config: &OptimizationConfig) -> Self {
        ScheduleMetadata {
            objective: result.objective_value,
            f0: result.f_at_zero,
            seed: config.seed,
            config: *config,
            converged: result.converged,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    label: ScheduleLabel,
    steps: Vec<Step>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<ScheduleMetadata>,
}

fn to_pairs(values: &[C64]) -> Vec<(f64, f64)> {
    values.iter().map(|c| (c.re, c.im)).collect()
}

fn from_pairs(pairs: &[(f64, f64)]) -> Vec<C64> {
    pairs.iter().map(|&(re, im)| C64::new(re, im)).collect()
}

fn pretty<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("plain data serializes")
}

pub fn operator_to_json(op: &SparseHermitianOperator) -> String {
    pretty(&OperatorDoc {
        dimension: op.dimension(),
        entries: op.entries().map(|(i, j, v)| (i, j, v.re, v.im)).collect(),
    })
}

/// Parses an operator and verifies it is hermitian.
pub fn operator_from_json(text: &str) -> Result<SparseHermitianOperator> {
    let doc: OperatorDoc = serde_json::from_str(text)?;
    let scale = doc.entries.iter().fold(0.0_f64, |m, e| m.max(e.2.hypot(e.3)));
    let mut op = SparseHermitianOperator::from_triplets(
        doc.dimension,
        doc.entries.into_iter().map(|(i, j, re, im)| (i, j, C64::new(re, im))),
    )?;
    op.check_hermitian(IMPORT_HERMITIAN_TOL * scale.max(1.0))?;
    Ok(op)
}

pub fn state_to_json(state: &StateVector) -> String {
    pretty(&StateDoc { labels: state.basis_labels().to_vec(), amplitudes: to_pairs(state.amplitudes()) })
}

pub fn state_from_json(text: &str) -> Result<StateVector> {
    let doc: StateDoc = serde_json::from_str(text)?;
    StateVector::new(doc.labels, from_pairs(&doc.amplitudes))
}

pub fn schedule_to_json(schedule: &Schedule, metadata: Option<&ScheduleMetadata>) -> String {
    pretty(&ScheduleDoc { label: schedule.label, steps: schedule.steps.clone(), metadata: metadata.cloned() })
}

/// Parses a schedule file, validating every step. Metadata is optional.
pub fn schedule_from_json(text: &str) -> Result<(Schedule, Option<ScheduleMetadata>)> {
    let doc: ScheduleDoc = serde_json::from_str(text)?;
    Ok((Schedule::new(doc.label, doc.steps)?, doc.metadata))
}

pub fn spectral_to_json(state: &SpectralState) -> String {
    pretty(&SpectralDoc { energies: state.energies().to_vec(), amplitudes: to_pairs(state.amplitudes()) })
}

/// A parsed spectrum and the norm of the amplitudes as supplied.
#[derive(Debug, Clone)]
pub struct ParsedSpectrum {
    pub state: SpectralState,
    pub input_norm: f64,
}

impl ParsedSpectrum {
    pub fn was_renormalized(&self) -> bool {
        (self.input_norm - 1.0).abs() > NORM_TOLERANCE
    }
}

pub fn spectral_from_json(text: &str) -> Result<ParsedSpectrum> {
    let doc: SpectralDoc = serde_json::from_str(text)?;
    let amplitudes = from_pairs(&doc.amplitudes);
    let input_norm = linalg::norm(&amplitudes);
    let state = SpectralState::new(doc.energies, amplitudes)?;
    Ok(ParsedSpectrum { state, input_norm })
}

fn csv_error(err: csv::Error) -> QpfError {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => QpfError::Io(e),
        other => QpfError::Parse(format!("csv: {other:?}")),
    }
}

/// Writes the trajectory with a leading step-0 row for the initial state.
pub fn write_trajectory_csv<W: Write>(writer: W, initial_energy: f64, records: &[TrajectoryRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
    out.serialize((0usize, 0.0, initial_energy, 1.0, 1.0)).map_err(csv_error)?;
    for r in records {
        out.serialize((r.step, r.cumulative_time, r.energy, r.step_probability, r.cumulative_probability))
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::halving_schedule;

    #[test]
    fn operator_round_trip() {
        let op = SparseHermitianOperator::from_triplets(
            2,
            [(0, 0, C64::new(1.0, 0.0)), (0, 1, C64::new(0.0, -0.5)), (1, 0, C64::new(0.0, 0.5))],
        )
        .unwrap();
        let back = operator_from_json(&operator_to_json(&op)).unwrap();
        assert_eq!(back.to_dense(), op.to_dense());
    }

    #[test]
    fn non_hermitian_operator_rejected() {
        let text = r#"{"dimension": 2, "entries": [[0, 1, 1.0, 0.0]]}"#;
        assert!(matches!(operator_from_json(text), Err(QpfError::Structure(_))));
    }

    #[test]
    fn schedule_round_trip_with_metadata() {
        let s = halving_schedule(std::f64::consts::FRAC_PI_4, 3).unwrap();
        let meta = ScheduleMetadata {
            objective: 0.5,
            f0: 1.0,
            seed: 7,
            config: OptimizationConfig::new(3, 1.0, false),
            converged: true,
        };
        let text = schedule_to_json(&s, Some(&meta));
        let (back, m) = schedule_from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(m, Some(meta));
        let (plain, none) = schedule_from_json(&schedule_to_json(&s, None)).unwrap();
        assert_eq!(plain, s);
        assert!(none.is_none());
    }

    #[test]
    fn negative_time_rejected_on_load() {
        let text = r#"{"label": "custom", "steps": [[-1.0, 0.0]]}"#;
        assert!(matches!(schedule_from_json(text), Err(QpfError::Domain(_))));
    }

    #[test]
    fn parse_errors_carry_line() {
        let text = "{\n  \"energies\": [0.0, 1.0],\n  \"amplitudes\": [[1.0, 0.0], [0.0]]\n}";
        match spectral_from_json(text) {
            Err(QpfError::Parse(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spectral_renormalization_flagged() {
        let ok = spectral_from_json(r#"{"energies": [0, 1], "amplitudes": [[0.6, 0], [0, 0.8]]}"#).unwrap();
        assert!(!ok.was_renormalized());
        let off = spectral_from_json(r#"{"energies": [0, 1], "amplitudes": [[1, 0], [1, 0]]}"#).unwrap();
        assert!(off.was_renormalized());
        assert!((off.state.probabilities()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn state_round_trip() {
        let s = StateVector::new(vec![1, 2], vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        assert_eq!(state_from_json(&state_to_json(&s)).unwrap(), s);
    }

    #[test]
    fn trajectory_csv_layout() {
        let rec = TrajectoryRecord {
            step: 1,
            cumulative_time: 0.5,
            energy: 0.25,
            step_probability: 0.5,
            cumulative_probability: 0.5,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, 1.0, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "step,time,energy,step_prob,cum_prob\n0,0.0,1.0,1.0,1.0\n1,0.5,0.25,0.5,0.5\n");
    }
}

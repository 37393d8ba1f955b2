mod energy;
mod filter_curve;
mod j2_project;
mod lattice;
mod optimize;
mod replay;

use qpf_core::filter::{Extinction, FilterTrajectory, SpectralState, TrajectoryRecord};
use qpf_core::operators::EnergyFrame;
use qpf_core::{io, Result};

use crate::config::ExperimentConfig;
use crate::output::{num, opt_num, Output, Table};

pub use energy::energy_run;
pub use filter_curve::filter_curve;
pub use j2_project::j2_project;
pub use optimize::optimize;
pub use replay::spectral_replay;

pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub heavy: bool,
    pub out: Output,
}

pub const DETAIL_HEADER: [&str; 8] =
    ["step", "time", "time_gap_units", "energy_scaled", "energy_unscaled", "step_prob", "cum_prob", "extinct"];

pub const AMPLITUDE_HEADER: [&str; 8] = ["stage", "eigen_index", "level", "energy", "prob", "level_prob", "re", "im"];

/// Canonical five-column trajectory.
pub fn trajectory_bytes<S>(trajectory: &FilterTrajectory<S>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_trajectory_csv(&mut buf, trajectory.initial_energy, &trajectory.records)?;
    Ok(buf)
}

/// Trajectory with time in units of `1/gap`, physical energies, and an
/// extinction row if the branch died.
pub fn detail_table<S>(
    trajectory: &FilterTrajectory<S>,
    extinction: Option<Extinction>,
    frame: EnergyFrame,
    gap: Option<f64>,
) -> Table {
    let mut table = Table::new(&DETAIL_HEADER);
    let row = |table: &mut Table, step: usize, time: f64, energy: f64, p: f64, cum: f64, extinct: bool| {
        table.row(&[
            step.to_string(),
            num(time),
            opt_num(gap.map(|g| time * g)),
            num(energy),
            num(frame.to_physical(energy)),
            num(p),
            num(cum),
            u8::from(extinct).to_string(),
        ]);
    };
    row(&mut table, 0, 0.0, trajectory.initial_energy, 1.0, 1.0, false);
    for r in &trajectory.records {
        row(&mut table, r.step, r.cumulative_time, r.energy, r.step_probability, r.cumulative_probability, false);
    }
    if let Some(e) = extinction {
        let last = trajectory.records.last();
        let time = last.map_or(0.0, |r| r.cumulative_time);
        let cum = last.map_or(1.0, |r| r.cumulative_probability);
        row(&mut table, e.step, time, f64::NAN, e.probability, cum * e.probability, true);
    }
    table
}

pub fn baseline_rows(table: &mut Table, name: &str, initial_energy: f64, records: &[TrajectoryRecord], frame: EnergyFrame, gap: Option<f64>) {
    let mut push = |step: usize, time: f64, energy: f64, p: f64, cum: f64| {
        table.row(&[
            name.to_string(),
            step.to_string(),
            num(time),
            opt_num(gap.map(|g| time * g)),
            num(energy),
            num(frame.to_physical(energy)),
            num(p),
            num(cum),
        ]);
    };
    push(0, 0.0, initial_energy, 1.0, 1.0);
    for r in records {
        push(r.step, r.cumulative_time, r.energy, r.step_probability, r.cumulative_probability);
    }
}

/// Rows for every component, grouped by degenerate level so the level
/// probabilities add to one.
pub fn amplitude_rows(table: &mut Table, stage: &str, state: &SpectralState) {
    for (level_index, level) in state.group_levels().iter().enumerate() {
        for &k in &level.members {
            let a = state.amplitudes()[k];
            table.row(&[
                stage.to_string(),
                k.to_string(),
                level_index.to_string(),
                num(state.energies()[k]),
                num(a.norm_sqr()),
                num(level.probability),
                num(a.re),
                num(a.im),
            ]);
        }
    }
}

/// Distance from the lowest populated level to the next one.
pub fn populated_gap(state: &SpectralState, floor: f64) -> Option<f64> {
    let levels: Vec<f64> =
        state.group_levels().into_iter().filter(|l| l.probability > floor).map(|l| l.energy).collect();
    (levels.len() > 1).then(|| levels[1] - levels[0])
}

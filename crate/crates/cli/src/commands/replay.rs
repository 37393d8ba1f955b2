use std::path::Path;

use qpf_core::filter::{run_postselected_partial, SpectralBackend, SpectralState};
use qpf_core::{io, Result};
use serde_json::json;

use super::energy::spectral_model;
use super::{amplitude_rows, detail_table, trajectory_bytes, Context, AMPLITUDE_HEADER};
use crate::config::resolve_schedule;
use crate::output::{Output, Table};

/// Reads a spectral file, warning when it had to be renormalized.
pub fn load_spectrum(out: &mut Output, path: &Path) -> Result<SpectralState> {
    let text = std::fs::read_to_string(path)?;
    let parsed = io::spectral_from_json(&text).map_err(|e| match e {
        qpf_core::QpfError::Parse(msg) => qpf_core::QpfError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if parsed.was_renormalized() {
        out.warn(format!("{}: amplitudes had norm {} and were renormalized", path.display(), parsed.input_norm));
    }
    Ok(parsed.state)
}

pub fn spectral_replay(ctx: &mut Context) -> Result<()> {
    let (state, frame) = spectral_model(ctx)?;
    let schedule = resolve_schedule(&ctx.config, ctx.seed)?.schedule;
    let (trajectory, extinction) = run_postselected_partial(&SpectralBackend, &state, &schedule, ctx.config.order)?;
    ctx.out.write("trajectory.csv", &trajectory_bytes(&trajectory)?)?;
    ctx.out.table("trajectory_detail.csv", detail_table(&trajectory, extinction, frame, ctx.config.effective_gap()))?;
    let mut amplitudes = Table::new(&AMPLITUDE_HEADER);
    amplitude_rows(&mut amplitudes, "initial", &state);
    if extinction.is_none() {
        amplitude_rows(&mut amplitudes, "final", &trajectory.final_state);
    }
    ctx.out.table("amplitudes.csv", amplitudes)?;
    if let Some(e) = extinction {
        ctx.out.flag("extinction", json!({"step": e.step, "probability": e.probability}));
    }
    ctx.out.json(
        "summary.json",
        &json!({
            "levels": state.len(),
            "shift": ctx.config.shift,
            "initial_energy_scaled": trajectory.initial_energy,
            "final_energy_scaled": trajectory.final_energy(),
            "final_probability": trajectory.final_probability(),
            "initial_target_population": state.target_population(),
            "final_target_population": trajectory.final_state.target_population(),
        }),
    )?;
    Ok(())
}

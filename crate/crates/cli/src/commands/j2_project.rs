use qpf_core::filter::{run_postselected, run_postselected_partial, sampled_acceptance, OperatorBackend, SpectralState};
use qpf_core::operators::{expectation, spectral_measure, StateVector};
use qpf_core::Result;
use serde_json::json;

use super::lattice::{default_projection, lattice_model, LatticeSetup};
use super::{amplitude_rows, detail_table, populated_gap, trajectory_bytes, Context, AMPLITUDE_HEADER};
use crate::config::resolve_schedule;
use crate::output::Table;

const WEIGHT_FLOOR: f64 = 1e-10;

/// Expansion of `state` in energy eigenstates: exact with dense
/// eigenvectors, otherwise the Krylov spectral measure.
fn energy_components(setup: &LatticeSetup, state: &StateVector, krylov_steps: usize) -> Result<SpectralState> {
    match &setup.decomposition {
        Some(eig) => SpectralState::from_eigenbasis(eig, state.amplitudes()),
        None => SpectralState::from_measure(&spectral_measure(&setup.scaled, state.amplitudes(), krylov_steps)?),
    }
}

pub fn j2_project(ctx: &mut Context) -> Result<()> {
    let model = lattice_model(&ctx.config)?;
    let projection = ctx.config.projection.clone();
    let setup = LatticeSetup::build(model, ctx.heavy, true)?;
    let schedule = match ctx.config.schedule {
        Some(_) => resolve_schedule(&ctx.config, ctx.seed)?.schedule,
        None => default_projection(),
    };
    let order = ctx.config.order;
    let initial = setup.trial_state(projection.trial_state, ctx.seed)?;
    let backend = OperatorBackend::new(setup.j2_propagator(), &setup.scaled);
    let (trajectory, extinction) = run_postselected_partial(&backend, &initial, &schedule, order)?;

    ctx.out.write("trajectory.csv", &trajectory_bytes(&trajectory)?)?;
    let detail = detail_table(&trajectory, extinction, setup.scaled.frame(), ctx.config.gap);
    ctx.out.table("trajectory_detail.csv", detail)?;
    if let Some(e) = extinction {
        ctx.out.flag("extinction", json!({"step": e.step, "probability": e.probability}));
    }

    let accepted = if projection.sampled_attempts > 0 {
        sampled_acceptance(&backend, &initial, &schedule, order, projection.sampled_attempts, ctx.seed)?
    } else {
        0
    };

    let before = energy_components(&setup, &initial, projection.krylov_steps)?;
    let after = energy_components(&setup, &trajectory.final_state, projection.krylov_steps)?;
    let mut amplitudes = Table::new(&AMPLITUDE_HEADER);
    amplitude_rows(&mut amplitudes, "initial", &before);
    if extinction.is_none() {
        amplitude_rows(&mut amplitudes, "projected", &after);
    }
    ctx.out.table("amplitudes.csv", amplitudes)?;

    let sector_gaps = if projection.sector_gap {
        let generic = setup.generic_state(ctx.seed)?;
        let gap_of = |s: &StateVector| -> Result<Option<f64>> {
            Ok(spectral_measure(&setup.scaled, s.amplitudes(), projection.krylov_steps)?.gap(WEIGHT_FLOOR))
        };
        let projected = run_postselected(&backend, &generic, &schedule, order)?.final_state;
        Some(json!({"sector": gap_of(&generic)?, "projected": gap_of(&projected)?}))
    } else {
        None
    };

    let summary = json!({
        "sites": setup.spec.sites(),
        "basis": setup.basis_label(),
        "dimension": setup.dimension(),
        "route": setup.route.name(),
        "e_min": setup.e_min,
        "e_max": setup.e_max,
        "initial_energy_scaled": trajectory.initial_energy,
        "final_energy_scaled": trajectory.final_energy(),
        "acceptance": trajectory.final_probability(),
        "sampled_attempts": projection.sampled_attempts,
        "sampled_accepted": accepted,
        "final_j2": if extinction.is_none() { Some(expectation(&setup.j2, &trajectory.final_state)?) } else { None },
        "state_gap": {"initial": populated_gap(&before, WEIGHT_FLOOR), "projected": populated_gap(&after, WEIGHT_FLOOR)},
        "generic_gap": sector_gaps,
    });
    ctx.out.json("summary.json", &summary)?;
    Ok(())
}

use qpf_core::filter::{run_postselected, run_postselected_partial, FilterBackend, OperatorBackend, SpectralBackend, SpectralState};
use qpf_core::operators::EnergyFrame;
use qpf_core::optimize::{build_pseudo_spectrum, compare_baselines, BaselineConfig, BaselineOptimizer};
use qpf_core::{QpfError, Result};
use serde_json::{json, Value};

use super::lattice::{default_projection, LatticeSetup};
use super::replay::load_spectrum;
use super::{baseline_rows, detail_table, trajectory_bytes, Context};
use crate::config::{resolve_schedule, ModelSource};
use crate::output::Table;

const BASELINE_HEADER: [&str; 8] =
    ["schedule", "step", "time", "time_gap_units", "energy_scaled", "energy_unscaled", "step_prob", "cum_prob"];

pub fn energy_run(ctx: &mut Context) -> Result<()> {
    if ctx.config.schedule.is_none() && ctx.config.baselines.is_none() {
        return Err(QpfError::Domain("energy-run needs a `schedule`, `baselines`, or both".into()));
    }
    match ctx.config.model.clone() {
        ModelSource::Lattice(model) => {
            let needs_vectors = ctx.config.projection.trial_state != crate::config::TrialState::Neel;
            let setup = LatticeSetup::build(&model, ctx.heavy, needs_vectors)?;
            let mut initial = setup.trial_state(ctx.config.projection.trial_state, ctx.seed)?;
            if ctx.config.projection.project_first {
                let j2 = OperatorBackend::new(setup.j2_propagator(), &setup.scaled);
                let projected = run_postselected(&j2, &initial, &default_projection(), ctx.config.order)?;
                ctx.out.flag("projection_acceptance", projected.final_probability());
                initial = projected.final_state;
            }
            let backend = OperatorBackend::new(setup.energy_propagator(), &setup.scaled);
            run(ctx, &backend, &initial, setup.scaled.frame())
        }
        _ => {
            let (state, frame) = spectral_model(ctx)?;
            run(ctx, &SpectralBackend, &state, frame)
        }
    }
}

/// Pseudo-spectrum or replayed file, with the target shifted to zero.
pub fn spectral_model(ctx: &mut Context) -> Result<(SpectralState, EnergyFrame)> {
    let state = match &ctx.config.model {
        ModelSource::PseudoSpectrum(p) => build_pseudo_spectrum(p)?,
        ModelSource::SpectralFile(path) => load_spectrum(&mut ctx.out, path)?,
        ModelSource::Lattice(_) => unreachable!("lattice handled by caller"),
    };
    let shift = ctx.config.shift;
    let state = if shift != 0.0 { qpf_core::filter::shift_target(&state, shift) } else { state };
    let frame = ctx.config.energy_frame.unwrap_or(EnergyFrame { shift, scale: 1.0 });
    Ok((state, frame))
}

fn run<B: FilterBackend>(ctx: &mut Context, backend: &B, initial: &B::State, frame: EnergyFrame) -> Result<()> {
    let gap = ctx.config.effective_gap();
    let mut summary = serde_json::Map::new();

    if ctx.config.schedule.is_some() {
        let resolved = resolve_schedule(&ctx.config, ctx.seed)?;
        let (trajectory, extinction) = run_postselected_partial(backend, initial, &resolved.schedule, ctx.config.order)?;
        ctx.out.write("trajectory.csv", &trajectory_bytes(&trajectory)?)?;
        ctx.out.table("trajectory_detail.csv", detail_table(&trajectory, extinction, frame, gap))?;
        ctx.out.json("schedule.json", &resolved.schedule)?;
        if let Some(e) = extinction {
            ctx.out.flag("extinction", json!({"step": e.step, "probability": e.probability}));
        }
        if let Some((result, _)) = &resolved.optimization {
            ctx.out.flag("converged", result.converged);
        }
        summary.insert(
            "schedule".into(),
            json!({
                "label": resolved.schedule.label,
                "steps": resolved.schedule.len(),
                "total_time": resolved.schedule.total_time(),
                "initial_energy_scaled": trajectory.initial_energy,
                "final_energy_scaled": trajectory.final_energy(),
                "final_probability": trajectory.final_probability(),
                "extinct": extinction.is_some(),
            }),
        );
    }

    if let Some(b) = ctx.config.baselines.clone() {
        let total_time = b.total_time.resolve(gap)?;
        let mut config = BaselineConfig::new(total_time, b.n_steps, (0..b.gaussian_seeds as u64).map(|k| ctx.seed + k).collect());
        config.exponential_ratio = b.exponential_ratio;
        config.order = ctx.config.order;
        if b.optimize {
            let pseudo = b
                .pseudo
                .or(ctx.config.pseudo_model().copied())
                .ok_or_else(|| QpfError::Domain("baselines.optimize needs `baselines.pseudo` or a pseudo-spectrum model".into()))?;
            config.optimizer = Some(BaselineOptimizer {
                spectrum: build_pseudo_spectrum(&pseudo)?,
                gap: pseudo.gap,
                restarts: b.restarts,
                seed: ctx.seed,
            });
        }
        let comparison = compare_baselines(backend, initial, &config)?;
        let mut table = Table::new(&BASELINE_HEADER);
        for row in &comparison.rows {
            baseline_rows(&mut table, &row.name, row.initial_energy, &row.records, frame, gap);
        }
        ctx.out.table("baselines.csv", table)?;
        let mut members = Table::new(&BASELINE_HEADER);
        for row in &comparison.gaussian_members {
            baseline_rows(&mut members, &row.name, row.initial_energy, &row.records, frame, gap);
        }
        ctx.out.table("gaussian_members.csv", members)?;
        let schedules: Vec<Value> = comparison
            .rows
            .iter()
            .filter_map(|r| r.schedule.as_ref().map(|s| json!({"name": r.name, "schedule": s})))
            .collect();
        ctx.out.json("baseline_schedules.json", &schedules)?;
        summary.insert(
            "baselines".into(),
            comparison
                .rows
                .iter()
                .map(|r| (r.name.clone(), json!({"final_energy_scaled": r.final_energy(), "final_probability": r.final_probability()})))
                .collect::<serde_json::Map<_, _>>()
                .into(),
        );
    }
    summary.insert("gap".into(), json!(gap));
    ctx.out.json("summary.json", &summary)?;
    Ok(())
}

use qpf_core::optimize::{build_pseudo_spectrum, optimize_schedule};
use qpf_core::{io, QpfError, Result};
use serde_json::json;

use super::Context;
use crate::config::ScheduleSource;
use crate::output::{num, Table};

pub fn optimize(ctx: &mut Context) -> Result<()> {
    let (pseudo, optimization) = match (&ctx.config.schedule, ctx.config.pseudo_model(), ctx.config.optimization) {
        (Some(ScheduleSource::Optimize { pseudo, optimization }), model, _) => {
            (pseudo.or(model.copied()), Some(*optimization))
        }
        (_, model, opt) => (model.copied(), opt),
    };
    let pseudo = pseudo.ok_or_else(|| QpfError::Domain("optimize needs a pseudo-spectrum model".into()))?;
    let mut config = optimization.ok_or_else(|| QpfError::Domain("optimize needs an `optimization` section".into()))?;
    config.seed = ctx.seed;

    let spectrum = build_pseudo_spectrum(&pseudo)?;
    let result = optimize_schedule(&spectrum, pseudo.gap, &config)?;
    let metadata = io::ScheduleMetadata::from_result(&result, &config);
    ctx.out.write("schedule.json", io::schedule_to_json(&result.schedule, Some(&metadata)).as_bytes())?;

    let mut table = Table::new(&["index", "time", "phase", "time_gap_units"]);
    for (i, step) in result.schedule.steps.iter().enumerate() {
        table.row(&[(i + 1).to_string(), num(step.time), num(step.phase), num(step.time * pseudo.gap)]);
    }
    ctx.out.table("times_phases.csv", table)?;
    ctx.out.flag("converged", result.converged);
    if !result.converged {
        ctx.out.warn("no restart met the convergence tolerance; the best schedule found is reported".into());
    }
    ctx.out.json(
        "summary.json",
        &json!({
            "objective": result.objective_value,
            "f0": result.f_at_zero,
            "iterations": result.iterations,
            "converged": result.converged,
            "restart": result.restart,
            "budget": result.budget,
            "total_time": result.schedule.total_time(),
            "phase_bound": "(-pi/2, pi/2)",
        }),
    )?;
    Ok(())
}

use qpf_core::Result;
use serde_json::json;

use super::Context;
use crate::config::{resolve_schedule, uniform};
use crate::output::{num, Table};

fn curve_table(schedule: &qpf_core::filter::Schedule, grid: &[f64]) -> Table {
    let mut table = Table::new(&["energy", "f", "f2"]);
    for (&e, f) in grid.iter().zip(schedule.filter_curve(grid)) {
        table.row(&[num(e), num(f), num(f * f)]);
    }
    table
}

pub fn filter_curve(ctx: &mut Context) -> Result<()> {
    let curve = ctx.config.curve.clone();
    let schedule = resolve_schedule(&ctx.config, ctx.seed)?.schedule.repeated(curve.iterations.max(1));
    let grid = curve.grid.values()?;
    ctx.out.table("filter_curve.csv", curve_table(&schedule, &grid))?;
    if let Some(zoom) = curve.zoom {
        let zoomed = uniform(-zoom.half_width, zoom.half_width, zoom.points)?;
        ctx.out.table("filter_curve_zoom.csv", curve_table(&schedule, &zoomed))?;
    }
    let (argmax, max_f2) = grid
        .iter()
        .map(|&e| (e, schedule.filter_value(e).powi(2)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    ctx.out.json(
        "summary.json",
        &json!({
            "steps": schedule.len(),
            "total_time": schedule.total_time(),
            "f0": schedule.f_at_zero(),
            "grid_max_f2": max_f2,
            "grid_argmax": argmax,
        }),
    )?;
    Ok(())
}

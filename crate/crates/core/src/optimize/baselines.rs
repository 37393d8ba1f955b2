use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize_schedule, OptimizationConfig};
use crate::error::{QpfError, Result};
use crate::filter::{
    constant_schedule, exponential_schedule, gaussian_schedule, run_postselected, FilterBackend, Schedule,
    SpectralState, StepOrder, TrajectoryRecord,
};

#[derive(Debug, Clone)]
pub struct BaselineOptimizer {
    /// Spectrum the schedules are fitted to.
    pub spectrum: SpectralState,
    pub gap: f64,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub total_time: f64,
    pub n_steps: usize,
    pub gaussian_seeds: Vec<u64>,
    pub exponential_ratio: f64,
    pub order: StepOrder,
    /// When set, two optimized schedules (times only, then times and
    /// phases) join the comparison.
    pub optimizer: Option<BaselineOptimizer>,
}

impl BaselineConfig {
    pub fn new(total_time: f64, n_steps: usize, gaussian_seeds: Vec<u64>) -> Self {
        BaselineConfig {
            total_time,
            n_steps,
            gaussian_seeds,
            exponential_ratio: SQRT_2,
            order: StepOrder::ShortestFirst,
            optimizer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    /// `None` for the ensemble average.
    pub schedule: Option<Schedule>,
    pub initial_energy: f64,
    pub records: Vec<TrajectoryRecord>,
}

impl BaselineRow {
    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }

    pub fn final_probability(&self) -> f64 {
        self.records.last().map_or(1.0, |r| r.cumulative_probability)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    /// constant, gaussian (ensemble mean), exponential, then the optimized
    /// schedules if requested.
    pub rows: Vec<BaselineRow>,
    pub gaussian_members: Vec<BaselineRow>,
}

impl BaselineComparison {
    pub fn row(&self, name: &str) -> Option<&BaselineRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn run_row<B: FilterBackend>(backend: &B, initial: &B::State, name: &str, schedule: Schedule, order: StepOrder) -> Result<BaselineRow> {
    let traj = run_postselected(backend, initial, &schedule, order)?;
    Ok(BaselineRow { name: name.to_string(), schedule: Some(schedule), initial_energy: traj.initial_energy, records: traj.records })
}

fn ensemble_mean(members: &[BaselineRow]) -> BaselineRow {
    let n = members.len() as f64;
    let steps = members[0].records.len();
    let records = (0..steps)
        .map(|k| {
            let mean = |f: fn(&TrajectoryRecord) -> f64| members.iter().map(|m| f(&m.records[k])).sum::<f64>() / n;
            TrajectoryRecord {
                step: k + 1,
                cumulative_time: mean(|r| r.cumulative_time),
                energy: mean(|r| r.energy),
                step_probability: mean(|r| r.step_probability),
                cumulative_probability: mean(|r| r.cumulative_probability),
            }
        })
        .collect();
    BaselineRow {
        name: "gaussian".into(),
        schedule: None,
        initial_energy: members[0].initial_energy,
        records,
    }
}

/// Runs every baseline schedule under the same budget and step count.
pub fn compare_baselines<B: FilterBackend>(
    backend: &B,
    initial: &B::State,
    config: &BaselineConfig,
) -> Result<BaselineComparison> {
    if config.gaussian_seeds.is_empty() {
        return Err(QpfError::Domain("gaussian baseline needs at least one seed".into()));
    }
    let (t, n, order) = (config.total_time, config.n_steps, config.order);
    let mut rows = vec![run_row(backend, initial, "constant", constant_schedule(n, t)?, order)?];

    let gaussian_members = config
        .gaussian_seeds
        .par_iter()
        .map(|&seed| run_row(backend, initial, &format!("gaussian-{seed}"), gaussian_schedule(n, t, seed)?, order))
        .collect::<Result<Vec<_>>>()?;
    rows.push(ensemble_mean(&gaussian_members));

    rows.push(run_row(backend, initial, "exponential", exponential_schedule(n, t, config.exponential_ratio)?, order)?);

    if let Some(opt) = &config.optimizer {
        for (name, phases) in [("optimized-times", false), ("optimized-phases", true)] {
            let mut cfg = OptimizationConfig::new(n, t * opt.gap / PI, phases);
            cfg.restarts = opt.restarts;
            cfg.seed = opt.seed;
            let result = optimize_schedule(&opt.spectrum, opt.gap, &cfg)?;
            rows.push(run_row(backend, initial, name, result.schedule, order)?);
        }
    }
    Ok(BaselineComparison { rows, gaussian_members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::SpectralBackend;
    use crate::optimize::{build_pseudo_spectrum, PseudoSpectrumConfig};

    #[test]
    fn rows_and_ensemble() {
        let gap = 0.2;
        let s = build_pseudo_spectrum(&PseudoSpectrumConfig::new(gap, 100, 5, 1)).unwrap();
        let mut cfg = BaselineConfig::new(2.0 * PI / gap, 5, (0..10).collect());
        cfg.optimizer = Some(BaselineOptimizer { spectrum: s.clone(), gap, restarts: 4, seed: 0 });
        let cmp = compare_baselines(&SpectralBackend, &s, &cfg).unwrap();
        let names: Vec<&str> = cmp.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["constant", "gaussian", "exponential", "optimized-times", "optimized-phases"]);
        assert_eq!(cmp.gaussian_members.len(), 10);
        let mean_e: f64 = cmp.gaussian_members.iter().map(|m| m.final_energy()).sum::<f64>() / 10.0;
        assert!((cmp.row("gaussian").unwrap().final_energy() - mean_e).abs() < 1e-14);
        for row in &cmp.rows {
            assert_eq!(row.records.len(), 5);
            let used = row.records[4].cumulative_time;
            assert!(used <= cfg.total_time * (1.0 + 1e-9));
            if !row.name.starts_with("optimized") {
                assert!((used - cfg.total_time).abs() < 1e-9 * cfg.total_time);
            }
            assert!(row.final_energy() < row.initial_energy);
        }
    }
}

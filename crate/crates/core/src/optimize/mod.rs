//! Schedule optimization against a pseudo-spectrum and the baselines it is
//! compared with.

mod baselines;
mod lbfgs;
mod objective;
mod pseudo;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};
use crate::filter::{Schedule, ScheduleLabel, SpectralState, Step};
use crate::rng;

pub use baselines::{compare_baselines, BaselineConfig, BaselineOptimizer, BaselineRow};
pub use lbfgs::{minimize, LbfgsOptions, LbfgsOutcome};
pub use objective::{objective, objective_gradient, Objective};
pub use pseudo::{build_pseudo_spectrum, target_profile, PseudoSpectrumConfig};

/// Penalty weights for `Σt ≤ T`, applied in turn.
const PENALTY_WEIGHTS: [f64; 4] = [1e2, 1e4, 1e6, 1e8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub n_measurements: usize,
    /// Total time budget in units of π/gap.
    pub time_budget_multiple: f64,
    pub allow_phases: bool,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Per penalty stage.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_restarts() -> usize {
    32
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iterations() -> usize {
    500
}

impl OptimizationConfig {
    pub fn new(n_measurements: usize, time_budget_multiple: f64, allow_phases: bool) -> Self {
        OptimizationConfig {
            n_measurements,
            time_budget_multiple,
            allow_phases,
            restarts: default_restarts(),
            convergence_tol: default_tol(),
            seed: 0,
            max_iterations: default_max_iterations(),
        }
    }

    pub fn budget(&self, gap: f64) -> f64 {
        self.time_budget_multiple * PI / gap
    }

    fn validate(&self) -> Result<()> {
        if self.n_measurements == 0 || self.restarts == 0 {
            return Err(QpfError::Domain("need at least one measurement and one restart".into()));
        }
        if !(self.time_budget_multiple > 0.0 && self.time_budget_multiple.is_finite()) {
            return Err(QpfError::Domain(format!("time budget multiple {}", self.time_budget_multiple)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub schedule: Schedule,
    pub objective_value: f64,
    pub f_at_zero: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the restart that produced the schedule.
    pub restart: usize,
    pub budget: f64,
}

/// Fits `n_measurements` steps to the target profile of `spectrum` under the
/// total time budget. The gap used for the budget is taken from `pseudo`.
pub fn optimize_schedule(
    spectrum: &SpectralState,
    gap: f64,
    config: &OptimizationConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    if !(gap > 0.0) {
        return Err(QpfError::Domain(format!("gap {gap} must be positive")));
    }
    let budget = config.budget(gap);
    let objective = Objective::new(spectrum);
    let runs: Vec<OptimizationResult> = (0..config.restarts)
        .into_par_iter()
        .map(|r| single_restart(&objective, budget, config, r))
        .collect();
    let lowest = |pool: Vec<&OptimizationResult>| {
        pool.into_iter().min_by(|a, b| a.objective_value.total_cmp(&b.objective_value)).cloned()
    };
    // min_by keeps the first of equal elements, so ties go to the lower index
    let best = lowest(runs.iter().filter(|r| r.converged).collect())
        .or_else(|| lowest(runs.iter().collect()))
        .expect("at least one restart");
    Ok(best)
}

fn initial_times(budget: f64, n: usize, seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, restart as u64);
    let lo = (budget / 2f64.powi(n as i32)).ln();
    let hi = budget.ln();
    let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi).exp()).collect();
    let sum: f64 = times.iter().sum();
    times.iter_mut().for_each(|t| *t *= budget / sum);
    times
}

fn single_restart(objective: &Objective, budget: f64, config: &OptimizationConfig, restart: usize) -> OptimizationResult {
    let n = config.n_measurements;
    let times = initial_times(budget, n, config.seed, restart);
    let mut x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    if config.allow_phases {
        x.extend(std::iter::repeat_n(0.0, n));
    }
    let options = LbfgsOptions {
        gradient_tol: config.convergence_tol,
        value_tol: config.convergence_tol,
        max_iterations: config.max_iterations,
        ..LbfgsOptions::default()
    };
    let mut iterations = 0;
    let mut converged = true;
    for &weight in &PENALTY_WEIGHTS {
        let out = minimize(|p| penalized(objective, p, n, budget, weight, config.allow_phases), x, &options);
        iterations += out.iterations;
        converged = out.converged;
        x = out.x;
    }
    let (mut times, phases) = decode(&x, n, config.allow_phases);
    let total: f64 = times.iter().sum();
    if total > budget {
        times.iter_mut().for_each(|t| *t *= budget / total);
    }
    let mut steps: Vec<Step> = times.iter().zip(&phases).map(|(&t, &d)| Step::new(t, d)).collect();
    steps.sort_by(|a, b| a.time.total_cmp(&b.time));
    let schedule = Schedule::new(ScheduleLabel::Optimized, steps).expect("finite optimized steps");
    let objective_value = objective.value(&schedule.times(), &schedule.phases());
    OptimizationResult {
        f_at_zero: schedule.f_at_zero(),
        objective_value,
        iterations,
        converged: converged && objective_value.is_finite(),
        restart,
        budget,
        schedule,
    }
}

/// Times are `exp(u)` and phases `(π/2) tanh(v)`.
fn decode(x: &[f64], n: usize, phases: bool) -> (Vec<f64>, Vec<f64>) {
    let times = x[..n].iter().map(|u| u.exp()).collect();
    let phases = if phases { x[n..].iter().map(|v| FRAC_PI_2 * v.tanh()).collect() } else { vec![0.0; n] };
    (times, phases)
}

fn penalized(objective: &Objective, x: &[f64], n: usize, budget: f64, weight: f64, with_phases: bool) -> (f64, Vec<f64>) {
    let (times, phases) = decode(x, n, with_phases);
    let (mut value, dt, dd) = objective.value_and_gradient(&times, &phases);
    let excess = times.iter().sum::<f64>() / budget - 1.0;
    let mut dpen = 0.0;
    if excess > 0.0 {
        value += weight * excess * excess;
        dpen = 2.0 * weight * excess / budget;
    }
    let mut grad: Vec<f64> = times.iter().zip(&dt).map(|(t, g)| (g + dpen) * t).collect();
    if with_phases {
        grad.extend(x[n..].iter().zip(&dd).map(|(v, g)| g * FRAC_PI_2 * (1.0 - v.tanh().powi(2))));
    }
    (value, grad)
}

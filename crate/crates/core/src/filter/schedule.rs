use std::f64::consts::PI;
use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};
use crate::rng;

/// One ancilla measurement: evolve for `time`, offset by `phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Step {
    pub time: f64,
    pub phase: f64,
}

impl From<(f64, f64)> for Step {
    fn from((time, phase): (f64, f64)) -> Self {
        Step { time, phase }
    }
}

impl From<Step> for (f64, f64) {
    fn from(s: Step) -> Self {
        (s.time, s.phase)
    }
}

impl Step {
    pub fn new(time: f64, phase: f64) -> Self {
        Step { time, phase }
    }

    /// `cos(t o + δ)`
    pub fn factor(&self, o: f64) -> f64 {
        (self.time * o + self.phase).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleLabel {
    Constant,
    Gaussian,
    Exponential,
    Halving,
    Optimized,
    Custom,
}

impl fmt::Display for ScheduleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScheduleLabel::Constant => "constant",
            ScheduleLabel::Gaussian => "gaussian",
            ScheduleLabel::Exponential => "exponential",
            ScheduleLabel::Halving => "halving",
            ScheduleLabel::Optimized => "optimized",
            ScheduleLabel::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Order in which a schedule's steps are executed. Without noise the final
/// state does not depend on it, only the intermediate trajectory does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOrder {
    #[default]
    ShortestFirst,
    AsGiven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub label: ScheduleLabel,
    pub steps: Vec<Step>,
}

/// Maps a phase into `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

impl Schedule {
    /// Validates finiteness and non-negative times; phases are wrapped into
    /// `(-π, π]`.
    pub fn new(label: ScheduleLabel, steps: Vec<Step>) -> Result<Self> {
        let mut checked = Vec::with_capacity(steps.len());
        for (i, s) in steps.into_iter().enumerate() {
            if !s.time.is_finite() || !s.phase.is_finite() {
                return Err(QpfError::Domain(format!("step {i} has a non-finite time or phase")));
            }
            if s.time < 0.0 {
                return Err(QpfError::Domain(format!("step {i} has negative time {}", s.time)));
            }
            checked.push(Step::new(s.time, wrap_phase(s.phase)));
        }
        Ok(Schedule { label, steps: checked })
    }

    pub fn empty() -> Self {
        Schedule { label: ScheduleLabel::Custom, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().map(|s| s.time).sum()
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.time).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.phase).collect()
    }

    /// Steps in execution order. `ShortestFirst` is a stable sort by time.
    pub fn ordered(&self, order: StepOrder) -> Vec<Step> {
        let mut steps = self.steps.clone();
        if order == StepOrder::ShortestFirst {
            steps.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        steps
    }

    /// The same steps applied `k` times in a row.
    pub fn repeated(&self, k: usize) -> Schedule {
        Schedule {
            label: self.label,
            steps: std::iter::repeat_n(self.steps.iter().copied(), k).flatten().collect(),
        }
    }

    /// `f(0) = Π cos δ_i`
    pub fn f_at_zero(&self) -> f64 {
        self.steps.iter().map(|s| s.phase.cos()).product()
    }

    /// `f(o) = Π_i cos(t_i o + δ_i)`
    pub fn filter_value(&self, o: f64) -> f64 {
        self.steps.iter().map(|s| s.factor(o)).product()
    }

    /// `df/do`, by the product rule over each factor.
    pub fn filter_derivative(&self, o: f64) -> f64 {
        let factors: Vec<f64> = self.steps.iter().map(|s| s.factor(o)).collect();
        (0..self.steps.len())
            .map(|i| {
                let s = self.steps[i];
                let rest: f64 = factors.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f).product();
                -s.time * (s.time * o + s.phase).sin() * rest
            })
            .sum()
    }

    pub fn filter_curve(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&o| self.filter_value(o)).collect()
    }
}

pub fn filter_value(schedule: &Schedule, o: f64) -> f64 {
    schedule.filter_value(o)
}

pub fn filter_curve(schedule: &Schedule, grid: &[f64]) -> Vec<f64> {
    schedule.filter_curve(grid)
}

/// Times `t1, t1/2, t1/4, …` with zero phases; total time stays below `2 t1`.
pub fn halving_schedule(t1: f64, n_steps: usize) -> Result<Schedule> {
    if !(t1 > 0.0) {
        return Err(QpfError::Domain(format!("halving schedule needs t1 > 0, got {t1}")));
    }
    let steps = (0..n_steps).map(|k| Step::new(t1 / 2f64.powi(k as i32), 0.0)).collect();
    Schedule::new(ScheduleLabel::Halving, steps)
}

/// `n` equal times summing to `total_time`.
pub fn constant_schedule(n: usize, total_time: f64) -> Result<Schedule> {
    check_budget(n, total_time)?;
    Schedule::new(ScheduleLabel::Constant, vec![Step::new(total_time / n as f64, 0.0); n])
}

/// Absolute values of `n` standard normal draws, rescaled to sum to
/// `total_time`.
pub fn gaussian_schedule(n: usize, total_time: f64, seed: u64) -> Result<Schedule> {
    check_budget(n, total_time)?;
    let mut rng = rng::seeded(seed);
    let draws: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).map(|x: f64| x.abs()).collect();
    let sum: f64 = draws.iter().sum();
    let mut times: Vec<f64> = draws.iter().map(|x| x * total_time / sum).collect();
    fix_sum(&mut times, total_time);
    Schedule::new(ScheduleLabel::Gaussian, times.into_iter().map(|t| Step::new(t, 0.0)).collect())
}

/// Geometric times `a, a r, a r², …` (ascending for `r ≥ 1`) summing to
/// `total_time`.
pub fn exponential_schedule(n: usize, total_time: f64, ratio: f64) -> Result<Schedule> {
    check_budget(n, total_time)?;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(QpfError::Domain(format!("exponential schedule needs ratio > 0, got {ratio}")));
    }
    let raw: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let sum: f64 = raw.iter().sum();
    let mut times: Vec<f64> = raw.iter().map(|x| x * total_time / sum).collect();
    fix_sum(&mut times, total_time);
    Schedule::new(ScheduleLabel::Exponential, times.into_iter().map(|t| Step::new(t, 0.0)).collect())
}

fn check_budget(n: usize, total_time: f64) -> Result<()> {
    if n == 0 {
        return Err(QpfError::Domain("schedule needs at least one step".into()));
    }
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(QpfError::Domain(format!("total time must be positive, got {total_time}")));
    }
    Ok(())
}

/// Pushes the rounding residue of a rescaled sum into the largest entry.
fn fix_sum(times: &mut [f64], total: f64) {
    let residue = total - times.iter().sum::<f64>();
    if let Some(largest) = times.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *largest += residue;
    }
}

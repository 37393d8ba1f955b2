//! Experiment configuration files.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::path::{Path, PathBuf};

use qpf_core::filter::{
    constant_schedule, exponential_schedule, gaussian_schedule, halving_schedule, Schedule, ScheduleLabel, Step,
    StepOrder,
};
use qpf_core::operators::{EnergyFrame, SpinLatticeSpec};
use qpf_core::optimize::{OptimizationConfig, PseudoSpectrumConfig};
use qpf_core::{io, QpfError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSource,
    #[serde(default)]
    pub schedule: Option<ScheduleSource>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub heavy: bool,
    /// Scaled gap used for time units and `pi_over_gap` budgets. Defaults
    /// to the pseudo-spectrum gap when there is one.
    #[serde(default)]
    pub gap: Option<f64>,
    #[serde(default)]
    pub order: StepOrder,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub baselines: Option<BaselinesConfig>,
    #[serde(default)]
    pub optimization: Option<OptimizationConfig>,
    /// Subtracted from every energy of a replayed spectrum.
    #[serde(default)]
    pub shift: f64,
    /// Maps scaled energies back to physical units for spectral models.
    #[serde(default)]
    pub energy_frame: Option<EnergyFrame>,
}

/// Exactly one model per experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Lattice(LatticeModel),
    PseudoSpectrum(PseudoSpectrumConfig),
    SpectralFile(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeModel {
    pub lx: usize,
    pub ly: usize,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub field_h: f64,
    /// `J_z` sector; defaults to the sector of the Neel state.
    #[serde(default)]
    pub sector_jz: Option<f64>,
}

impl LatticeModel {
    pub fn spec(&self) -> SpinLatticeSpec {
        let mut spec = SpinLatticeSpec::new(self.lx, self.ly, self.periodic);
        spec.field_h = self.field_h;
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialState {
    #[default]
    Neel,
    /// Lowest eigenvector plus seeded random admixtures of all others.
    Random,
    /// Lowest eigenvector of the sector.
    Ground,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSource {
    Builder(BuilderSpec),
    File(PathBuf),
    /// Optimize against a pseudo-spectrum (the model's when omitted).
    Optimize {
        #[serde(default)]
        pseudo: Option<PseudoSpectrumConfig>,
        optimization: OptimizationConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuilderSpec {
    Empty,
    Halving {
        #[serde(default = "default_t1")]
        t1: f64,
        n_steps: usize,
    },
    Constant {
        n_steps: usize,
        total_time: TimeSpec,
    },
    Gaussian {
        n_steps: usize,
        total_time: TimeSpec,
        #[serde(default)]
        seed: Option<u64>,
    },
    Exponential {
        n_steps: usize,
        total_time: TimeSpec,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
    Custom {
        steps: Vec<Step>,
    },
}

fn default_t1() -> f64 {
    FRAC_PI_4
}

fn default_ratio() -> f64 {
    SQRT_2
}

/// A plain number is an absolute time; `{"pi_over_gap": m}` is `m π / Δ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Absolute(f64),
    PiOverGap { pi_over_gap: f64 },
}

impl TimeSpec {
    pub fn resolve(&self, gap: Option<f64>) -> Result<f64> {
        match *self {
            TimeSpec::Absolute(t) => Ok(t),
            TimeSpec::PiOverGap { pi_over_gap } => gap
                .map(|g| pi_over_gap * PI / g)
                .ok_or_else(|| QpfError::Domain("pi_over_gap needs a gap (set `gap` or use a pseudo-spectrum)".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default)]
    pub grid: GridSpec,
    /// Dense grid over `[-half_width, half_width]`.
    #[serde(default = "default_zoom")]
    pub zoom: Option<ZoomSpec>,
    /// Number of times the schedule is applied.
    #[serde(default = "one")]
    pub iterations: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig { grid: GridSpec::default(), zoom: default_zoom(), iterations: 1 }
    }
}

fn one() -> usize {
    1
}

fn default_zoom() -> Option<ZoomSpec> {
    Some(ZoomSpec { half_width: 0.05, points: 1001 })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoomSpec {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Uniform { lo: f64, hi: f64, points: usize },
    /// `J(J+1)` for `J = 0..=j_max`.
    JSquared { j_max: usize },
    Points { values: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Uniform { lo: 0.0, hi: 1.0, points: 2001 }
    }
}

pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(hi > lo) {
        return Err(QpfError::Domain(format!("grid needs lo < hi and at least 2 points, got [{lo}, {hi}] x {points}")));
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Uniform { lo, hi, points } => uniform(*lo, *hi, *points),
            GridSpec::JSquared { j_max } => Ok((0..=*j_max).map(|j| (j * (j + 1)) as f64).collect()),
            GridSpec::Points { values } => Ok(values.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    #[serde(default)]
    pub trial_state: TrialState,
    #[serde(default = "default_attempts")]
    pub sampled_attempts: usize,
    #[serde(default = "default_krylov_steps")]
    pub krylov_steps: usize,
    /// Gap of the sector and of its `J = 0` part, from a generic vector.
    #[serde(default = "yes")]
    pub sector_gap: bool,
    /// energy-run on a lattice: project onto `J = 0` before filtering.
    #[serde(default)]
    pub project_first: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            trial_state: TrialState::Neel,
            sampled_attempts: default_attempts(),
            krylov_steps: default_krylov_steps(),
            sector_gap: true,
            project_first: false,
        }
    }
}

fn default_attempts() -> usize {
    10_000
}

fn default_krylov_steps() -> usize {
    120
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinesConfig {
    pub total_time: TimeSpec,
    #[serde(default = "default_baseline_steps")]
    pub n_steps: usize,
    #[serde(default = "default_ensemble")]
    pub gaussian_seeds: usize,
    #[serde(default = "default_ratio")]
    pub exponential_ratio: f64,
    /// Adds optimized schedules fitted to this pseudo-spectrum (the
    /// model's when it is one).
    #[serde(default)]
    pub optimize: bool,
    #[serde(default)]
    pub pseudo: Option<PseudoSpectrumConfig>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_baseline_steps() -> usize {
    7
}

fn default_ensemble() -> usize {
    100
}

fn default_restarts() -> usize {
    32
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ModelSource::SpectralFile(p) = &mut self.model {
            fix(p);
        }
        if let Some(ScheduleSource::File(p)) = &mut self.schedule {
            fix(p);
        }
    }

    pub fn pseudo_model(&self) -> Option<&PseudoSpectrumConfig> {
        match &self.model {
            ModelSource::PseudoSpectrum(p) => Some(p),
            _ => None,
        }
    }

    pub fn effective_gap(&self) -> Option<f64> {
        self.gap.or_else(|| self.pseudo_model().map(|p| p.gap)).or_else(|| match &self.schedule {
            Some(ScheduleSource::Optimize { pseudo: Some(p), .. }) => Some(p.gap),
            _ => None,
        })
    }
}

/// A schedule plus, for optimized ones, the optimizer outcome.
pub struct ResolvedSchedule {
    pub schedule: Schedule,
    pub optimization: Option<(qpf_core::optimize::OptimizationResult, OptimizationConfig)>,
}

pub fn resolve_schedule(config: &ExperimentConfig, seed: u64) -> Result<ResolvedSchedule> {
    let source = config
        .schedule
        .as_ref()
        .ok_or_else(|| QpfError::Domain("this command needs a `schedule`".into()))?;
    let gap = config.effective_gap();
    let schedule = match source {
        ScheduleSource::File(path) => io::schedule_from_json(&std::fs::read_to_string(path)?)?.0,
        ScheduleSource::Builder(b) => match b {
            BuilderSpec::Empty => Schedule::empty(),
            BuilderSpec::Halving { t1, n_steps } => halving_schedule(*t1, *n_steps)?,
            BuilderSpec::Constant { n_steps, total_time } => constant_schedule(*n_steps, total_time.resolve(gap)?)?,
            BuilderSpec::Gaussian { n_steps, total_time, seed: s } => {
                gaussian_schedule(*n_steps, total_time.resolve(gap)?, s.unwrap_or(seed))?
            }
            BuilderSpec::Exponential { n_steps, total_time, ratio } => {
                exponential_schedule(*n_steps, total_time.resolve(gap)?, *ratio)?
            }
            BuilderSpec::Custom { steps } => Schedule::new(ScheduleLabel::Custom, steps.clone())?,
        },
        ScheduleSource::Optimize { pseudo, optimization } => {
            let pseudo = pseudo
                .as_ref()
                .or(config.pseudo_model())
                .ok_or_else(|| QpfError::Domain("optimize needs a pseudo-spectrum".into()))?;
            let mut opt = *optimization;
            opt.seed = seed;
            let spectrum = qpf_core::optimize::build_pseudo_spectrum(pseudo)?;
            let result = qpf_core::optimize::optimize_schedule(&spectrum, pseudo.gap, &opt)?;
            return Ok(ResolvedSchedule { schedule: result.schedule.clone(), optimization: Some((result, opt)) });
        }
    };
    Ok(ResolvedSchedule { schedule, optimization: None })
}

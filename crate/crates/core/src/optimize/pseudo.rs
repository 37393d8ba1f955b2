use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};
use crate::filter::SpectralState;
use crate::rng;

/// Synthetic spectrum the schedules are optimized against: `n_ground`
/// levels at zero and the rest on a jittered uniform grid over
/// `[gap, width]`, all with equal amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpectrumConfig {
    pub gap: f64,
    pub n_states: usize,
    pub n_ground: usize,
    pub jitter_seed: u64,
    #[serde(default = "default_width")]
    pub width: f64,
    /// Displace excited levels within a grid spacing.
    #[serde(default = "default_jitter")]
    pub jitter: bool,
}

fn default_width() -> f64 {
    1.0
}

fn default_jitter() -> bool {
    true
}

impl PseudoSpectrumConfig {
    pub fn new(gap: f64, n_states: usize, n_ground: usize, jitter_seed: u64) -> Self {
        PseudoSpectrumConfig { gap, n_states, n_ground, jitter_seed, width: 1.0, jitter: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.gap < self.width) {
            return Err(QpfError::Domain(format!(
                "gap {} must lie in (0, width = {})",
                self.gap, self.width
            )));
        }
        if self.n_ground == 0 || self.n_ground >= self.n_states {
            return Err(QpfError::Domain(format!(
                "need 0 < n_ground < n_states, got {} of {}",
                self.n_ground, self.n_states
            )));
        }
        Ok(())
    }

    /// Ground-state probability of the equal-amplitude initial state.
    pub fn ground_overlap2(&self) -> f64 {
        self.n_ground as f64 / self.n_states as f64
    }
}

pub fn build_pseudo_spectrum(config: &PseudoSpectrumConfig) -> Result<SpectralState> {
    config.validate()?;
    let excited = config.n_states - config.n_ground;
    let span = config.width - config.gap;
    let spacing = if excited > 1 { span / (excited - 1) as f64 } else { span };
    let mut rng = rng::seeded(config.jitter_seed);
    let mut energies = vec![0.0; config.n_ground];
    for k in 0..excited {
        let mut e = config.gap + k as f64 * spacing;
        if config.jitter {
            e += rng.random_range(-0.5..0.5) * spacing;
        }
        energies.push(e.clamp(config.gap, config.width));
    }
    energies[config.n_ground..].sort_by(f64::total_cmp);
    let amplitude = 1.0 / (config.n_states as f64).sqrt();
    let state = SpectralState::from_real(energies, &vec![amplitude; config.n_states])?;
    // levels at exactly zero are the target; keep the grouping tolerance
    // well below the gap
    Ok(state.with_degeneracy_tolerance(1e-12 * config.width))
}

/// 1 on zero-energy levels, 0 elsewhere.
pub fn target_profile(spectrum: &SpectralState) -> Vec<f64> {
    let tol = spectrum.degeneracy_tolerance();
    spectrum.energies().iter().map(|e| if e.abs() <= tol { 1.0 } else { 0.0 }).collect()
}

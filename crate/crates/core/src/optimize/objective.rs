//! Mean squared distance between the filter and the target profile, and its
//! analytic gradient in the times and phases.

use crate::filter::{Schedule, SpectralState};

use super::pseudo::target_profile;

/// `(1/n) Σ_n (f(E_n) - y_n)²` with `y` from [`target_profile`].
pub fn objective(schedule: &Schedule, spectrum: &SpectralState) -> f64 {
    Objective::new(spectrum).value(&schedule.times(), &schedule.phases())
}

/// `(∂/∂t_i, ∂/∂δ_i)` of [`objective`].
pub fn objective_gradient(schedule: &Schedule, spectrum: &SpectralState) -> (Vec<f64>, Vec<f64>) {
    let (_, dt, dd) = Objective::new(spectrum).value_and_gradient(&schedule.times(), &schedule.phases());
    (dt, dd)
}

/// Energies and targets of a fixed spectrum, evaluated repeatedly by the
/// optimizer.
#[derive(Debug, Clone)]
pub struct Objective {
    energies: Vec<f64>,
    targets: Vec<f64>,
}

impl Objective {
    pub fn new(spectrum: &SpectralState) -> Self {
        Objective { energies: spectrum.energies().to_vec(), targets: target_profile(spectrum) }
    }

    pub fn value(&self, times: &[f64], phases: &[f64]) -> f64 {
        let n = self.energies.len() as f64;
        self.energies
            .iter()
            .zip(&self.targets)
            .map(|(&e, &y)| {
                let f: f64 = times.iter().zip(phases).map(|(t, d)| (t * e + d).cos()).product();
                (f - y) * (f - y)
            })
            .sum::<f64>()
            / n
    }

    pub fn value_and_gradient(&self, times: &[f64], phases: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = times.len();
        let n = self.energies.len() as f64;
        let mut value = 0.0;
        let mut dt = vec![0.0; m];
        let mut dd = vec![0.0; m];
        let mut cosines = vec![0.0; m];
        let mut sines = vec![0.0; m];
        let mut suffix = vec![1.0; m + 1];
        for (&e, &y) in self.energies.iter().zip(&self.targets) {
            for i in 0..m {
                let (s, c) = (times[i] * e + phases[i]).sin_cos();
                cosines[i] = c;
                sines[i] = s;
            }
            for i in (0..m).rev() {
                suffix[i] = suffix[i + 1] * cosines[i];
            }
            let f = suffix[0];
            let residual = f - y;
            value += residual * residual;
            let weight = 2.0 * residual / n;
            // product of all factors except i, without dividing by cos
            let mut prefix = 1.0;
            for i in 0..m {
                let others = prefix * suffix[i + 1];
                let df_dphase = -sines[i] * others;
                dd[i] += weight * df_dphase;
                dt[i] += weight * e * df_dphase;
                prefix *= cosines[i];
            }
        }
        (value / n, dt, dd)
    }
}

//! `cos(t A + δ) |ψ⟩` for a sparse hermitian `A` via the Jacobi–Anger
//! expansion in Chebyshev polynomials of the rescaled operator.

use super::spectral::EXTINCTION_THRESHOLD;
use crate::error::{QpfError, Result};
use crate::linalg::{self, C64, ZERO};
use crate::operators::{extremal_eigenvalues, SparseHermitianOperator, StateVector};

pub const MAX_CHEBYSHEV_TERMS: usize = 10_000;

/// Relative padding applied to the spectral half-width before rescaling.
pub const SPECTRAL_PADDING: f64 = 0.01;

/// `J_0(z), …, J_{n_max}(z)` by Miller's backward recurrence, normalized
/// with `J_0 + 2 Σ_k J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, n_max: usize) -> Vec<f64> {
    let x = z.abs();
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-8 {
        // leading two terms of the power series
        let half = x / 2.0;
        let mut term = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                term *= half / n as f64;
            }
            *o = term * (1.0 - half * half / (n as f64 + 1.0));
        }
    } else {
        let top = n_max.max(x.ceil() as usize);
        let mut start = top + 20 + (40.0 * top as f64).sqrt().ceil() as usize;
        start += start % 2;
        let mut values = vec![0.0; start + 2];
        values[start] = 1e-30;
        for k in (1..=start).rev() {
            values[k - 1] = 2.0 * k as f64 / x * values[k] - values[k + 1];
            if values[k - 1].abs() > 1e250 {
                for v in values[k - 1..].iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        let norm = values[0] + 2.0 * values.iter().skip(2).step_by(2).sum::<f64>();
        for (o, v) in out.iter_mut().zip(&values) {
            *o = v / norm;
        }
    }
    if z < 0.0 {
        for (n, o) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *o = -*o;
            }
        }
    }
    out
}

/// Chebyshev coefficients `c_n` with `cos(z x + φ) = Σ_n c_n T_n(x)` on
/// `[-1, 1]`, truncated once the tail drops below `tolerance`.
pub fn cosine_coefficients(z: f64, phi: f64, tolerance: f64) -> Result<Vec<f64>> {
    let tail = tolerance * 1e-2;
    let mut n_max = (z.abs() * 1.2) as usize + 64;
    loop {
        let bessel = bessel_j_sequence(z, n_max.min(MAX_CHEBYSHEV_TERMS));
        let first = z.abs().ceil() as usize;
        let cut = (first..bessel.len().saturating_sub(2))
            .find(|&n| bessel[n + 1].abs() < tail && bessel[n + 2].abs() < tail);
        if let Some(cut) = cut {
            let (c, s) = (phi.cos(), phi.sin());
            return Ok((0..=cut)
                .map(|n| {
                    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    let weight = if n == 0 { 1.0 } else { 2.0 };
                    let trig = if n % 2 == 0 { c } else { -s };
                    weight * sign * trig * bessel[n]
                })
                .collect());
        }
        if n_max >= MAX_CHEBYSHEV_TERMS {
            return Err(QpfError::Convergence {
                what: format!("Chebyshev expansion of cos at z = {z}"),
                iterations: MAX_CHEBYSHEV_TERMS,
                best: Vec::new(),
            });
        }
        n_max *= 2;
    }
}

/// Applies `cos(t A + δ)` to vectors using a cached spectral interval of `A`.
#[derive(Debug, Clone)]
pub struct CosinePropagator<'a> {
    op: &'a SparseHermitianOperator,
    center: f64,
    half_width: f64,
    tolerance: f64,
}

impl<'a> CosinePropagator<'a> {
    /// Spectral bounds are found with [`extremal_eigenvalues`].
    pub fn new(op: &'a SparseHermitianOperator, tolerance: f64) -> Result<Self> {
        let (lo, hi) = extremal_eigenvalues(op, 1e-10)?;
        Ok(Self::with_bounds(op, lo, hi, tolerance))
    }

    /// Uses caller-supplied bounds, e.g. the known `[0, J_max(J_max+1)]`.
    pub fn with_bounds(op: &'a SparseHermitianOperator, lo: f64, hi: f64, tolerance: f64) -> Self {
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo) * (1.0 + SPECTRAL_PADDING);
        CosinePropagator { op, center, half_width, tolerance }
    }

    pub fn operator(&self) -> &SparseHermitianOperator {
        self.op
    }

    /// Unnormalized `cos(t A + δ) ψ`.
    pub fn apply(&self, psi: &[C64], time: f64, phase: f64) -> Result<Vec<C64>> {
        let dim = self.op.dimension();
        if psi.len() != dim {
            return Err(QpfError::DimensionMismatch { expected: dim, got: psi.len() });
        }
        let phi = time * self.center + phase;
        if self.half_width <= f64::MIN_POSITIVE || time == 0.0 {
            let c = phi.cos();
            return Ok(psi.iter().map(|a| a * c).collect());
        }
        let coefficients = cosine_coefficients(time * self.half_width, phi, self.tolerance)?;
        let inv = 1.0 / self.half_width;
        // X v = (A v - center v) / half_width
        let rescaled = |v: &[C64], out: &mut [C64]| {
            self.op.apply_into(v, out);
            for (o, x) in out.iter_mut().zip(v) {
                *o = (*o - x * self.center) * inv;
            }
        };
        let mut acc: Vec<C64> = psi.iter().map(|a| a * coefficients[0]).collect();
        if coefficients.len() == 1 {
            return Ok(acc);
        }
        let mut previous = psi.to_vec();
        let mut current = vec![ZERO; dim];
        rescaled(psi, &mut current);
        linalg::axpy(C64::new(coefficients[1], 0.0), &current, &mut acc);
        let mut next = vec![ZERO; dim];
        for &c in &coefficients[2..] {
            rescaled(&current, &mut next);
            for (n, p) in next.iter_mut().zip(&previous) {
                *n = *n * 2.0 - p;
            }
            linalg::axpy(C64::new(c, 0.0), &next, &mut acc);
            std::mem::swap(&mut previous, &mut current);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(acc)
    }

    /// One post-selected measurement on a state vector.
    pub fn step(&self, state: &StateVector, time: f64, phase: f64) -> Result<(StateVector, f64)> {
        let filtered = self.apply(state.amplitudes(), time, phase)?;
        let p = linalg::norm_sqr(&filtered);
        if !(p >= EXTINCTION_THRESHOLD) {
            return Err(QpfError::Extinction { step: 0, probability: p });
        }
        Ok((state.with_amplitudes(filtered)?, p))
    }
}

/// One post-selected measurement computed through the Chebyshev route.
/// Recomputes the spectral bounds of `op`; use [`CosinePropagator`] to reuse
/// them across steps.
pub fn apply_step_statevector(
    op: &SparseHermitianOperator,
    state: &StateVector,
    time: f64,
    phase: f64,
    tolerance: f64,
) -> Result<(StateVector, f64)> {
    CosinePropagator::new(op, tolerance)?.step(state, time, phase)
}

//! Limited-memory BFGS with backtracking Armijo line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the largest gradient component is below this.
    pub gradient_tol: f64,
    /// Stop once the relative decrease stays below this for `patience` steps.
    pub value_tol: f64,
    pub patience: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 10, max_iterations: 2000, gradient_tol: 1e-10, value_tol: 1e-13, patience: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(f: F, x0: Vec<f64>, options: &LbfgsOptions) -> LbfgsOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalled = 0;
    let mut iterations = 0;
    if !value.is_finite() {
        return LbfgsOutcome { x, value, iterations, converged: false };
    }
    while iterations < options.max_iterations {
        if max_abs(&grad) <= options.gradient_tol {
            return LbfgsOutcome { x, value, iterations, converged: true };
        }
        iterations += 1;

        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / max_abs(&grad).max(1e-300),
        };
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = grad.iter().map(|g| -g / max_abs(&grad)).collect();
            slope = dot(&grad, &direction);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&direction).map(|(xi, di)| xi + step * di).collect();
            let (v, g) = f(&trial);
            if v.is_finite() && v <= value + 1e-4 * step * slope {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, v_new, g_new)) = accepted else {
            // no descent possible along any tried step: a numerical minimum
            return LbfgsOutcome { x, value, iterations, converged: max_abs(&grad) < 1e-6 };
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == options.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let decrease = value - v_new;
        if decrease <= options.value_tol * value.abs().max(v_new.abs()).max(1e-300) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = x_new;
        value = v_new;
        grad = g_new;
        if stalled >= options.patience {
            return LbfgsOutcome { x, value, iterations, converged: true };
        }
    }
    let converged = max_abs(&grad) <= options.gradient_tol;
    LbfgsOutcome { x, value, iterations, converged }
}

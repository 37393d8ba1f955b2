//! Dense diagonalization for small operators and Lanczos iteration for the
//! extremal spectrum and spectral measures of large sparse ones.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::sparse::{EnergyFrame, SparseHermitianOperator};
use crate::error::{QpfError, Result};
use crate::linalg::{self, C64, ZERO};
use crate::rng;

pub const DEFAULT_DENSE_LIMIT: usize = 4_096;
pub const HEAVY_DENSE_LIMIT: usize = 12_870;

/// Dimensions at or below this are always diagonalized densely when only the
/// extremal eigenvalues are requested.
const DENSE_EXTREMAL_CUTOFF: usize = 64;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: Option<DMatrix<C64>>,
    pub scale_info: EnergyFrame,
}

impl EigenDecomposition {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `⟨v_k|ψ⟩` for every eigenvector.
    pub fn project(&self, amplitudes: &[C64]) -> Result<Vec<C64>> {
        let vectors = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| QpfError::Dependency("projection needs eigenvectors".into()))?;
        if amplitudes.len() != vectors.nrows() {
            return Err(QpfError::DimensionMismatch { expected: vectors.nrows(), got: amplitudes.len() });
        }
        Ok(vectors
            .column_iter()
            .map(|v| v.iter().zip(amplitudes).map(|(a, b)| a.conj() * b).sum())
            .collect())
    }

    /// `Σ_k c_k |v_k⟩`.
    pub fn reconstruct(&self, coefficients: &[C64]) -> Result<Vec<C64>> {
        let vectors = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| QpfError::Dependency("reconstruction needs eigenvectors".into()))?;
        let mut out = vec![ZERO; vectors.nrows()];
        for (c, v) in coefficients.iter().zip(vectors.column_iter()) {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += c * x;
            }
        }
        Ok(out)
    }
}

pub fn eigendecompose(op: &SparseHermitianOperator) -> Result<EigenDecomposition> {
    eigendecompose_with_limit(op, DEFAULT_DENSE_LIMIT)
}

/// Full dense diagonalization, refused above `limit`. Pass
/// [`HEAVY_DENSE_LIMIT`] to allow the largest supported sectors.
pub fn eigendecompose_with_limit(op: &SparseHermitianOperator, limit: usize) -> Result<EigenDecomposition> {
    let dim = op.dimension();
    if dim > limit {
        return Err(QpfError::Capacity(format!(
            "dense diagonalization of dimension {dim} exceeds the limit of {limit}"
        )));
    }
    let (values, vectors) = if op.is_real() {
        let dense = DMatrix::from_fn(dim, dim, |i, j| op.get(i, j).re);
        let eig = SymmetricEigen::new(dense);
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(op.to_dense());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |i, j| vectors[(i, order[j])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors: Some(eigenvectors), scale_info: op.frame() })
}

/// Krylov basis and tridiagonal coefficients produced by Lanczos with full
/// reorthogonalization.
struct LanczosRun {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// The Krylov space became invariant before `max_steps`.
    exhausted: bool,
}

fn lanczos(op: &SparseHermitianOperator, start: &[C64], max_steps: usize, breakdown_tol: f64) -> LanczosRun {
    let dim = op.dimension();
    let mut q = start.to_vec();
    linalg::normalize(&mut q);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut exhausted = false;
    for k in 0..max_steps.min(dim) {
        op.apply_into(&basis[k], &mut w);
        let a = linalg::dot(&basis[k], &w).re;
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = linalg::dot(v, &w);
                linalg::axpy(-c, v, &mut w);
            }
        }
        let b = linalg::norm(&w);
        let op_scale = alpha.iter().map(|x| x.abs()).fold(b, f64::max).max(1e-300);
        if b <= breakdown_tol * op_scale || k + 1 == dim {
            exhausted = true;
            break;
        }
        if k + 1 == max_steps {
            beta.push(b);
            break;
        }
        beta.push(b);
        let next: Vec<C64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }
    LanczosRun { basis, alpha, beta, exhausted }
}

impl LanczosRun {
    fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// Eigenpairs of the tridiagonal projection, ascending.
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.steps();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    /// Residual norm `β_m |s_{m,k}|` of Ritz pair `k`.
    fn residual(&self, vectors: &DMatrix<f64>, k: usize) -> f64 {
        if self.exhausted {
            return 0.0;
        }
        let m = self.steps();
        self.beta.get(m - 1).copied().unwrap_or(0.0) * vectors[(m - 1, k)].abs()
    }

    /// Bound on `|θ_k - λ|`: the residual, tightened to `r² / gap` when the
    /// neighbouring Ritz value is well separated.
    fn error_bound(&self, values: &[f64], vectors: &DMatrix<f64>, k: usize) -> f64 {
        let r = self.residual(vectors, k);
        let gap = values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| (v - values[k]).abs())
            .fold(f64::INFINITY, f64::min);
        if gap > r {
            r.min(r * r / (gap - r))
        } else {
            r
        }
    }

    fn ritz_vector(&self, vectors: &DMatrix<f64>, k: usize) -> Vec<C64> {
        let dim = self.basis[0].len();
        let mut out = vec![ZERO; dim];
        for (i, v) in self.basis.iter().take(self.steps()).enumerate() {
            linalg::axpy(C64::new(vectors[(i, k)], 0.0), v, &mut out);
        }
        out
    }
}

fn krylov_dimension(dim: usize) -> usize {
    // keep the stored basis around 400 MB at most
    let by_memory = (400_000_000 / (16 * dim.max(1))).max(30);
    dim.min(120).min(by_memory)
}

/// Lowest and highest eigenvalue.
///
/// Dimensions up to 64 are diagonalized densely. Larger operators use
/// explicitly restarted Lanczos until both extremal Ritz residuals fall
/// below `tolerance * max(1, |θ|)`.
pub fn extremal_eigenvalues(op: &SparseHermitianOperator, tolerance: f64) -> Result<(f64, f64)> {
    let dim = op.dimension();
    if dim == 0 {
        return Err(QpfError::Domain("empty operator has no spectrum".into()));
    }
    if dim <= DENSE_EXTREMAL_CUTOFF {
        let eig = eigendecompose(op)?;
        return Ok((eig.eigenvalues[0], eig.eigenvalues[dim - 1]));
    }
    const MAX_RESTARTS: usize = 60;
    let mut rng = rng::seeded(0x5eed_1a2c);
    let mut start: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    let m = krylov_dimension(dim);
    let mut best = (f64::NAN, f64::NAN);
    for _ in 0..MAX_RESTARTS {
        let run = lanczos(op, &start, m, 1e-13);
        let (values, vectors) = run.ritz();
        let last = values.len() - 1;
        best = (values[0], values[last]);
        let r_low = run.error_bound(&values, &vectors, 0);
        let r_high = run.error_bound(&values, &vectors, last);
        if r_low <= tolerance * values[0].abs().max(1.0) && r_high <= tolerance * values[last].abs().max(1.0) {
            return Ok(best);
        }
        let mut low = run.ritz_vector(&vectors, 0);
        let high = run.ritz_vector(&vectors, last);
        linalg::axpy(C64::new(1.0, 0.0), &high, &mut low);
        start = low;
    }
    Err(QpfError::Convergence {
        what: "extremal eigenvalues".into(),
        iterations: MAX_RESTARTS * m,
        best: vec![best.0, best.1],
    })
}

/// Widens `[e_min, e_max]` by `fraction` of its width on each side, for
/// scaling when the spectral bounds are only estimates.
pub fn widen_bounds(e_min: f64, e_max: f64, fraction: f64) -> (f64, f64) {
    let pad = fraction * (e_max - e_min);
    (e_min - pad, e_max + pad)
}

/// Spectral measure of a state with respect to an operator: nodes and
/// weights such that `⟨ψ|g(A)|ψ⟩ ≈ Σ_k w_k g(θ_k)`.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub nodes: Vec<f64>,
    /// Real amplitudes whose squares are the weights.
    pub amplitudes: Vec<f64>,
    /// The Krylov space of the state closed before the step cap, so nodes
    /// are exact eigenvalues and the measure is exact.
    pub exact: bool,
}

impl SpectralMeasure {
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// Distance from the lowest node to the next distinct one, counting only
    /// nodes whose weight exceeds `weight_floor` times the total. Nodes closer
    /// than `1e-6` of the node span are one level.
    pub fn gap(&self, weight_floor: f64) -> Option<f64> {
        let weights = self.weights();
        let total: f64 = weights.iter().sum();
        let mut kept: Vec<f64> = self
            .nodes
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > weight_floor * total)
            .map(|(&e, _)| e)
            .collect();
        kept.sort_by(f64::total_cmp);
        let span = kept.last()? - kept.first()?;
        let ground = kept[0];
        kept.into_iter().find(|&e| e - ground > 1e-6 * span).map(|e| e - ground)
    }
}

/// Lanczos spectral measure of `state` under `op`, from at most
/// `max_steps` Krylov vectors. When the Krylov space closes early the result
/// reproduces every function of `op` on `state` exactly; otherwise it is the
/// Gauss quadrature of order `max_steps`.
pub fn spectral_measure(op: &SparseHermitianOperator, state: &[C64], max_steps: usize) -> Result<SpectralMeasure> {
    if state.len() != op.dimension() {
        return Err(QpfError::DimensionMismatch { expected: op.dimension(), got: state.len() });
    }
    let norm = linalg::norm(state);
    if norm == 0.0 {
        return Err(QpfError::Domain("zero state has no spectral measure".into()));
    }
    let run = lanczos(op, state, max_steps.max(1), 1e-10);
    let (nodes, vectors) = run.ritz();
    let amplitudes = (0..nodes.len()).map(|k| norm * vectors[(0, k)].abs()).collect();
    Ok(SpectralMeasure { nodes, amplitudes, exact: run.exhausted })
}

/// `(A - target) / (e_max - e_min)`: the target level lands on zero and the
/// full width becomes one.
pub fn scale_and_shift(
    op: &SparseHermitianOperator,
    target_energy: f64,
    e_min: f64,
    e_max: f64,
) -> Result<SparseHermitianOperator> {
    if !(e_min < e_max) {
        return Err(QpfError::Domain(format!(
            "scaling needs e_min < e_max, got [{e_min}, {e_max}]"
        )));
    }
    Ok(op.affine(target_energy, e_max - e_min))
}

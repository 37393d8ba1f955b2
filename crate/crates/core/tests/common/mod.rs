//! Dense reference constructions built from Kronecker products of Pauli
//! matrices, independent of the sparse builders.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use qpf_core::rng;
use rand::Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Single-site Pauli matrices in the local order (bit 0, bit 1) = (down, up).
pub fn pauli(which: char) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    match which {
        'x' => DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        'y' => DMatrix::from_row_slice(2, 2, &[c(0.0), i, -i, c(0.0)]),
        'z' => DMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)]),
        _ => panic!("unknown pauli {which}"),
    }
}

/// `σ` acting on `site` of `n`; site `q` is bit `q` of the basis index, so
/// it is the `q`-th factor counted from the right.
pub fn site_op(single: &DMatrix<C64>, site: usize, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(1, 1);
    for q in (0..n).rev() {
        let factor = if q == site { single.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

pub fn lattice_bonds(lx: usize, ly: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    let idx = |x: usize, y: usize| y * lx + x;
    for y in 0..ly {
        for x in 0..lx {
            let mut push = |a: usize, b: usize| {
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            };
            if x + 1 < lx {
                push(idx(x, y), idx(x + 1, y));
            } else if periodic {
                push(idx(x, y), idx(0, y));
            }
            if y + 1 < ly {
                push(idx(x, y), idx(x, y + 1));
            } else if periodic {
                push(idx(x, y), idx(x, 0));
            }
        }
    }
    set.into_iter().collect()
}

/// `Σ_bonds σ_i·σ_j + h Σ_i σ_z,i`
pub fn dense_heisenberg(lx: usize, ly: usize, periodic: bool, field: f64) -> DMatrix<C64> {
    let n = lx * ly;
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    let ops: Vec<Vec<DMatrix<C64>>> =
        ['x', 'y', 'z'].iter().map(|&p| (0..n).map(|q| site_op(&pauli(p), q, n)).collect()).collect();
    for (a, b) in lattice_bonds(lx, ly, periodic) {
        for comp in &ops {
            h += &comp[a] * &comp[b];
        }
    }
    if field != 0.0 {
        for q in 0..n {
            h += &ops[2][q] * c(field);
        }
    }
    h
}

/// `(Σ_i σ_i / 2)²`
pub fn dense_total_spin_squared(n: usize) -> DMatrix<C64> {
    let dim = 1 << n;
    let mut total = DMatrix::zeros(dim, dim);
    for p in ['x', 'y', 'z'] {
        let mut s = DMatrix::zeros(dim, dim);
        for q in 0..n {
            s += site_op(&pauli(p), q, n) * c(0.5);
        }
        total += &s * &s;
    }
    total
}

/// `cos(t A + δ)` through the matrix exponential.
pub fn dense_cos(a: &DMatrix<C64>, t: f64, delta: f64) -> DMatrix<C64> {
    let dim = a.nrows();
    let arg = a * c(t) + DMatrix::<C64>::identity(dim, dim) * c(delta);
    let i = C64::new(0.0, 1.0);
    ((&arg * i).exp() + (&arg * -i).exp()) * c(0.5)
}

pub fn random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut r = rng::seeded(seed);
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

pub fn dense_expectation(a: &DMatrix<C64>, psi: &[C64]) -> C64 {
    let v = DVector::from_column_slice(psi);
    (v.adjoint() * a * &v)[(0, 0)]
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn dense_max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

/// Dense eigendecomposition of a hermitian matrix, for many matrix
/// functions of the same operator.
pub struct DenseSpectrum {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl DenseSpectrum {
    pub fn new(a: &DMatrix<C64>) -> Self {
        let eig = a.clone().symmetric_eigen();
        DenseSpectrum { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    /// `cos(t A + δ)`
    pub fn cos(&self, t: f64, delta: f64) -> DMatrix<C64> {
        let diag = DMatrix::from_diagonal(&self.values.map(|e| c((t * e + delta).cos())));
        &self.vectors * diag * self.vectors.adjoint()
    }
}

//! Spin-1/2 lattice operators in the computational basis.
//!
//! Site `q = y * lx + x` is qubit `q`; bit `q` set means spin up.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{check_qubits, Basis, SectorBasis, DEFAULT_MAX_QUBITS};
use super::sparse::SparseHermitianOperator;
use crate::error::{QpfError, Result};
use crate::linalg::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub periodic: bool,
    /// Coupling of each `σ_z` to the external field.
    #[serde(default)]
    pub field_h: f64,
}

impl SpinLatticeSpec {
    pub fn new(lx: usize, ly: usize, periodic: bool) -> Self {
        SpinLatticeSpec { lx, ly, periodic, field_h: 0.0 }
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn validate(&self, max_qubits: usize) -> Result<()> {
        if self.sites() < 2 {
            return Err(QpfError::Domain(format!(
                "lattice {}x{} has fewer than two sites",
                self.lx, self.ly
            )));
        }
        check_qubits(self.sites(), max_qubits)
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.lx + x
    }

    /// Nearest-neighbour bonds `(i, j)` with `i < j`, each listed once.
    /// Wrap bonds that coincide with open bonds (length-2 directions) are
    /// not duplicated; length-1 directions have no wrap bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds = BTreeSet::new();
        let mut push = |a: usize, b: usize| {
            if a != b {
                bonds.insert((a.min(b), a.max(b)));
            }
        };
        for y in 0..self.ly {
            for x in 0..self.lx {
                let here = self.site(x, y);
                if x + 1 < self.lx {
                    push(here, self.site(x + 1, y));
                } else if self.periodic {
                    push(here, self.site(0, y));
                }
                if y + 1 < self.ly {
                    push(here, self.site(x, y + 1));
                } else if self.periodic {
                    push(here, self.site(x, 0));
                }
            }
        }
        bonds.into_iter().collect()
    }

    /// Sublattice parity of site `q`: `true` on the even sublattice.
    pub fn is_even_site(&self, q: usize) -> bool {
        let (x, y) = (q % self.lx, q / self.lx);
        (x + y) % 2 == 0
    }
}

fn z(bits: u64, q: usize) -> f64 {
    if bits >> q & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Builds an operator row by row from a generator returning the diagonal
/// element and the off-diagonal `(target bit-string, value)` pairs.
fn assemble<F>(basis: &Basis, row: F) -> Result<SparseHermitianOperator>
where
    F: Fn(u64) -> (f64, Vec<(u64, f64)>) + Sync,
{
    let dim = basis.len();
    let rows: Result<Vec<Vec<(usize, C64)>>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let bits = basis.label(i);
            let (diag, off) = row(bits);
            let mut entries = Vec::with_capacity(off.len() + 1);
            entries.push((i, C64::new(diag, 0.0)));
            for (target, v) in off {
                let j = basis.index_of(target).ok_or_else(|| {
                    QpfError::Structure(format!(
                        "operator connects {bits:#b} to {target:#b}, which lies outside the basis"
                    ))
                })?;
                entries.push((j, C64::new(v, 0.0)));
            }
            entries.sort_by_key(|e| e.0);
            Ok(entries)
        })
        .collect();
    Ok(SparseHermitianOperator::from_rows(dim, rows?).mark_hermitian())
}

/// `H = Σ_<ij> σ_i·σ_j + h Σ_i σ_z,i` over the full `2^N` register.
pub fn build_heisenberg(spec: &SpinLatticeSpec) -> Result<SparseHermitianOperator> {
    spec.validate(DEFAULT_MAX_QUBITS)?;
    build_heisenberg_in(spec, &Basis::full(spec.sites())?)
}

pub fn build_heisenberg_in(spec: &SpinLatticeSpec, basis: &Basis) -> Result<SparseHermitianOperator> {
    spec.validate(DEFAULT_MAX_QUBITS)?;
    if basis.qubits() != spec.sites() {
        return Err(QpfError::DimensionMismatch { expected: spec.sites(), got: basis.qubits() });
    }
    let bonds = spec.bonds();
    let n = spec.sites();
    let h = spec.field_h;
    assemble(basis, |bits| {
        let mut diag = 0.0;
        let mut off = Vec::new();
        for &(i, j) in &bonds {
            diag += z(bits, i) * z(bits, j);
            // σxσx + σyσy = 2(σ+σ- + σ-σ+) swaps antiparallel spins
            if (bits >> i & 1) != (bits >> j & 1) {
                off.push((bits ^ (1 << i | 1 << j), 2.0));
            }
        }
        if h != 0.0 {
            diag += h * (0..n).map(|q| z(bits, q)).sum::<f64>();
        }
        (diag, off)
    })
}

/// `J² = (Σ_i σ_i / 2)²`, eigenvalues `J(J+1)`.
pub fn build_total_spin_squared(n_spins: usize) -> Result<SparseHermitianOperator> {
    build_total_spin_squared_in(&Basis::full(n_spins)?)
}

pub fn build_total_spin_squared_in(basis: &Basis) -> Result<SparseHermitianOperator> {
    let n = basis.qubits();
    assemble(basis, |bits| {
        // J² = 3N/4 + ½ Σ_{i<j} σ_i·σ_j
        let mut diag = 0.75 * n as f64;
        let mut off = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                diag += 0.5 * z(bits, i) * z(bits, j);
                if (bits >> i & 1) != (bits >> j & 1) {
                    off.push((bits ^ (1 << i | 1 << j), 1.0));
                }
            }
        }
        (diag, off)
    })
}

/// `J_z = Σ_i σ_z,i / 2`.
pub fn build_jz(n_spins: usize) -> Result<SparseHermitianOperator> {
    build_jz_in(&Basis::full(n_spins)?)
}

pub fn build_jz_in(basis: &Basis) -> Result<SparseHermitianOperator> {
    let n = basis.qubits() as f64;
    assemble(basis, |bits| (bits.count_ones() as f64 - n / 2.0, Vec::new()))
}

/// Projects a full-register operator onto `sector`. Fails if any retained
/// row couples to a state outside the sector.
pub fn sector_restrict(op: &SparseHermitianOperator, sector: &SectorBasis) -> Result<SparseHermitianOperator> {
    let full = 1usize << sector.parent_qubits();
    if op.dimension() != full {
        return Err(QpfError::DimensionMismatch { expected: full, got: op.dimension() });
    }
    let rows: Result<Vec<Vec<(usize, C64)>>> = sector
        .index_map()
        .par_iter()
        .map(|&bits| {
            op.row(bits as usize)
                .map(|(j, v)| {
                    sector.index_of(j as u64).map(|k| (k, v)).ok_or_else(|| {
                        QpfError::Structure(format!(
                            "operator is not block diagonal in the {} = {} sector: row {bits:#b} couples to {j:#b}",
                            sector.constraint().name(),
                            sector.constraint().value()
                        ))
                    })
                })
                .collect()
        })
        .collect();
    let op_out = SparseHermitianOperator::from_rows(sector.len(), rows?).with_frame(op.frame());
    Ok(if op.hermiticity_checked() { op_out.mark_hermitian() } else { op_out })
}

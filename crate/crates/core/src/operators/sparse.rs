use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};
use crate::linalg::{C64, ZERO};

/// Affine map between an operator and the physical operator it was derived
/// from: `physical = scale * op + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFrame {
    pub shift: f64,
    pub scale: f64,
}

impl Default for EnergyFrame {
    fn default() -> Self {
        EnergyFrame { shift: 0.0, scale: 1.0 }
    }
}

impl EnergyFrame {
    pub fn to_physical(&self, e: f64) -> f64 {
        self.scale * e + self.shift
    }

    pub fn to_scaled(&self, e: f64) -> f64 {
        (e - self.shift) / self.scale
    }

    /// Frame obtained after mapping the current operator through
    /// `op' = (op - shift) / scale`.
    pub fn compose(&self, shift: f64, scale: f64) -> EnergyFrame {
        EnergyFrame {
            shift: self.scale * shift + self.shift,
            scale: self.scale * scale,
        }
    }
}

/// Hermitian operator stored row-compressed.
///
/// Rows are sorted by column and hold no duplicate or exactly-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitianOperator {
    dimension: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    hermiticity_checked: bool,
    frame: EnergyFrame,
}

impl SparseHermitianOperator {
    /// Assembles an operator from `(row, col, value)` triplets. Duplicates
    /// are summed. Hermiticity is not verified here; see [`Self::check_hermitian`].
    pub fn from_triplets(dimension: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dimension];
        for (i, j, v) in triplets {
            if i >= dimension || j >= dimension {
                return Err(QpfError::Structure(format!(
                    "entry ({i}, {j}) outside dimension {dimension}"
                )));
            }
            *rows[i].entry(j).or_insert(ZERO) += v;
        }
        Ok(Self::from_rows(dimension, rows.into_iter().map(|r| r.into_iter().collect())))
    }

    /// Rows must already be sorted by column with unique columns.
    pub(crate) fn from_rows(dimension: usize, rows: impl IntoIterator<Item = Vec<(usize, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dimension + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                if v != ZERO {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        debug_assert_eq!(row_ptr.len(), dimension + 1);
        SparseHermitianOperator {
            dimension,
            row_ptr,
            cols,
            values,
            hermiticity_checked: false,
            frame: EnergyFrame::default(),
        }
    }

    pub fn identity(dimension: usize) -> Self {
        Self::diagonal(&vec![1.0; dimension])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut op = Self::from_rows(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| vec![(i, C64::new(v, 0.0))]),
        );
        op.hermiticity_checked = true;
        op
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn frame(&self) -> EnergyFrame {
        self.frame
    }

    pub fn hermiticity_checked(&self) -> bool {
        self.hermiticity_checked
    }

    pub(crate) fn with_frame(mut self, frame: EnergyFrame) -> Self {
        self.frame = frame;
        self
    }

    pub(crate) fn mark_hermitian(mut self) -> Self {
        self.hermiticity_checked = true;
        self
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dimension).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Verifies `A[i][j] == conj(A[j][i])` to `tol` and records the result.
    pub fn check_hermitian(&mut self, tol: f64) -> Result<()> {
        for (i, j, v) in self.entries() {
            let mirror = self.get(j, i);
            if (v - mirror.conj()).norm() > tol {
                return Err(QpfError::Structure(format!(
                    "entry ({i}, {j}) = {v} has mirror {mirror}; operator is not hermitian"
                )));
            }
        }
        self.hermiticity_checked = true;
        Ok(())
    }

    /// `y = A x`, parallel over rows.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dimension);
        assert_eq!(y.len(), self.dimension);
        y.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, yi)| {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dimension {
            return Err(QpfError::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        let mut y = vec![ZERO; self.dimension];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// `(A - shift I) / scale` with the frame updated accordingly.
    pub fn affine(&self, shift: f64, scale: f64) -> Self {
        let rows = (0..self.dimension).map(|i| {
            let mut row: Vec<(usize, C64)> = Vec::with_capacity(self.row_ptr[i + 1] - self.row_ptr[i] + 1);
            let mut diagonal_seen = false;
            for (j, v) in self.row(i) {
                if j == i {
                    row.push((j, (v - shift) / scale));
                    diagonal_seen = true;
                } else {
                    if j > i && !diagonal_seen {
                        row.push((i, C64::new(-shift / scale, 0.0)));
                        diagonal_seen = true;
                    }
                    row.push((j, v / scale));
                }
            }
            if !diagonal_seen {
                row.push((i, C64::new(-shift / scale, 0.0)));
            }
            row
        });
        let mut op = Self::from_rows(self.dimension, rows);
        op.hermiticity_checked = self.hermiticity_checked;
        op.frame = self.frame.compose(shift, scale);
        op
    }

    /// Largest `|[A, B]_ij|` computed from sparse rows.
    pub fn commutator_max_abs(&self, other: &SparseHermitianOperator) -> Result<f64> {
        if self.dimension != other.dimension {
            return Err(QpfError::DimensionMismatch { expected: self.dimension, got: other.dimension });
        }
        let worst = (0..self.dimension)
            .into_par_iter()
            .map(|i| {
                let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        *acc.entry(j).or_insert(ZERO) += a * b;
                    }
                }
                for (k, b) in other.row(i) {
                    for (j, a) in self.row(k) {
                        *acc.entry(j).or_insert(ZERO) -= b * a;
                    }
                }
                acc.values().map(|v| v.norm()).fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        Ok(worst)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{QpfError, Result};

/// Largest register handled by the builders unless the caller raises it.
pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Quantum number fixed by a [`SectorBasis`].
///
/// Spins use bit `q` set = spin up (`σ_z = +1`), so the `J_z` of a bit-string
/// is `(2 * popcount - n) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorConstraint {
    /// Total `J_z` stored as `2 J_z` to stay integral.
    Jz { twice_jz: i64 },
}

impl SectorConstraint {
    pub fn name(&self) -> &'static str {
        match self {
            SectorConstraint::Jz { .. } => "J_z",
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            SectorConstraint::Jz { twice_jz } => *twice_jz as f64 / 2.0,
        }
    }

    pub fn admits(&self, qubits: usize, bits: u64) -> bool {
        match self {
            SectorConstraint::Jz { twice_jz } => 2 * bits.count_ones() as i64 - qubits as i64 == *twice_jz,
        }
    }
}

/// Bit-strings retained by a symmetry constraint, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    parent_qubits: usize,
    constraint: SectorConstraint,
    index_map: Vec<u64>,
}

impl SectorBasis {
    pub fn jz(parent_qubits: usize, jz: f64) -> Result<Self> {
        check_qubits(parent_qubits, DEFAULT_MAX_QUBITS)?;
        let twice = 2.0 * jz;
        if (twice - twice.round()).abs() > 1e-12 {
            return Err(QpfError::Domain(format!("J_z = {jz} is not a half-integer")));
        }
        let twice_jz = twice.round() as i64;
        if (twice_jz + parent_qubits as i64) % 2 != 0 || twice_jz.unsigned_abs() as usize > parent_qubits {
            return Err(QpfError::Domain(format!(
                "J_z = {jz} is not reachable with {parent_qubits} spins"
            )));
        }
        let constraint = SectorConstraint::Jz { twice_jz };
        let index_map = (0..1u64 << parent_qubits)
            .filter(|&b| constraint.admits(parent_qubits, b))
            .collect();
        Ok(SectorBasis { parent_qubits, constraint, index_map })
    }

    pub fn parent_qubits(&self) -> usize {
        self.parent_qubits
    }

    pub fn constraint(&self) -> SectorConstraint {
        self.constraint
    }

    pub fn index_map(&self) -> &[u64] {
        &self.index_map
    }

    pub fn len(&self) -> usize {
        self.index_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_map.is_empty()
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.index_map.binary_search(&bits).ok()
    }
}

/// Many-body basis an operator or state is expressed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Basis {
    Full { qubits: usize },
    Sector(SectorBasis),
}

impl Basis {
    pub fn full(qubits: usize) -> Result<Self> {
        check_qubits(qubits, DEFAULT_MAX_QUBITS)?;
        Ok(Basis::Full { qubits })
    }

    pub fn qubits(&self) -> usize {
        match self {
            Basis::Full { qubits } => *qubits,
            Basis::Sector(s) => s.parent_qubits,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Basis::Full { qubits } => 1usize << qubits,
            Basis::Sector(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, index: usize) -> u64 {
        match self {
            Basis::Full { .. } => index as u64,
            Basis::Sector(s) => s.index_map[index],
        }
    }

    pub fn labels(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        match self {
            Basis::Full { qubits } => ((bits >> qubits) == 0).then_some(bits as usize),
            Basis::Sector(s) => s.index_of(bits),
        }
    }
}

pub(crate) fn check_qubits(qubits: usize, max_qubits: usize) -> Result<()> {
    if qubits == 0 {
        return Err(QpfError::Domain("at least one spin is required".into()));
    }
    if qubits > max_qubits {
        return Err(QpfError::Capacity(format!(
            "{qubits} spins exceed the configured maximum of {max_qubits}"
        )));
    }
    Ok(())
}

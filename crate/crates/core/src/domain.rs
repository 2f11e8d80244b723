//! Discrete domains and their real embeddings.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Value set shared by every coordinate of a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    /// `{0, 1}` embedded as `{0.0, 1.0}`.
    Binary01,
    /// `{0, 1}` embedded as `{-1.0, +1.0}`.
    SpinPm1,
    /// `levels` points spaced evenly over `[lo, hi]`, endpoints included.
    OrdinalGrid { levels: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    dim: usize,
    kind: DomainKind,
}

impl DomainSpec {
    pub fn new(dim: usize, kind: DomainKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("domain dimension must be positive"));
        }
        if let DomainKind::OrdinalGrid { levels, lo, hi } = kind {
            if levels < 2 {
                return Err(Error::invalid("ordinal grid needs at least 2 levels"));
            }
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("ordinal grid needs finite lo < hi"));
            }
        }
        Ok(DomainSpec { dim, kind })
    }

    pub fn binary(dim: usize) -> Result<Self> {
        Self::new(dim, DomainKind::Binary01)
    }

    pub fn spin(dim: usize) -> Result<Self> {
        Self::new(dim, DomainKind::SpinPm1)
    }

    pub fn grid(dim: usize, levels: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(dim, DomainKind::OrdinalGrid { levels, lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn levels(&self) -> usize {
        match self.kind {
            DomainKind::Binary01 | DomainKind::SpinPm1 => 2,
            DomainKind::OrdinalGrid { levels, .. } => levels,
        }
    }

    pub fn is_two_level(&self) -> bool {
        matches!(self.kind, DomainKind::Binary01 | DomainKind::SpinPm1)
    }

    /// Embedded value of level `k` (no range check).
    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        match self.kind {
            DomainKind::Binary01 => k as f64,
            DomainKind::SpinPm1 => {
                if k == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            DomainKind::OrdinalGrid { levels, lo, hi } => {
                if k + 1 == levels {
                    hi
                } else {
                    lo + (hi - lo) * (k as f64) / ((levels - 1) as f64)
                }
            }
        }
    }

    /// All embedded values of one coordinate, in level order.
    pub fn values(&self) -> Vec<f64> {
        (0..self.levels()).map(|k| self.value(k)).collect()
    }

    pub fn validate(&self, state: &StateVector) -> Result<()> {
        if state.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: state.len(),
            });
        }
        let levels = self.levels();
        for (coord, &index) in state.indices().iter().enumerate() {
            if index >= levels {
                return Err(Error::DomainViolation {
                    coord,
                    index,
                    levels,
                });
            }
        }
        Ok(())
    }

    pub fn embed(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.validate(state)?;
        Ok(self.embed_unchecked(state.indices()))
    }

    pub(crate) fn embed_unchecked(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&k| self.value(k)).collect()
    }

    pub(crate) fn embed_into(&self, indices: &[usize], out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(indices) {
            *o = self.value(k);
        }
    }

    /// Number of states `levels^dim`, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        let l = self.levels() as u128;
        let mut n: u128 = 1;
        for _ in 0..self.dim {
            n = n.saturating_mul(l);
        }
        n
    }

    /// Enumeration order: coordinate 0 is the most significant digit.
    pub fn state_from_index(&self, mut index: usize) -> StateVector {
        let levels = self.levels();
        let mut idx = alloc::vec![0usize; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = index % levels;
            index /= levels;
        }
        StateVector(idx)
    }

    pub fn index_of(&self, state: &StateVector) -> usize {
        self.index_of_slice(state.indices())
    }

    pub fn index_of_slice(&self, indices: &[usize]) -> usize {
        let levels = self.levels();
        indices.iter().fold(0usize, |acc, &k| acc * levels + k)
    }
}

/// One configuration, stored as per-coordinate level indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector(Vec<usize>);

impl StateVector {
    pub fn new(indices: Vec<usize>) -> Self {
        StateVector(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn indices_mut(&mut self) -> &mut [usize] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for StateVector {
    fn from(v: Vec<usize>) -> Self {
        StateVector(v)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str(")")
    }
}

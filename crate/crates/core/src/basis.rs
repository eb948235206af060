//! Truncated plane-wave bases for cell functions.

use crate::lattice::LatticeSpec;
use crate::{Error, Result};

/// All reciprocal vectors `G_m` with `|m_j| <= cutoff`, in lexicographic
/// order of the multi-index `m` (last component fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveBasis {
    lattice: LatticeSpec,
    cutoff: usize,
    indices: Vec<Vec<i32>>,
    vectors: Vec<Vec<f64>>,
}

impl PlaneWaveBasis {
    pub fn new(lattice: &LatticeSpec, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidInput("plane-wave cutoff must be >= 1".into()));
        }
        let d = lattice.dimension();
        let side = 2 * cutoff + 1;
        let m = cutoff as i32;
        let size = side.pow(d as u32);
        let mut indices = Vec::with_capacity(size);
        for flat in 0..size {
            let mut rem = flat;
            let mut idx = vec![0; d];
            for slot in idx.iter_mut().rev() {
                *slot = (rem % side) as i32 - m;
                rem /= side;
            }
            indices.push(idx);
        }
        let vectors = indices.iter().map(|i| lattice.reciprocal_vector(i)).collect();
        Ok(Self {
            lattice: lattice.clone(),
            cutoff,
            indices,
            vectors,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn dimension(&self) -> usize {
        self.lattice.dimension()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<i32>] {
        &self.indices
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Position of multi-index `m` in the basis, if retained.
    pub fn position(&self, m: &[i32]) -> Option<usize> {
        let side = 2 * self.cutoff as i32 + 1;
        let c = self.cutoff as i32;
        let mut flat = 0usize;
        for &mj in m {
            if mj.abs() > c {
                return None;
            }
            flat = flat * side as usize + (mj + c) as usize;
        }
        Some(flat)
    }

    pub fn zero_position(&self) -> usize {
        self.position(&vec![0; self.dimension()]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn one_dimensional_ordering() {
        let lat = LatticeSpec::cubic(1).unwrap();
        let b = PlaneWaveBasis::new(&lat, 2).unwrap();
        let g: Vec<f64> = b.vectors().iter().map(|v| v[0]).collect();
        let want = [-2.0 * TAU, -TAU, 0.0, TAU, 2.0 * TAU];
        for (a, w) in g.iter().zip(want) {
            assert!((a - w).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_size_and_zero() {
        let lat = LatticeSpec::cubic(2).unwrap();
        let b = PlaneWaveBasis::new(&lat, 1).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.indices()[b.zero_position()], vec![0, 0]);
        assert_eq!(b.indices()[0], vec![-1, -1]);
        assert_eq!(b.indices()[1], vec![-1, 0]);
        for (i, m) in b.indices().iter().enumerate() {
            assert_eq!(b.position(m), Some(i));
        }
    }

    #[test]
    fn symmetric_under_negation() {
        let lat = LatticeSpec::cubic(1).unwrap();
        let b = PlaneWaveBasis::new(&lat, 32).unwrap();
        assert_eq!(b.len(), 65);
        let n = b.len();
        for i in 0..n {
            assert_eq!(b.vectors()[i][0], -b.vectors()[n - 1 - i][0]);
        }
    }

    #[test]
    fn zero_cutoff_rejected() {
        let lat = LatticeSpec::cubic(1).unwrap();
        assert!(PlaneWaveBasis::new(&lat, 0).is_err());
    }
}

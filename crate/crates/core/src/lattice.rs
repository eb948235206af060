//! Bravais lattices in one and two dimensions.
//!
//! The elementary cell is the centered parallelepiped spanned by the cell
//! generators with coefficients in `[-1/2, 1/2]`; the Brillouin zone is the
//! analogous cell of the dual lattice. Generators are rescaled on construction
//! so the cell has unit volume, which makes `L^2` normalization of cell
//! functions equivalent to the Euclidean norm of their Fourier coefficients.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct LatticeSpec {
    generators: Vec<Vec<f64>>,
    reciprocal: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    generators: Vec<Vec<f64>>,
}

impl TryFrom<LatticeRepr> for LatticeSpec {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        LatticeSpec::new(r.generators)
    }
}

impl From<LatticeSpec> for LatticeRepr {
    fn from(l: LatticeSpec) -> Self {
        LatticeRepr {
            generators: l.generators,
        }
    }
}

impl LatticeSpec {
    /// Builds a lattice from its cell generators (one per row), rescaled to
    /// unit cell volume.
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let d = generators.len();
        if !(1..=2).contains(&d) {
            return Err(Error::Unsupported(format!("lattice dimension {d}")));
        }
        if generators.iter().any(|g| g.len() != d) {
            return Err(Error::InvalidInput(
                "each generator needs one component per dimension".into(),
            ));
        }
        if generators.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite lattice generator".into()));
        }
        let det = match d {
            1 => generators[0][0],
            _ => generators[0][0] * generators[1][1] - generators[0][1] * generators[1][0],
        };
        let scale_ref = generators
            .iter()
            .flatten()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            .powi(d as i32);
        if det.abs() <= 1e-12 * scale_ref || det == 0.0 {
            return Err(Error::InvalidInput(
                "lattice generators are linearly dependent".into(),
            ));
        }
        let scale = det.abs().powf(-1.0 / d as f64);
        let generators: Vec<Vec<f64>> = generators
            .into_iter()
            .map(|g| g.into_iter().map(|v| v * scale).collect())
            .collect();
        let reciprocal = match d {
            1 => vec![vec![TAU / generators[0][0]]],
            _ => {
                let (a, b) = (generators[0][0], generators[0][1]);
                let (c, e) = (generators[1][0], generators[1][1]);
                let det = a * e - b * c;
                // rows of 2*pi*Z^{-T}
                vec![
                    vec![TAU * e / det, -TAU * c / det],
                    vec![-TAU * b / det, TAU * a / det],
                ]
            }
        };
        Ok(Self {
            generators,
            reciprocal,
        })
    }

    /// The integer lattice `Z^d`.
    pub fn cubic(dimension: usize) -> Result<Self> {
        let generators = (0..dimension)
            .map(|i| (0..dimension).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(generators)
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn reciprocal(&self) -> &[Vec<f64>] {
        &self.reciprocal
    }

    /// True for the unit cubic lattice, the only one compatible with the
    /// square simulation boxes used by the time-dependent solvers.
    pub fn is_cubic(&self) -> bool {
        let d = self.dimension();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (self.generators[i][j] - target).abs() < 1e-14
            })
        })
    }

    /// `sum_j m_j b_j`.
    pub fn reciprocal_vector(&self, m: &[i32]) -> Vec<f64> {
        let d = self.dimension();
        (0..d)
            .map(|c| (0..d).map(|j| m[j] as f64 * self.reciprocal[j][c]).sum())
            .collect()
    }

    /// Point of the elementary cell with lattice coordinates `t`.
    pub fn cell_point(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dimension();
        (0..d)
            .map(|c| (0..d).map(|l| t[l] * self.generators[l][c]).sum())
            .collect()
    }

    /// Coordinates of `k` in the reciprocal basis.
    pub fn reduced_k(&self, k: &[f64]) -> Vec<f64> {
        // k . zeta_l = 2 pi kappa_l
        self.generators
            .iter()
            .map(|z| z.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() / TAU)
            .collect()
    }

    /// Membership in the closed Brillouin zone.
    pub fn contains_k(&self, k: &[f64]) -> bool {
        k.len() == self.dimension() && self.reduced_k(k).iter().all(|c| c.abs() <= 0.5 + 1e-12)
    }

    pub(crate) fn check_k(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: k.len(),
            });
        }
        if !self.contains_k(k) {
            return Err(Error::InvalidInput(format!(
                "quasimomentum {k:?} lies outside the Brillouin zone"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_duality() {
        let lat = LatticeSpec::new(vec![vec![2.0, 0.3], vec![-0.4, 1.1]]).unwrap();
        for (l, z) in lat.generators().iter().enumerate() {
            for (j, b) in lat.reciprocal().iter().enumerate() {
                let dot: f64 = z.iter().zip(b).map(|(a, c)| a * c).sum();
                let want = if l == j { TAU } else { 0.0 };
                assert!((dot - want).abs() < 1e-14, "{dot} vs {want}");
            }
        }
        let g = lat.generators();
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        assert!((det.abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rescales_to_unit_volume() {
        let lat = LatticeSpec::new(vec![vec![0.5]]).unwrap();
        assert!(lat.is_cubic());
        assert!((lat.reciprocal()[0][0] - TAU).abs() < 1e-14);
    }

    #[test]
    fn rejects_dependent_generators() {
        let err = LatticeSpec::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(LatticeSpec::new(vec![vec![1.0, 0.0, 0.0]; 3]).is_err());
    }

    #[test]
    fn brillouin_zone_membership() {
        let lat = LatticeSpec::cubic(1).unwrap();
        assert!(lat.contains_k(&[std::f64::consts::PI]));
        assert!(lat.contains_k(&[-1.0]));
        assert!(!lat.contains_k(&[3.2]));
    }
}

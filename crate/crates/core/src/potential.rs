//! Real periodic cell potentials stored as reciprocal-lattice Fourier data.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;

use crate::lattice::LatticeSpec;
use crate::{Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-14;

/// `V(y) = sum_m V[m] exp(i G_m . y)` with finitely many nonzero `V[m]`.
///
/// Invariant: `V[-m] == conj(V[m])`, so `V` is real-valued.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    dimension: usize,
    coefficients: BTreeMap<Vec<i32>, C64>,
}

impl FourierPotential {
    pub fn zero(dimension: usize) -> Self {
        Self {
            dimension,
            coefficients: BTreeMap::new(),
        }
    }

    /// Validated constructor; exact zeros are dropped.
    pub fn from_coefficients<I>(dimension: usize, coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i32>, C64)>,
    {
        let mut map = BTreeMap::new();
        for (m, v) in coefficients {
            if m.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: m.len(),
                });
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite coefficient at {m:?}")));
            }
            if v != C64::new(0.0, 0.0) {
                *map.entry(m).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        for (m, v) in &map {
            let neg: Vec<i32> = m.iter().map(|x| -x).collect();
            let partner = map.get(&neg).copied().unwrap_or_default();
            let scale = v.norm().max(1.0);
            if (partner - v.conj()).norm() > HERMITIAN_TOL * scale {
                return Err(Error::NonHermitianPotential { index: m.clone() });
            }
        }
        Ok(Self {
            dimension,
            coefficients: map,
        })
    }

    /// `amplitude * sum_l cos(G_{e_l} . y)`; in 1D on the unit lattice this is
    /// `amplitude * cos(2 pi y)`.
    pub fn cosine(dimension: usize, amplitude: f64) -> Self {
        let mut coefficients = BTreeMap::new();
        if amplitude != 0.0 {
            for l in 0..dimension {
                for s in [-1, 1] {
                    let mut m = vec![0; dimension];
                    m[l] = s;
                    coefficients.insert(m, C64::new(0.5 * amplitude, 0.0));
                }
            }
        }
        Self {
            dimension,
            coefficients,
        }
    }

    /// Optical-lattice profile `sum_l depth_l * sin^2(G_{e_l} . y / 2)`, the
    /// standing wave of counter-propagating lasers with one lattice period per
    /// cell.
    pub fn laser(depths: &[f64]) -> Result<Self> {
        let d = depths.len();
        let mut coeffs = Vec::new();
        for (l, &s) in depths.iter().enumerate() {
            // sin^2(u/2) = 1/2 - cos(u)/2
            coeffs.push((vec![0; d], C64::new(0.5 * s, 0.0)));
            for sign in [-1, 1] {
                let mut m = vec![0; d];
                m[l] = sign;
                coeffs.push((m, C64::new(-0.25 * s, 0.0)));
            }
        }
        Self::from_coefficients(d, coeffs)
    }

    /// Random real potential with `|m_j| <= max_index` and every coefficient
    /// of modulus at most `max_modulus`. The mean `V[0]` is real.
    pub fn random<R: Rng + ?Sized>(
        dimension: usize,
        max_index: usize,
        max_modulus: f64,
        rng: &mut R,
    ) -> Self {
        let side = 2 * max_index + 1;
        let total = side.pow(dimension as u32);
        let mut coefficients = BTreeMap::new();
        for flat in 0..total {
            let mut rem = flat;
            let mut m = vec![0i32; dimension];
            for slot in m.iter_mut().rev() {
                *slot = (rem % side) as i32 - max_index as i32;
                rem /= side;
            }
            let neg: Vec<i32> = m.iter().map(|x| -x).collect();
            if coefficients.contains_key(&neg) {
                continue;
            }
            let r = max_modulus * rng.random::<f64>();
            let v = if m == neg {
                C64::new(r * if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
            } else {
                C64::from_polar(r, TAU * rng.random::<f64>())
            };
            coefficients.insert(neg.clone(), v.conj());
            coefficients.insert(m, v);
        }
        Self {
            dimension,
            coefficients,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn coefficient(&self, m: &[i32]) -> C64 {
        self.coefficients.get(m).copied().unwrap_or_default()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Vec<i32>, &C64)> {
        self.coefficients.iter()
    }

    /// Largest `|m_j|` over stored coefficients.
    pub fn support_radius(&self) -> usize {
        self.coefficients
            .keys()
            .flat_map(|m| m.iter().map(|v| v.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// True when `V[m] == V[-m]`, i.e. `V(y) = V(-y)`.
    pub fn is_even(&self) -> bool {
        self.coefficients.iter().all(|(m, v)| {
            let neg: Vec<i32> = m.iter().map(|x| -x).collect();
            (self.coefficient(&neg) - v).norm() <= HERMITIAN_TOL * v.norm().max(1.0)
        })
    }

    /// Pointwise value at `y` (real by construction).
    pub fn eval(&self, lattice: &LatticeSpec, y: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(m, v)| {
                let g = lattice.reciprocal_vector(m);
                let phase: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                (v * C64::from_polar(1.0, phase)).re
            })
            .sum()
    }
}

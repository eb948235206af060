//! Strang splitting shared by the fine and homogenized solvers.
//!
//! One step is `D(dt/2) L(dt) D(dt/2)` where `D` is the pointwise flow of
//! `i psi_t = (w(x) + g |psi|^(2 sigma)) psi` (exact, since it keeps `|psi|`
//! fixed) and `L` is a linear flow diagonal in a Fourier block structure.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::grid::{Grid, Spectral};
use crate::{Error, Result, C64};

/// Fourier-space symbol `(h/2) xi^T M xi` on every mode of `grid`.
pub(crate) fn kinetic_symbol(grid: &Grid, h: f64, mass: &[Vec<f64>]) -> Vec<f64> {
    let d = grid.dimension();
    grid.wave_vectors()
        .iter()
        .map(|xi| {
            let mut q = 0.0;
            for j in 0..d {
                for l in 0..d {
                    q += xi[j] * mass[j][l] * xi[l];
                }
            }
            0.5 * h * q
        })
        .collect()
}

/// Exact propagator of `symbol + c * S`, where `S` is multiplication by a
/// real sequence that repeats every `points/cells` samples per axis.
///
/// Such a product only couples Fourier modes whose indices agree modulo the
/// number of cells, so the generator splits into small Hermitian blocks, one
/// per residue class, each exponentiated once by eigendecomposition.
#[derive(Debug, Clone)]
pub(crate) struct CellBlocks {
    /// Flat Fourier indices of each block's members.
    members: Vec<Vec<usize>>,
    /// Row-major unitary of each block.
    unitaries: Vec<Vec<C64>>,
}

impl CellBlocks {
    pub(crate) fn new(
        grid: &Grid,
        spectral: &Spectral,
        symbol: &[f64],
        samples: &[f64],
        strength: f64,
        cells: usize,
        dt: f64,
    ) -> Result<Self> {
        let n = grid.points();
        if cells == 0 || !n.is_multiple_of(cells) {
            return Err(Error::InvalidInput(format!(
                "{n} grid points do not split into {cells} whole cells"
            )));
        }
        let p = n / cells;
        let d = grid.dimension();
        let mut hat: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
        spectral.forward(&mut hat);
        let scale = 1.0 / grid.len() as f64;
        // coefficient of the lattice harmonic with per-axis index q (0..p)
        let harmonic = |q: &[usize]| -> C64 {
            let flat = q.iter().fold(0, |acc, &qj| acc * n + qj * cells);
            hat[flat] * scale
        };
        let block_len = p.pow(d as u32);
        let residues = cells.pow(d as u32);
        let mut members = Vec::with_capacity(residues);
        let mut unitaries = Vec::with_capacity(residues);
        let split = |flat: usize, base: usize| -> Vec<usize> {
            match d {
                1 => vec![flat],
                _ => vec![flat / base, flat % base],
            }
        };
        for r in 0..residues {
            let rv = split(r, cells);
            let local: Vec<Vec<usize>> = (0..block_len).map(|a| split(a, p)).collect();
            let idx: Vec<usize> = local
                .iter()
                .map(|a| {
                    a.iter()
                        .zip(&rv)
                        .fold(0, |acc, (&aj, &rj)| acc * n + rj + aj * cells)
                })
                .collect();
            let gen = DMatrix::<C64>::from_fn(block_len, block_len, |i, j| {
                let q: Vec<usize> = local[i]
                    .iter()
                    .zip(&local[j])
                    .map(|(&a, &b)| (a + p - b) % p)
                    .collect();
                let mut z = harmonic(&q) * strength;
                if i == j {
                    z += symbol[idx[i]];
                }
                z
            });
            // exact hermitian part; the sampled harmonics are conjugate-symmetric
            let gen = (&gen + gen.adjoint()) * C64::new(0.5, 0.0);
            let eig = SymmetricEigen::try_new(gen, f64::EPSILON, 100_000)
                .ok_or_else(|| Error::EigenSolver("cell block did not converge".into()))?;
            let q = &eig.eigenvectors;
            let phases: Vec<C64> = eig
                .eigenvalues
                .iter()
                .map(|&l| C64::from_polar(1.0, -dt * l))
                .collect();
            let mut u = vec![C64::new(0.0, 0.0); block_len * block_len];
            for i in 0..block_len {
                for j in 0..block_len {
                    let mut s = C64::new(0.0, 0.0);
                    for (k, ph) in phases.iter().enumerate() {
                        s += q[(i, k)] * ph * q[(j, k)].conj();
                    }
                    u[i * block_len + j] = s;
                }
            }
            members.push(idx);
            unitaries.push(u);
        }
        Ok(Self { members, unitaries })
    }

    fn apply(&self, hat: &mut [C64]) {
        let mut buf = Vec::new();
        let mut out = Vec::new();
        for (idx, u) in self.members.iter().zip(&self.unitaries) {
            let m = idx.len();
            buf.clear();
            buf.extend(idx.iter().map(|&i| hat[i]));
            out.clear();
            out.extend(u.chunks_exact(m).map(|row| {
                row.iter().zip(&buf).map(|(a, b)| a * b).sum::<C64>()
            }));
            for (&i, &z) in idx.iter().zip(&out) {
                hat[i] = z;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum LinearFlow {
    /// `exp(-i dt symbol)` per Fourier mode.
    Multiplier(Vec<C64>),
    Blocks(CellBlocks),
}

impl LinearFlow {
    pub(crate) fn multiplier(symbol: &[f64], dt: f64) -> Self {
        Self::Multiplier(symbol.iter().map(|&w| C64::from_polar(1.0, -dt * w)).collect())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Propagator {
    pub(crate) spectral: Spectral,
    /// Static pointwise rate `w(x)`.
    pub(crate) rate: Vec<f64>,
    /// Nonlinear rate `g`.
    pub(crate) coupling: f64,
    pub(crate) sigma: u32,
    pub(crate) linear: LinearFlow,
    pub(crate) dt: f64,
}

impl Propagator {
    fn diagonal(&self, data: &mut [C64], tau: f64) {
        let s = self.sigma as i32;
        for (z, &w) in data.iter_mut().zip(&self.rate) {
            let r = if self.coupling != 0.0 {
                w + self.coupling * z.norm_sqr().powi(s)
            } else {
                w
            };
            *z *= C64::from_polar(1.0, -tau * r);
        }
    }

    pub(crate) fn step(&self, data: &mut [C64]) {
        let half = 0.5 * self.dt;
        self.diagonal(data, half);
        self.spectral.forward(data);
        match &self.linear {
            LinearFlow::Multiplier(m) => {
                for (z, p) in data.iter_mut().zip(m) {
                    *z *= p;
                }
            }
            LinearFlow::Blocks(b) => b.apply(data),
        }
        self.spectral.inverse(data);
        self.diagonal(data, half);
    }
}

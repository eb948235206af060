//! Bloch's spectral cell problem in a plane-wave basis.
//!
//! For a quasimomentum `k` the shifted Hamiltonian
//! `H(k) = 1/2 (-i grad_y + k)^2 + V(y)` acts on periodic cell functions. In
//! the basis `exp(i G_m . y)` it becomes the Hermitian matrix
//! `A[m, m'] = 1/2 |G_m + k|^2 delta_{m m'} + V[m - m']`, which is assembled
//! exactly from the Fourier data of `V`.
//!
//! Inner products are conjugate-linear in the first slot. With unit cell
//! volume, `<f, g> = sum_m conj(f_m) g_m`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::PlaneWaveBasis;
use crate::potential::FourierPotential;
use crate::{Error, Result, C64};

/// Relative gap below which a band is treated as degenerate.
pub const SIMPLE_GAP_TOL: f64 = 1e-8;
const HESSIAN_ASYMMETRY_TOL: f64 = 1e-10;

/// One Bloch wave `chi_n(y, k) = sum_m c_m exp(i G_m . y)`.
///
/// Coefficients are normalized to unit Euclidean norm and the phase is fixed
/// so the coefficient of largest modulus is real and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochEigenpair {
    /// 1-based band index.
    pub band: usize,
    pub k: Vec<f64>,
    pub energy: f64,
    pub coefficients: Vec<C64>,
}

impl BlochEigenpair {
    pub fn eval(&self, basis: &PlaneWaveBasis, y: &[f64]) -> C64 {
        eval_cell(basis, &self.coefficients, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandDerivatives {
    /// `grad_k E_n(k)`, the group velocity.
    pub gradient: Vec<f64>,
    /// `D^2 E_n(k)`, symmetric.
    pub hessian: Vec<Vec<f64>>,
    /// `d chi_n / d k_j` for each `j`, orthogonal to `chi_n`.
    pub dk_chi: Vec<Vec<C64>>,
}

/// Evaluates `sum_m c_m exp(i G_m . y)`.
pub fn eval_cell(basis: &PlaneWaveBasis, coefficients: &[C64], y: &[f64]) -> C64 {
    basis
        .vectors()
        .iter()
        .zip(coefficients)
        .map(|(g, c)| {
            let phase: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
            c * C64::from_polar(1.0, phase)
        })
        .sum()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn assemble_bloch_matrix(
    basis: &PlaneWaveBasis,
    potential: &FourierPotential,
    k: &[f64],
) -> Result<DMatrix<C64>> {
    if potential.dimension() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            found: potential.dimension(),
        });
    }
    basis.lattice().check_k(k)?;
    let n = basis.len();
    let idx = basis.indices();
    let v0 = potential.coefficient(&vec![0; basis.dimension()]).re;
    let mut a = DMatrix::<C64>::zeros(n, n);
    for (i, g) in basis.vectors().iter().enumerate() {
        let kin: f64 = g.iter().zip(k).map(|(gi, ki)| (gi + ki) * (gi + ki)).sum();
        a[(i, i)] = C64::new(0.5 * kin + v0, 0.0);
    }
    let radius = potential.support_radius() as i32;
    if radius > 0 {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let diff: Vec<i32> = idx[i].iter().zip(&idx[j]).map(|(a, b)| a - b).collect();
                if diff.iter().any(|d| d.abs() > radius) {
                    continue;
                }
                a[(i, j)] = potential.coefficient(&diff);
            }
        }
    }
    Ok(a)
}

/// Rotates `c` so its largest-modulus entry is real and positive.
fn fix_gauge(c: &mut [C64]) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, v) in c.iter().enumerate() {
        let m = v.norm();
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod > 0.0 {
        let rot = c[best].conj() / best_mod;
        for v in c.iter_mut() {
            *v *= rot;
        }
        c[best] = C64::new(c[best].re, 0.0);
    }
}

fn eigen_all(matrix: &DMatrix<C64>, k: &[f64]) -> Result<Vec<BlochEigenpair>> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::InvalidInput("Bloch matrix must be square and non-empty".into()));
    }
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigenSolver("Hermitian QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(order
        .iter()
        .enumerate()
        .map(|(rank, &col)| {
            let mut c: Vec<C64> = eig.eigenvectors.column(col).iter().copied().collect();
            let nrm = norm(&c);
            c.iter_mut().for_each(|v| *v /= nrm);
            fix_gauge(&mut c);
            BlochEigenpair {
                band: rank + 1,
                k: k.to_vec(),
                energy: eig.eigenvalues[col],
                coefficients: c,
            }
        })
        .collect())
}

/// The lowest `n_max` eigenpairs of an assembled Bloch matrix, ascending.
pub fn solve_bands(matrix: &DMatrix<C64>, n_max: usize, k: &[f64]) -> Result<Vec<BlochEigenpair>> {
    if n_max == 0 || n_max > matrix.nrows() {
        return Err(Error::InvalidInput(format!(
            "requested {n_max} bands from a {}-dimensional basis",
            matrix.nrows()
        )));
    }
    let mut all = eigen_all(matrix, k)?;
    all.truncate(n_max);
    Ok(all)
}

/// `grad_k E_n = <chi_n, (-i grad_y + k) chi_n>`.
pub fn grad_e(pair: &BlochEigenpair, basis: &PlaneWaveBasis) -> Vec<f64> {
    let d = basis.dimension();
    (0..d)
        .map(|j| {
            let q: C64 = basis
                .vectors()
                .iter()
                .zip(&pair.coefficients)
                .map(|(g, c)| c.conj() * (g[j] + pair.k[j]) * c)
                .sum();
            debug_assert!(q.im.abs() <= 1e-12);
            q.re
        })
        .collect()
}

/// Full eigendecomposition of `H(k)` in the Galerkin space together with the
/// assembled matrix.
#[derive(Debug, Clone)]
pub struct CellSpectrum {
    basis: PlaneWaveBasis,
    k: Vec<f64>,
    matrix: DMatrix<C64>,
    pairs: Vec<BlochEigenpair>,
}

impl CellSpectrum {
    pub fn new(basis: &PlaneWaveBasis, potential: &FourierPotential, k: &[f64]) -> Result<Self> {
        let matrix = assemble_bloch_matrix(basis, potential, k)?;
        let pairs = eigen_all(&matrix, k)?;
        Ok(Self {
            basis: basis.clone(),
            k: k.to_vec(),
            matrix,
            pairs,
        })
    }

    pub fn basis(&self) -> &PlaneWaveBasis {
        &self.basis
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn pairs(&self) -> &[BlochEigenpair] {
        &self.pairs
    }

    pub fn energies(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }

    /// Eigenpair of 1-based band `n`.
    pub fn pair(&self, n: usize) -> Result<&BlochEigenpair> {
        if n == 0 || n > self.pairs.len() {
            return Err(Error::InvalidInput(format!(
                "band {n} outside 1..={}",
                self.pairs.len()
            )));
        }
        Ok(&self.pairs[n - 1])
    }

    /// Relative distance of `E_n` to its neighbouring bands.
    pub fn relative_gap(&self, n: usize) -> Result<f64> {
        let e = self.pair(n)?.energy;
        let mut gap = f64::INFINITY;
        if n > 1 {
            gap = gap.min((e - self.pairs[n - 2].energy).abs());
        }
        if n < self.pairs.len() {
            gap = gap.min((self.pairs[n].energy - e).abs());
        }
        Ok(gap / e.abs().max(1.0))
    }

    pub fn check_simple(&self, n: usize) -> Result<()> {
        let gap = self.relative_gap(n)?;
        if gap < SIMPLE_GAP_TOL {
            return Err(Error::DegenerateBand { band: n, gap });
        }
        Ok(())
    }

    /// Applies `H(k)` to a coefficient vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.matrix * x).iter().copied().collect()
    }

    /// `(-i d/dy_j + k_j) v` in coefficient space.
    pub fn momentum(&self, j: usize, v: &[C64]) -> Vec<C64> {
        self.basis
            .vectors()
            .iter()
            .zip(v)
            .map(|(g, c)| c * (g[j] + self.k[j]))
            .collect()
    }

    pub fn derivatives(&self, n: usize) -> Result<BandDerivatives> {
        let gradient = grad_e(self.pair(n)?, &self.basis);
        let dk = dk_chi(self, n)?;
        let hessian = hessian_e(self, n, &gradient, &dk)?;
        Ok(BandDerivatives {
            gradient,
            hessian,
            dk_chi: dk,
        })
    }
}

/// `d chi_n / d k_j` in the gauge `<chi_n, d chi_n / d k_j> = 0`.
///
/// Solves `(H(k) - E_n) x = -(P_j - dE_n/dk_j) chi_n` with `x` orthogonal to
/// `chi_n` through the bordered system
/// `[[H - E_n, c], [c^*, 0]] [x; lambda] = [rhs; 0]`.
pub fn dk_chi(spectrum: &CellSpectrum, n: usize) -> Result<Vec<Vec<C64>>> {
    spectrum.check_simple(n)?;
    let pair = spectrum.pair(n)?;
    let c = &pair.coefficients;
    let grad = grad_e(pair, &spectrum.basis);
    let size = c.len();
    let mut bordered = DMatrix::<C64>::zeros(size + 1, size + 1);
    bordered
        .view_mut((0, 0), (size, size))
        .copy_from(&spectrum.matrix);
    for i in 0..size {
        bordered[(i, i)] -= pair.energy;
        bordered[(i, size)] = c[i];
        bordered[(size, i)] = c[i].conj();
    }
    let lu = bordered.lu();
    let d = spectrum.basis.dimension();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let pc = spectrum.momentum(j, c);
        let mut rhs = DVector::<C64>::zeros(size + 1);
        for i in 0..size {
            rhs[i] = -(pc[i] - grad[j] * c[i]);
        }
        let sol = lu
            .solve(&rhs)
            .ok_or(Error::DegenerateBand { band: n, gap: 0.0 })?;
        let mut x: Vec<C64> = sol.iter().take(size).copied().collect();
        // one projection sweep removes the roundoff component along chi_n
        let overlap = inner(c, &x);
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi -= overlap * ci;
        }
        out.push(x);
    }
    Ok(out)
}

/// `D^2 E_n(k)` from first-order Bloch-wave derivatives:
/// `d^2 E / dk_j dk_l = delta_jl + 2 Re <chi_n, (P_l - dE/dk_l) d chi_n/dk_j>`.
pub fn hessian_e(
    spectrum: &CellSpectrum,
    n: usize,
    gradient: &[f64],
    dk: &[Vec<C64>],
) -> Result<Vec<Vec<f64>>> {
    let c = &spectrum.pair(n)?.coefficients;
    let d = spectrum.basis.dimension();
    let mut h = vec![vec![0.0; d]; d];
    for (l, row) in h.iter_mut().enumerate() {
        let pc = spectrum.momentum(l, c);
        for (j, entry) in row.iter_mut().enumerate() {
            let cross: C64 = pc
                .iter()
                .zip(c)
                .zip(&dk[j])
                .map(|((p, ci), x)| (p - gradient[l] * ci).conj() * x)
                .sum();
            *entry = if j == l { 1.0 } else { 0.0 } + 2.0 * cross.re;
        }
    }
    let asym = (0..d)
        .flat_map(|j| (0..d).map(move |l| (j, l)))
        .map(|(j, l)| (h[j][l] - h[l][j]).abs())
        .fold(0.0, f64::max);
    if asym > HESSIAN_ASYMMETRY_TOL {
        return Err(Error::AsymmetricHessian(asym));
    }
    for j in 0..d {
        for l in (j + 1)..d {
            let s = 0.5 * (h[j][l] + h[l][j]);
            h[j][l] = s;
            h[l][j] = s;
        }
    }
    Ok(h)
}

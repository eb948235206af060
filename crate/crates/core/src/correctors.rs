//! Multiple-scales correctors and well-prepared initial data.
//!
//! A corrector `u_j(x, y)` is stored as a finite sum of products of a slow
//! envelope on the macroscopic grid and a cell function in the plane-wave
//! basis. With `eta_j = d chi / d k_j`, `P_l = -i d/dy_l + k_l`, `omega` the
//! group velocity and `R = (H - E)^{-1} Q` the reduced resolvent,
//!
//! ```text
//! u_0 = f chi
//! u_1 = -i sum_j (d_j f) eta_j
//! u_2 = sum_{j,l} (d_j d_l f) R[(P_l - omega_l) eta_j] - (kappa / h^2) |f|^(2 sigma) f R[|chi|^(2 sigma) chi]
//! ```
//!
//! The polarized parts (multiples of `chi` in `u_1`, `u_2`) are taken to be
//! zero. The time derivative of `f` only enters `u_2` along `chi`, where `Q`
//! removes it, so no time stepping is needed to assemble `u_2`.

use std::f64::consts::TAU;

use crate::bands::{eval_cell, inner, CellSpectrum};
use crate::basis::PlaneWaveBasis;
use crate::effective::EffectiveModel;
use crate::fine::sample_cell_function;
use crate::grid::{interpolate_shifted, Grid, Spectral, WaveField};
use crate::{Error, Result, C64};

/// Highest corrector order that is assembled.
pub const MAX_ORDER: usize = 2;
/// Envelope amplitude on the box boundary above which a frame shift wraps
/// visible mass around the box.
pub const WRAP_TOL: f64 = 1e-10;

/// `u` with `(H - E_n) u = Q_n rhs` and `<chi_n, u> = 0`, summed over the full
/// eigenbasis of the Galerkin matrix.
pub fn fredholm_solve(spectrum: &CellSpectrum, n: usize, rhs: &[C64]) -> Result<Vec<C64>> {
    let target = spectrum.pair(n)?;
    if rhs.len() != target.coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: target.coefficients.len(),
            found: rhs.len(),
        });
    }
    let mut u = vec![C64::new(0.0, 0.0); rhs.len()];
    for pair in spectrum.pairs() {
        if pair.band == n {
            continue;
        }
        let gap = pair.energy - target.energy;
        if gap.abs() < crate::bands::SIMPLE_GAP_TOL {
            return Err(Error::DegenerateBand { band: n, gap: gap.abs() });
        }
        let w = inner(&pair.coefficients, rhs) / gap;
        for (ui, ci) in u.iter_mut().zip(&pair.coefficients) {
            *ui += w * ci;
        }
    }
    Ok(u)
}

/// Plane-wave coefficients of `|chi|^(2 sigma) chi`, exact for every retained
/// index (sampling density avoids aliasing).
pub fn nonlinear_cell_coefficients(
    basis: &PlaneWaveBasis,
    chi: &[C64],
    sigma: u32,
) -> Vec<C64> {
    let d = basis.dimension();
    let q = 2 * (sigma as usize + 1) * basis.cutoff() + 2;
    let total = q.pow(d as u32);
    let lattice = basis.lattice();
    let mut samples = Vec::with_capacity(total);
    let mut t = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for slot in t.iter_mut().rev() {
            *slot = (rem % q) as f64 / q as f64 - 0.5;
            rem /= q;
        }
        let z = eval_cell(basis, chi, &lattice.cell_point(&t));
        samples.push((t.clone(), z * z.norm_sqr().powi(sigma as i32)));
    }
    basis
        .indices()
        .iter()
        .map(|m| {
            samples
                .iter()
                .map(|(t, z)| {
                    let phase: f64 = m.iter().zip(t).map(|(&mj, tj)| mj as f64 * tj).sum();
                    z * C64::from_polar(1.0, -TAU * phase)
                })
                .sum::<C64>()
                / total as f64
        })
        .collect()
}

/// All `eps`-independent cell data needed for correctors of one band.
#[derive(Debug, Clone)]
pub struct CellCorrectors {
    pub basis: PlaneWaveBasis,
    pub k0: Vec<f64>,
    pub chi: Vec<C64>,
    /// `eta_j`.
    pub dk_chi: Vec<Vec<C64>>,
    /// `R[(P_l - omega_l) eta_j]` at `[j][l]`.
    pub second: Vec<Vec<Vec<C64>>>,
    /// `R[|chi|^(2 sigma) chi]`.
    pub nonlinear: Vec<C64>,
    /// `-kappa / h^2`.
    pub nonlinear_weight: f64,
    pub sigma: u32,
}

impl CellCorrectors {
    pub fn new(spectrum: &CellSpectrum, model: &EffectiveModel) -> Result<Self> {
        let n = model.band;
        spectrum.check_simple(n)?;
        let chi = spectrum.pair(n)?.coefficients.clone();
        let derivs = spectrum.derivatives(n)?;
        let d = spectrum.basis().dimension();
        let mut second = Vec::with_capacity(d);
        for eta in &derivs.dk_chi {
            let mut row = Vec::with_capacity(d);
            for l in 0..d {
                let rhs: Vec<C64> = spectrum
                    .momentum(l, eta)
                    .iter()
                    .zip(eta)
                    .map(|(p, e)| p - model.omega[l] * e)
                    .collect();
                row.push(fredholm_solve(spectrum, n, &rhs)?);
            }
            second.push(row);
        }
        let nl = nonlinear_cell_coefficients(spectrum.basis(), &chi, model.sigma);
        Ok(Self {
            basis: spectrum.basis().clone(),
            k0: spectrum.k().to_vec(),
            nonlinear: fredholm_solve(spectrum, n, &nl)?,
            chi,
            dk_chi: derivs.dk_chi,
            second,
            nonlinear_weight: -model.kappa / (model.h * model.h),
            sigma: model.sigma,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorTerm {
    pub envelope: WaveField,
    pub cell: Vec<C64>,
}

fn scaled(f: &WaveField, data: Vec<C64>) -> WaveField {
    WaveField {
        grid: f.grid,
        eps: 0.0,
        data,
    }
}

/// `u_1 = -i grad f . grad_k chi` as one term per axis.
pub fn build_corrector_u1(f: &WaveField, dk_chi: &[Vec<C64>]) -> Result<Vec<CorrectorTerm>> {
    if dk_chi.len() != f.grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.grid.dimension(),
            found: dk_chi.len(),
        });
    }
    let sp = Spectral::new(f.grid);
    Ok(dk_chi
        .iter()
        .enumerate()
        .map(|(j, eta)| {
            let g = sp.derivative(&f.data, j);
            CorrectorTerm {
                envelope: scaled(f, g.iter().map(|z| z * C64::new(0.0, -1.0)).collect()),
                cell: eta.clone(),
            }
        })
        .collect())
}

/// Orthogonal part of `u_2`.
pub fn build_corrector_u2(f: &WaveField, cells: &CellCorrectors) -> Vec<CorrectorTerm> {
    let sp = Spectral::new(f.grid);
    let d = f.grid.dimension();
    let mut terms = Vec::with_capacity(d * d + 1);
    for j in 0..d {
        for l in 0..d {
            terms.push(CorrectorTerm {
                envelope: scaled(f, sp.second_derivative(&f.data, j, l)),
                cell: cells.second[j][l].clone(),
            });
        }
    }
    let s = cells.sigma as i32;
    let w = cells.nonlinear_weight;
    terms.push(CorrectorTerm {
        envelope: scaled(f, f.data.iter().map(|z| z * z.norm_sqr().powi(s) * w).collect()),
        cell: cells.nonlinear.clone(),
    });
    terms
}

/// `u_0, ..., u_K` for envelope `f` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSet {
    pub order: usize,
    pub basis: PlaneWaveBasis,
    pub k0: Vec<f64>,
    /// `terms[j]` holds the products making up `u_j`.
    pub terms: Vec<Vec<CorrectorTerm>>,
}

/// Result of evaluating a corrector set on a fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub data: Vec<C64>,
    /// The shifted envelope is not negligible where the box wraps.
    pub frame_wrap: bool,
}

impl CorrectorSet {
    pub fn build(f: &WaveField, cells: &CellCorrectors, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Unsupported(format!(
                "corrector order {order} (at most {MAX_ORDER})"
            )));
        }
        if f.grid.dimension() != cells.basis.dimension() {
            return Err(Error::DimensionMismatch {
                expected: cells.basis.dimension(),
                found: f.grid.dimension(),
            });
        }
        let mut terms = vec![vec![CorrectorTerm {
            envelope: scaled(f, f.data.clone()),
            cell: cells.chi.clone(),
        }]];
        if order >= 1 {
            terms.push(build_corrector_u1(f, &cells.dk_chi)?);
        }
        if order >= 2 {
            terms.push(build_corrector_u2(f, cells));
        }
        Ok(Self {
            order,
            basis: cells.basis.clone(),
            k0: cells.k0.clone(),
            terms,
        })
    }

    /// `sum_{j <= max_order} eps^j u_j(x - shift, x / eps) exp(i k0 . x / eps)`
    /// on `grid`. Envelopes wrap periodically under the shift; the carrier
    /// phase follows the periodic image the envelope came from, as it does
    /// for the periodized whole-space solution.
    pub fn evaluate(
        &self,
        grid: Grid,
        eps: f64,
        max_order: usize,
        shift: &[f64],
    ) -> Result<Evaluated> {
        if max_order > self.order {
            return Err(Error::InvalidInput(format!(
                "order {max_order} requested from a set of order {}",
                self.order
            )));
        }
        grid.cells_per_axis(eps)?;
        let d = grid.dimension();
        if shift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shift.len(),
            });
        }
        let mut data = vec![C64::new(0.0, 0.0); grid.len()];
        let mut frame_wrap = false;
        // a roundoff-sized drift (omega ~ 1e-18 at a band extremum) moves nothing
        let shifted = shift.iter().any(|&s| s.abs() > 1e-12 * grid.length());
        let mut weight = 1.0;
        for terms in self.terms.iter().take(max_order + 1) {
            for term in terms {
                let env = &term.envelope;
                frame_wrap |= shifted && touches_boundary(env);
                let sp = Spectral::new(env.grid);
                let slow = interpolate_shifted(env, &sp, grid, shift)?;
                let fast = sample_cell_function(&grid, eps, |y| eval_cell(&self.basis, &term.cell, y));
                for ((out, a), b) in data.iter_mut().zip(&slow).zip(&fast) {
                    *out += a * b * weight;
                }
            }
            weight *= eps;
        }
        let x_len = grid.length();
        for (flat, z) in data.iter_mut().enumerate() {
            let idx = grid.unflatten(flat);
            let mut phase = 0.0;
            for j in 0..d {
                let x = -0.5 * x_len + idx[j] as f64 * grid.spacing();
                let image = -((x - shift[j] + 0.5 * x_len) / x_len).floor();
                phase += self.k0[j] * (x + image * x_len) / eps;
            }
            *z *= C64::from_polar(1.0, phase);
        }
        Ok(Evaluated { data, frame_wrap })
    }
}

/// True when the field exceeds [`WRAP_TOL`] on the outermost samples.
pub fn touches_boundary(f: &WaveField) -> bool {
    let n = f.grid.points();
    (0..f.grid.len()).any(|flat| {
        f.grid
            .unflatten(flat)
            .iter()
            .any(|&i| i == 0 || i == n - 1)
            && f.data[flat].norm() > WRAP_TOL
    })
}

/// Well-prepared data `psi_I` of order `order` on `grid`, normalized to unit
/// discrete mass.
pub fn build_initial_data(
    f_i: &WaveField,
    model: &EffectiveModel,
    spectrum: &CellSpectrum,
    order: usize,
    eps: f64,
    grid: Grid,
) -> Result<WaveField> {
    let cells = CellCorrectors::new(spectrum, model)?;
    let set = CorrectorSet::build(f_i, &cells, order)?;
    let ev = set.evaluate(grid, eps, order, &vec![0.0; grid.dimension()])?;
    let mut psi = WaveField::new(grid, eps, ev.data)?;
    psi.normalize()?;
    Ok(psi)
}

//! Constants of the homogenized (effective-mass) NLS for one Bloch band.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bands::{eval_cell, BandDerivatives, BlochEigenpair, CellSpectrum};
use crate::basis::PlaneWaveBasis;
use crate::{Error, Result};

/// Smallest eigenvalue a mass tensor needs to count as elliptic.
pub const ELLIPTICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub band: usize,
    pub k0: Vec<f64>,
    /// `E_n(k0)`.
    pub energy: f64,
    /// Carrier frequency `-h E_n(k0)`.
    pub beta: f64,
    /// Group velocity `grad_k E_n(k0)`; the envelope drifts with speed `h omega / eps`.
    pub omega: Vec<f64>,
    /// `D^2 E_n(k0)`.
    pub mass_tensor: Vec<Vec<f64>>,
    pub kappa: f64,
    /// `kappa * int_cell |chi_n|^(2 sigma + 2)`.
    pub kappa_star: f64,
    pub sigma: u32,
    pub h: f64,
    pub elliptic: bool,
    /// Smallest eigenvalue of the mass tensor.
    pub ellipticity_constant: f64,
}

/// `int_cell |chi|^p dy` by the rectangle rule on `points^d` nodes, which is
/// exact for trigonometric polynomials of degree below `points`.
pub fn cell_power_integral(
    basis: &PlaneWaveBasis,
    coefficients: &[crate::C64],
    exponent: f64,
    points: usize,
) -> f64 {
    let d = basis.dimension();
    let lattice = basis.lattice();
    let total = points.pow(d as u32);
    let mut sum = 0.0;
    let mut t = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for slot in t.iter_mut().rev() {
            *slot = (rem % points) as f64 / points as f64 - 0.5;
            rem /= points;
        }
        let y = lattice.cell_point(&t);
        sum += eval_cell(basis, coefficients, &y).norm().powf(exponent);
    }
    sum / total as f64
}

pub fn build_effective_model(
    pair: &BlochEigenpair,
    derivatives: &BandDerivatives,
    basis: &PlaneWaveBasis,
    kappa: f64,
    sigma: u32,
    h: f64,
    quadrature_points: usize,
) -> Result<EffectiveModel> {
    if sigma == 0 {
        return Err(Error::InvalidInput("nonlinearity exponent sigma must be >= 1".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("h = {h} must be positive")));
    }
    if !kappa.is_finite() {
        return Err(Error::InvalidInput("kappa must be finite".into()));
    }
    let min_points = 4 * basis.cutoff() + 4;
    if quadrature_points < min_points {
        return Err(Error::InvalidInput(format!(
            "{quadrature_points} quadrature points per axis, need at least {min_points}"
        )));
    }
    let exponent = 2.0 * sigma as f64 + 2.0;
    let integral = cell_power_integral(basis, &pair.coefficients, exponent, quadrature_points);
    let (elliptic, c) = check_ellipticity(&derivatives.hessian)?;
    Ok(EffectiveModel {
        band: pair.band,
        k0: pair.k.clone(),
        energy: pair.energy,
        beta: -h * pair.energy,
        omega: derivatives.gradient.clone(),
        mass_tensor: derivatives.hessian.clone(),
        kappa,
        kappa_star: kappa * integral,
        sigma,
        h,
        elliptic,
        ellipticity_constant: c,
    })
}

impl EffectiveModel {
    /// Solves the cell problem at `k0` and packages band `n`.
    pub fn from_spectrum(
        spectrum: &CellSpectrum,
        n: usize,
        kappa: f64,
        sigma: u32,
        h: f64,
        quadrature_points: usize,
    ) -> Result<Self> {
        let derivatives = spectrum.derivatives(n)?;
        build_effective_model(
            spectrum.pair(n)?,
            &derivatives,
            spectrum.basis(),
            kappa,
            sigma,
            h,
            quadrature_points,
        )
    }

    pub fn dimension(&self) -> usize {
        self.k0.len()
    }

    /// True when `k0` is a critical point of the band, i.e. no drift.
    pub fn is_critical(&self, tol: f64) -> bool {
        self.omega.iter().all(|w| w.abs() <= tol)
    }
}

/// Whether `xi^T M xi >= C |xi|^2` with `C > 0`; returns the smallest
/// eigenvalue of `M` as the certificate `C`.
pub fn check_ellipticity(mass: &[Vec<f64>]) -> Result<(bool, f64)> {
    let d = mass.len();
    if d == 0 || mass.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("mass tensor must be square".into()));
    }
    let m = DMatrix::from_fn(d, d, |i, j| mass[i][j]);
    let c = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    Ok((c > ELLIPTICITY_TOL, c))
}

//! Split-step solver for the homogenized envelope equation
//!
//! `i h f_t = -(h^2/2) div(M* grad f) + U f + kappa* |f|^(2 sigma) f`.

use crate::effective::EffectiveModel;
use crate::fine::{run, EvolveOptions, ExternalPotential, Trajectory};
use crate::grid::{Grid, Spectral, WaveField};
use crate::split::{kinetic_symbol, LinearFlow, Propagator};
use crate::{Error, Result};

/// Advances envelope fields with a fixed step. The Fourier symbol
/// `(h/2) xi^T M* xi` is used as is, so indefinite tensors are accepted.
#[derive(Debug, Clone)]
pub struct EffectiveSolver {
    prop: Propagator,
    grid: Grid,
}

impl EffectiveSolver {
    pub fn new(
        grid: Grid,
        model: &EffectiveModel,
        external: &ExternalPotential,
        dt: f64,
    ) -> Result<Self> {
        let d = grid.dimension();
        if model.dimension() != d || model.mass_tensor.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: model.dimension(),
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        let m = &model.mass_tensor;
        for j in 0..d {
            for l in 0..d {
                if (m[j][l] - m[l][j]).abs() > 1e-12 {
                    return Err(Error::InvalidInput("mass tensor is not symmetric".into()));
                }
            }
        }
        let h = model.h;
        let symbol = kinetic_symbol(&grid, h, m);
        let rate = external.sample(&grid)?.iter().map(|u| u / h).collect();
        Ok(Self {
            prop: Propagator {
                spectral: Spectral::new(grid),
                rate,
                coupling: model.kappa_star / h,
                sigma: model.sigma,
                linear: LinearFlow::multiplier(&symbol, dt),
                dt,
            },
            grid,
        })
    }

    pub fn dt(&self) -> f64 {
        self.prop.dt
    }

    pub fn step(&self, f: &mut WaveField) -> Result<()> {
        if !self.grid.same_as(&f.grid) {
            return Err(Error::GridMismatch(format!(
                "solver grid {:?}, field grid {:?}",
                self.grid, f.grid
            )));
        }
        self.prop.step(&mut f.data);
        Ok(())
    }
}

pub fn strang_step_effective(
    f: &WaveField,
    model: &EffectiveModel,
    external: &ExternalPotential,
    dt: f64,
) -> Result<WaveField> {
    let mut out = f.clone();
    EffectiveSolver::new(f.grid, model, external, dt)?.step(&mut out)?;
    Ok(out)
}

pub fn evolve_effective(
    f0: &WaveField,
    model: &EffectiveModel,
    external: &ExternalPotential,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let solver = EffectiveSolver::new(f0.grid, model, external, opts.effective_dt()?)?;
    let mut start = f0.clone();
    start.eps = 0.0;
    run(&start, opts, |f| solver.prop.step(&mut f.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn model(mass: Vec<Vec<f64>>, kappa_star: f64) -> EffectiveModel {
        let d = mass.len();
        EffectiveModel {
            band: 1,
            k0: vec![0.0; d],
            energy: 0.0,
            beta: 0.0,
            omega: vec![0.0; d],
            mass_tensor: mass,
            kappa: kappa_star,
            kappa_star,
            sigma: 1,
            h: 1.0,
            elliptic: true,
            ellipticity_constant: 1.0,
        }
    }

    #[test]
    fn plane_wave_phase_with_anisotropic_mass() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let m = model(vec![vec![2.0, 0.3], vec![0.3, 0.5]], 0.0);
        let xi = [std::f64::consts::TAU / 4.0 * 2.0, -std::f64::consts::TAU / 4.0];
        let f = WaveField::from_fn(g, 0.0, |x| C64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1]))
            .unwrap();
        let dt = 0.02;
        let out = strang_step_effective(&f, &m, &ExternalPotential::Zero, dt).unwrap();
        let q = 2.0 * xi[0] * xi[0] + 2.0 * 0.3 * xi[0] * xi[1] + 0.5 * xi[1] * xi[1];
        let ph = C64::from_polar(1.0, -0.5 * q * dt);
        for (a, b) in out.data.iter().zip(&f.data) {
            assert!((a - b * ph).norm() < 1e-12);
        }
    }

    #[test]
    fn indefinite_mass_still_runs() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let m = model(vec![vec![1.0, 0.0], vec![0.0, -1.0]], 1.0);
        let f = WaveField::gaussian(g, 1.0).unwrap();
        let tr = evolve_effective(&f, &m, &ExternalPotential::Zero, &EvolveOptions::new(0.1, 1e-3, 50))
            .unwrap();
        assert!(tr.max_mass_error() < 1e-12);
        assert_eq!(tr.snapshots.len(), 3);
    }

    #[test]
    fn asymmetric_mass_rejected() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let m = model(vec![vec![1.0, 0.2], vec![0.0, 1.0]], 0.0);
        assert!(EffectiveSolver::new(g, &m, &ExternalPotential::Zero, 1e-3).is_err());
    }
}

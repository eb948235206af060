//! Split-step solver for the fine-scale equation
//!
//! `i h psi_t = -(h^2/2) lap psi + (h^2/eps^2) V(x/eps) psi + U psi + kappa |psi|^(2 sigma) psi`
//!
//! on a periodic box holding a whole number of lattice cells.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Spectral, WaveField};
use crate::lattice::LatticeSpec;
use crate::potential::FourierPotential;
use crate::split::{kinetic_symbol, CellBlocks, LinearFlow, Propagator};
use crate::{Error, Result};

/// Minimum number of grid points per lattice cell and axis.
pub const MIN_POINTS_PER_CELL: usize = 16;
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub eps: f64,
    pub h: f64,
    pub kappa: f64,
    pub sigma: u32,
}

impl ScaleParams {
    pub fn new(eps: f64, h: f64, kappa: f64, sigma: u32) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1]")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("h = {h} must be positive")));
        }
        if !kappa.is_finite() || sigma == 0 {
            return Err(Error::InvalidInput("need finite kappa and sigma >= 1".into()));
        }
        Ok(Self {
            eps,
            h,
            kappa,
            sigma,
        })
    }

    /// Checks commensurability and that every cell gets at least
    /// [`MIN_POINTS_PER_CELL`] samples per axis.
    pub fn check_grid(&self, grid: &Grid) -> Result<usize> {
        let cells = grid.cells_per_axis(self.eps)?;
        let per_cell = grid.points() as f64 * self.eps / grid.length();
        if per_cell + 1e-9 < MIN_POINTS_PER_CELL as f64 {
            return Err(Error::Resolution {
                points_per_cell: per_cell,
                required: MIN_POINTS_PER_CELL,
            });
        }
        Ok(cells)
    }
}

/// Slowly varying external potential `U`. Growing profiles are multiplied by
/// a smooth plateau cutoff equal to one on `|x_j| <= window` and vanishing at
/// the box edge, so their periodic continuation stays smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExternalPotential {
    #[default]
    Zero,
    /// `omega0^2 |x|^2 / 2`.
    Harmonic { omega0: f64, window: f64 },
    /// `field . x`.
    Linear { field: Vec<f64>, window: f64 },
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// `1` on `[-window, window]`, smoothly decaying to `0` at `+-half`.
pub fn plateau(x: f64, window: f64, half: f64) -> f64 {
    smooth_step((half - x.abs()) / (half - window))
}

impl ExternalPotential {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let half = 0.5 * grid.length();
        let cutoff = |x: &[f64], window: f64| -> f64 {
            x.iter().map(|&xj| plateau(xj, window, half)).product()
        };
        let check = |window: f64| -> Result<()> {
            if !(window > 0.0 && window < half) {
                return Err(Error::InvalidInput(format!(
                    "window {window} must lie in (0, {half})"
                )));
            }
            Ok(())
        };
        let coords = grid.coordinates();
        match self {
            Self::Zero => Ok(vec![0.0; grid.len()]),
            Self::Harmonic { omega0, window } => {
                check(*window)?;
                Ok(coords
                    .iter()
                    .map(|x| {
                        let r2: f64 = x.iter().map(|v| v * v).sum();
                        0.5 * omega0 * omega0 * r2 * cutoff(x, *window)
                    })
                    .collect())
            }
            Self::Linear { field, window } => {
                check(*window)?;
                if field.len() != grid.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.dimension(),
                        found: field.len(),
                    });
                }
                Ok(coords
                    .iter()
                    .map(|x| {
                        let e: f64 = field.iter().zip(x).map(|(a, b)| a * b).sum();
                        e * cutoff(x, *window)
                    })
                    .collect())
            }
        }
    }
}

/// How the stiff linear part is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    /// Cell potential in the pointwise sub-flow, kinetic part as a Fourier
    /// multiplier: two FFTs per step.
    Fourier,
    /// Kinetic part and cell potential advanced together exactly through the
    /// residue-class block structure of the periodic grid; only `U` and the
    /// nonlinearity are split off. Removes the splitting error of the stiff
    /// `1/eps^2` term.
    #[default]
    CellExact,
}

/// Samples `g(x / eps)` on `grid` for an `eps`-periodic cell function. When
/// a cell holds a whole number of samples the values repeat and only one
/// cell is evaluated.
pub fn sample_cell_function<F: Fn(&[f64]) -> T, T: Copy>(grid: &Grid, eps: f64, g: F) -> Vec<T> {
    let n = grid.points();
    let axis = grid.axis();
    let ratio = n as f64 * eps / grid.length();
    let per_cell = ratio.round() as usize;
    let tiled = per_cell >= 1 && (ratio - per_cell as f64).abs() < 1e-9 && n.is_multiple_of(per_cell);
    let period = if tiled { per_cell } else { n };
    let d = grid.dimension();
    let block = period.pow(d as u32);
    let mut cell = Vec::with_capacity(block);
    for f in 0..block {
        let y: Vec<f64> = match d {
            1 => vec![axis[f] / eps],
            _ => vec![axis[f / period] / eps, axis[f % period] / eps],
        };
        cell.push(g(&y));
    }
    (0..grid.len())
        .map(|f| {
            let idx = grid.unflatten(f);
            let local = idx.iter().fold(0, |acc, &i| acc * period + i % period);
            cell[local]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FineProblem {
    pub grid: Grid,
    pub params: ScaleParams,
    pub lattice: LatticeSpec,
    pub potential: FourierPotential,
    pub external: ExternalPotential,
}

impl FineProblem {
    pub fn new(
        grid: Grid,
        params: ScaleParams,
        lattice: LatticeSpec,
        potential: FourierPotential,
        external: ExternalPotential,
    ) -> Result<Self> {
        if lattice.dimension() != grid.dimension() || potential.dimension() != grid.dimension() {
            return Err(Error::DimensionMismatch {
                expected: grid.dimension(),
                found: potential.dimension(),
            });
        }
        if !lattice.is_cubic() {
            return Err(Error::Unsupported(
                "time evolution needs the unit cubic lattice to tile the box".into(),
            ));
        }
        params.check_grid(&grid)?;
        Ok(Self {
            grid,
            params,
            lattice,
            potential,
            external,
        })
    }

    /// `V(x / eps)` at every grid point, by exact Fourier summation.
    pub fn cell_potential_samples(&self) -> Vec<f64> {
        sample_cell_function(&self.grid, self.params.eps, |y| {
            self.potential.eval(&self.lattice, y)
        })
    }
}

/// Advances fine fields with a fixed step.
#[derive(Debug, Clone)]
pub struct FineSolver {
    prop: Propagator,
    grid: Grid,
    eps: f64,
}

impl FineSolver {
    pub fn new(problem: &FineProblem, dt: f64, scheme: SplitScheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        let grid = problem.grid;
        let p = &problem.params;
        let spectral = Spectral::new(grid);
        let d = grid.dimension();
        let identity: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let symbol = kinetic_symbol(&grid, p.h, &identity);
        let v = problem.cell_potential_samples();
        let u = problem.external.sample(&grid)?;
        let stiff = p.h / (p.eps * p.eps);
        let (rate, linear) = match scheme {
            SplitScheme::Fourier => {
                let rate = v.iter().zip(&u).map(|(vi, ui)| stiff * vi + ui / p.h).collect();
                (rate, LinearFlow::multiplier(&symbol, dt))
            }
            SplitScheme::CellExact => {
                let cells = grid.cells_per_axis(p.eps)?;
                let blocks = CellBlocks::new(&grid, &spectral, &symbol, &v, stiff, cells, dt)?;
                let rate = u.iter().map(|ui| ui / p.h).collect();
                (rate, LinearFlow::Blocks(blocks))
            }
        };
        Ok(Self {
            prop: Propagator {
                spectral,
                rate,
                coupling: p.kappa / p.h,
                sigma: p.sigma,
                linear,
                dt,
            },
            grid,
            eps: p.eps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.prop.dt
    }

    pub fn step(&self, psi: &mut WaveField) -> Result<()> {
        if !self.grid.same_as(&psi.grid) {
            return Err(Error::GridMismatch(format!(
                "solver grid {:?}, field grid {:?}",
                self.grid, psi.grid
            )));
        }
        psi.eps = self.eps;
        self.prop.step(&mut psi.data);
        Ok(())
    }
}

/// One Strang step of the fine equation.
pub fn strang_step_fine(
    psi: &WaveField,
    problem: &FineProblem,
    dt: f64,
    scheme: SplitScheme,
) -> Result<WaveField> {
    let mut out = psi.clone();
    FineSolver::new(problem, dt, scheme)?.step(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub t_final: f64,
    /// Requested step; shortened so a whole number of steps reaches `t_final`.
    pub dt: f64,
    /// Steps between stored snapshots; the final state is always stored.
    pub stride: usize,
    /// Sup-norm growth over the initial sup-norm that counts as blow-up.
    pub blowup_factor: f64,
}

impl EvolveOptions {
    pub fn new(t_final: f64, dt: f64, stride: usize) -> Self {
        Self {
            t_final,
            dt,
            stride,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
        }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidInput(format!("t_final = {}", self.t_final)));
        }
        if !(self.dt > 0.0) || self.stride == 0 {
            return Err(Error::InvalidInput("need dt > 0 and stride >= 1".into()));
        }
        Ok((self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize)
    }

    pub fn effective_dt(&self) -> Result<f64> {
        let n = self.steps()?;
        Ok(if n == 0 { self.dt } else { self.t_final / n as f64 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub snapshots: Vec<(f64, WaveField)>,
    /// `(t, |mass(t) - mass(0)| / mass(0))` at every snapshot.
    pub mass_log: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn max_mass_error(&self) -> f64 {
        self.mass_log.iter().map(|m| m.1).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &WaveField {
        &self.snapshots.last().expect("trajectory holds the initial state").1
    }
}

pub(crate) fn run<F: Fn(&mut WaveField)>(
    psi0: &WaveField,
    opts: &EvolveOptions,
    step: F,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let dt = opts.effective_dt()?;
    let m0 = psi0.mass();
    let sup0 = psi0.sup_norm();
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::InvalidInput("initial field has no mass".into()));
    }
    let mut psi = psi0.clone();
    let mut snapshots = vec![(0.0, psi.clone())];
    let mut mass_log = vec![(0.0, 0.0)];
    for n in 1..=steps {
        step(&mut psi);
        let t = n as f64 * dt;
        let sup = psi.sup_norm();
        if !sup.is_finite() || sup > opts.blowup_factor * sup0 {
            return Err(Error::BlowUpDetected {
                time: t,
                growth: sup / sup0,
            });
        }
        if n % opts.stride == 0 || n == steps {
            mass_log.push((t, (psi.mass() - m0).abs() / m0));
            snapshots.push((t, psi.clone()));
        }
    }
    Ok(Trajectory {
        dt,
        snapshots,
        mass_log,
    })
}

pub fn evolve_fine(
    psi0: &WaveField,
    problem: &FineProblem,
    opts: &EvolveOptions,
    scheme: SplitScheme,
) -> Result<Trajectory> {
    if !problem.grid.same_as(&psi0.grid) {
        return Err(Error::GridMismatch("initial field is not on the problem grid".into()));
    }
    let solver = FineSolver::new(problem, opts.effective_dt()?, scheme)?;
    let mut start = psi0.clone();
    start.eps = problem.params.eps;
    run(&start, opts, |psi| solver.prop.step(&mut psi.data))
}

//! Uniform periodic grids on the box `[-X/2, X/2)^d`, sampled fields and the
//! FFT-based spectral calculus shared by all solvers.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// `points` samples per axis on `[-length/2, length/2)^dimension`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: usize,
    points: usize,
    length: f64,
}

impl Grid {
    pub fn new(dimension: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::Unsupported(format!("grid dimension {dimension}")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid size {points} is not a power of two >= 2"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput(format!("box length {length} must be positive")));
        }
        Ok(Self {
            dimension,
            points,
            length,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Axis coordinates `-X/2 + i X / N`.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points)
            .map(|i| -0.5 * self.length + i as f64 * h)
            .collect()
    }

    /// Angular wavenumbers in FFT order, Nyquist mode negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = TAU / self.length;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    /// Multi-index of a flat (row-major) position.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        match self.dimension {
            1 => vec![flat],
            _ => vec![flat / self.points, flat % self.points],
        }
    }

    /// Coordinates of every sample, row-major.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let axis = self.axis();
        (0..self.len())
            .map(|f| self.unflatten(f).into_iter().map(|i| axis[i]).collect())
            .collect()
    }

    /// Wave vectors of every Fourier mode, row-major in FFT order.
    pub fn wave_vectors(&self) -> Vec<Vec<f64>> {
        let xi = self.wavenumbers();
        (0..self.len())
            .map(|f| self.unflatten(f).into_iter().map(|i| xi[i]).collect())
            .collect()
    }

    /// Checks that the box holds an integer number `X / eps` of lattice cells
    /// and returns it.
    pub fn cells_per_axis(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1]")));
        }
        let ratio = self.length / eps;
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Commensurability {
                length: self.length,
                eps,
            });
        }
        Ok(cells as usize)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dimension == other.dimension
            && self.points == other.points
            && (self.length - other.length).abs() <= 1e-12 * self.length
    }
}

/// Complex samples on a [`Grid`]. `eps` is the lattice scale of the fine
/// problem, or `0` for envelope fields of the homogenized equation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub eps: f64,
    pub data: Vec<C64>,
}

impl WaveField {
    pub fn new(grid: Grid, eps: f64, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        if eps != 0.0 {
            grid.cells_per_axis(eps)?;
        }
        Ok(Self { grid, eps, data })
    }

    pub fn zeros(grid: Grid, eps: f64) -> Self {
        Self {
            grid,
            eps,
            data: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: FnMut(&[f64]) -> C64>(grid: Grid, eps: f64, mut f: F) -> Result<Self> {
        let data = grid.coordinates().iter().map(|x| f(x)).collect();
        Self::new(grid, eps, data)
    }

    /// Discrete `||f||^2 = sum |f|^2 dx^d`.
    pub fn mass(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rescales to unit discrete mass and returns the factor applied.
    pub fn normalize(&mut self) -> Result<f64> {
        let m = self.l2_norm();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput("cannot normalize a zero field".into()));
        }
        let s = 1.0 / m;
        self.data.iter_mut().for_each(|z| *z *= s);
        Ok(s)
    }

    /// `f - g` on a shared grid.
    pub fn difference(&self, other: &WaveField) -> Result<WaveField> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(WaveField {
            grid: self.grid,
            eps: self.eps,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Normalized Gaussian `exp(-|x|^2 / (2 s^2))` envelope.
    pub fn gaussian(grid: Grid, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidInput("Gaussian width must be positive".into()));
        }
        let mut f = Self::from_fn(grid, 0.0, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        })?;
        f.normalize()?;
        Ok(f)
    }
}

/// Cached forward/inverse FFT plans for one grid shape.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.points()),
            inverse: planner.plan_fft_inverse(grid.points()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points();
        match self.grid.dimension() {
            1 => plan.process(data),
            _ => {
                plan.process(data); // all rows
                let mut column = vec![C64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        column[r] = data[r * n + c];
                    }
                    plan.process(&mut column);
                    for r in 0..n {
                        data[r * n + c] = column[r];
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N^d` factor.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Spectral partial derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, field: &[C64], axis: usize) -> Vec<C64> {
        let mut hat = field.to_vec();
        self.forward(&mut hat);
        let xi = self.grid.wavenumbers();
        let n = self.grid.points();
        for (f, z) in hat.iter_mut().enumerate() {
            let j = self.grid.unflatten(f)[axis];
            *z *= if j == n / 2 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, xi[j])
            };
        }
        self.inverse(&mut hat);
        hat
    }

    /// Spectral second derivative `d^2 / dx_a dx_b`.
    pub fn second_derivative(&self, field: &[C64], a: usize, b: usize) -> Vec<C64> {
        let mut hat = field.to_vec();
        self.forward(&mut hat);
        let xi = self.grid.wavenumbers();
        let n = self.grid.points();
        for (f, z) in hat.iter_mut().enumerate() {
            let idx = self.grid.unflatten(f);
            let (ja, jb) = (idx[a], idx[b]);
            let factor = if a == b {
                -xi[ja] * xi[ja]
            } else if ja == n / 2 || jb == n / 2 {
                0.0
            } else {
                -xi[ja] * xi[jb]
            };
            *z *= factor;
        }
        self.inverse(&mut hat);
        hat
    }
}

/// Trigonometric interpolation of `source` onto `target` (same box, at least
/// as many points), evaluated at `x - shift`. The Nyquist coefficient is
/// split evenly between `+-N/2` so real data stay real.
pub fn interpolate_shifted(
    source: &WaveField,
    spectral: &Spectral,
    target: Grid,
    shift: &[f64],
) -> Result<Vec<C64>> {
    let sg = source.grid;
    if sg.dimension() != target.dimension()
        || (sg.length() - target.length()).abs() > 1e-12 * sg.length()
        || target.points() < sg.points()
    {
        return Err(Error::GridMismatch(format!(
            "cannot interpolate {sg:?} onto {target:?}"
        )));
    }
    if shift.len() != sg.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sg.dimension(),
            found: shift.len(),
        });
    }
    let mut hat = source.data.clone();
    spectral.forward(&mut hat);
    let n = sg.points();
    let m = target.points();
    let dk = TAU / sg.length();
    // per axis: (target index, weight, wavenumber) for each source index
    let axis_map: Vec<Vec<(usize, f64, f64)>> = (0..n)
        .map(|j| {
            if j < n / 2 {
                vec![(j, 1.0, j as f64 * dk)]
            } else if j > n / 2 {
                let s = j as i64 - n as i64;
                vec![((m as i64 + s) as usize, 1.0, s as f64 * dk)]
            } else if n == m {
                vec![(j, 1.0, -(j as f64) * dk)]
            } else {
                let s = (n / 2) as i64;
                vec![
                    (s as usize, 0.5, s as f64 * dk),
                    ((m as i64 - s) as usize, 0.5, -(s as f64) * dk),
                ]
            }
        })
        .collect();
    let scale = (m as f64 / n as f64).powi(sg.dimension() as i32);
    let mut out = vec![C64::new(0.0, 0.0); target.len()];
    match sg.dimension() {
        1 => {
            for (j, z) in hat.iter().enumerate() {
                for &(t, w, xi) in &axis_map[j] {
                    out[t] += z * w * scale * C64::from_polar(1.0, -xi * shift[0]);
                }
            }
        }
        _ => {
            for (f, z) in hat.iter().enumerate() {
                let (j0, j1) = (f / n, f % n);
                for &(t0, w0, x0) in &axis_map[j0] {
                    for &(t1, w1, x1) in &axis_map[j1] {
                        let phase = -(x0 * shift[0] + x1 * shift[1]);
                        out[t0 * m + t1] += z * (w0 * w1 * scale) * C64::from_polar(1.0, phase);
                    }
                }
            }
        }
    }
    Spectral::new(target).inverse(&mut out);
    Ok(out)
}

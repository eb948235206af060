//! Convergence experiments: configuration, eps-sweeps, order fits and the
//! preparation-sensitivity study.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{assemble_vn, error_metrics, ys_norm, ErrorReport};
use crate::bands::CellSpectrum;
use crate::basis::PlaneWaveBasis;
use crate::correctors::{CellCorrectors, CorrectorSet, MAX_ORDER};
use crate::effective::EffectiveModel;
use crate::effective_nls::evolve_effective;
use crate::fine::{
    evolve_fine, EvolveOptions, ExternalPotential, FineProblem, ScaleParams, SplitScheme,
    Trajectory, DEFAULT_BLOWUP_FACTOR,
};
use crate::grid::{Grid, WaveField};
use crate::lattice::LatticeSpec;
use crate::potential::FourierPotential;
use crate::{Error, Result, C64};

/// Errors below this are reported as "floor" instead of being fitted.
pub const FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// `amplitude * sum_l cos(2 pi y_l)` on the unit lattice.
    Cosine { amplitude: f64 },
    /// `sum_l depth_l sin^2(pi y_l)` on the unit lattice.
    Laser { depths: Vec<f64> },
    /// Keys are comma-separated multi-indices such as `"1"` or `"-1,0"`,
    /// values `[re, im]`.
    Fourier {
        coefficients: BTreeMap<String, [f64; 2]>,
    },
    /// Drawn from the experiment seed.
    Random { max_index: usize, max_modulus: f64 },
}

pub fn parse_multi_index(key: &str) -> Result<Vec<i32>> {
    key.split(',')
        .map(|p| {
            p.trim()
                .parse::<i32>()
                .map_err(|_| Error::InvalidInput(format!("bad multi-index {key:?}")))
        })
        .collect()
}

impl PotentialSpec {
    pub fn build(&self, dimension: usize, seed: u64) -> Result<FourierPotential> {
        match self {
            Self::Zero => Ok(FourierPotential::zero(dimension)),
            Self::Cosine { amplitude } => Ok(FourierPotential::cosine(dimension, *amplitude)),
            Self::Laser { depths } => {
                if depths.len() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: depths.len(),
                    });
                }
                FourierPotential::laser(depths)
            }
            Self::Fourier { coefficients } => {
                let parsed = coefficients
                    .iter()
                    .map(|(k, v)| Ok((parse_multi_index(k)?, C64::new(v[0], v[1]))))
                    .collect::<Result<Vec<_>>>()?;
                FourierPotential::from_coefficients(dimension, parsed)
            }
            Self::Random {
                max_index,
                max_modulus,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(FourierPotential::random(dimension, *max_index, *max_modulus, &mut rng))
            }
        }
    }

    pub fn from_potential(v: &FourierPotential) -> Self {
        let coefficients = v
            .coefficients()
            .map(|(m, c)| {
                let key = m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                (key, [c.re, c.im])
            })
            .collect();
        Self::Fourier { coefficients }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeSpec {
    /// Normalized `exp(-|x|^2 / (2 width^2))`.
    Gaussian { width: f64 },
    /// Sampled envelope loaded by the caller.
    Samples { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtRule {
    /// `min(1e-3 eps_min^2, 1e-4)`: resolves the stiff cell potential when
    /// it is split off pointwise.
    Stiff,
    /// `min(1e-4, 0.2 eps_min^2)`: for schemes that integrate the cell
    /// potential exactly.
    Resolved,
    Fixed { dt: f64 },
}

impl DtRule {
    pub fn dt(&self, eps_min: f64) -> f64 {
        match *self {
            Self::Stiff => (1e-3 * eps_min * eps_min).min(1e-4),
            Self::Resolved => (0.2 * eps_min * eps_min).min(1e-4),
            Self::Fixed { dt } => dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    /// Cell generators; the unit cubic lattice when absent.
    pub lattice: Option<Vec<Vec<f64>>>,
    pub potential: PotentialSpec,
    /// Plane-wave cutoff `M`.
    pub cutoff: usize,
    pub band: usize,
    pub k0: Vec<f64>,
    pub sigma: u32,
    pub kappa: f64,
    pub h: f64,
    pub envelope: EnvelopeSpec,
    pub external: ExternalPotential,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    /// Order `K` of the prepared initial data.
    pub corrector_order: usize,
    /// Order `N` of the asymptotic solution compared against.
    pub approx_order: usize,
    pub box_length: f64,
    /// Grid size of the envelope equation.
    pub envelope_points: usize,
    /// Fine grid size is `points_per_cell * box_length / eps` unless
    /// `fine_points` lists one size per eps.
    pub points_per_cell: usize,
    pub fine_points: Option<Vec<usize>>,
    pub scheme: SplitScheme,
    pub dt_rule: DtRule,
    pub t_final: f64,
    /// Number of stored snapshots after `t = 0`.
    pub snapshots: usize,
    pub ys_orders: Vec<u32>,
    pub seed: u64,
    pub allow_non_elliptic: bool,
    pub blowup_factor: f64,
    /// Evaluate the envelope in the drifting frame.
    pub framed: bool,
    /// Quadrature points per axis for `kappa*`; `4M + 4` when absent.
    pub quadrature_points: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            lattice: None,
            potential: PotentialSpec::Cosine { amplitude: 1.0 },
            cutoff: 32,
            band: 1,
            k0: vec![0.0],
            sigma: 1,
            kappa: 1.0,
            h: 1.0,
            envelope: EnvelopeSpec::Gaussian { width: 0.5 },
            external: ExternalPotential::Zero,
            eps: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            corrector_order: 2,
            approx_order: 0,
            box_length: 16.0,
            envelope_points: 256,
            points_per_cell: 16,
            fine_points: None,
            scheme: SplitScheme::CellExact,
            dt_rule: DtRule::Resolved,
            t_final: 0.5,
            snapshots: 10,
            ys_orders: vec![1],
            seed: 0,
            allow_non_elliptic: false,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            framed: true,
            quadrature_points: None,
        }
    }
}

impl ExperimentConfig {
    pub fn lattice(&self) -> Result<LatticeSpec> {
        match &self.lattice {
            None => LatticeSpec::cubic(self.dimension),
            Some(g) => LatticeSpec::new(g.clone()),
        }
    }

    /// Stable digest of the serialized configuration.
    pub fn hash_hex(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h = std::collections::hash_map::DefaultHasher::new();
        text.hash(&mut h);
        format!("{:016x}", h.finish())
    }

    pub fn fine_grid(&self, index: usize) -> Result<Grid> {
        let eps = *self
            .eps
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no eps at index {index}")))?;
        let points = match &self.fine_points {
            Some(p) => *p.get(index).ok_or_else(|| {
                Error::InvalidInput("fine_points needs one entry per eps".into())
            })?,
            None => {
                let cells = Grid::new(self.dimension, 2, self.box_length)?.cells_per_axis(eps)?;
                cells * self.points_per_cell
            }
        };
        Grid::new(self.dimension, points, self.box_length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::InvalidInput("empty eps list".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
        }
        if self.corrector_order > MAX_ORDER || self.approx_order > self.corrector_order {
            return Err(Error::InvalidInput(format!(
                "need N <= K <= {MAX_ORDER}, got N = {}, K = {}",
                self.approx_order, self.corrector_order
            )));
        }
        if self.k0.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: self.k0.len(),
            });
        }
        if self.snapshots == 0 || !(self.t_final > 0.0) {
            return Err(Error::InvalidInput("need t_final > 0 and snapshots >= 1".into()));
        }
        if let Some(p) = &self.fine_points {
            if p.len() != self.eps.len() {
                return Err(Error::InvalidInput("fine_points needs one entry per eps".into()));
            }
        }
        for (i, &eps) in self.eps.iter().enumerate() {
            let grid = self.fine_grid(i)?;
            ScaleParams::new(eps, self.h, self.kappa, self.sigma)?.check_grid(&grid)?;
        }
        Grid::new(self.dimension, self.envelope_points, self.box_length)?;
        Ok(())
    }

    /// `(dt, steps, stride)` with a whole number of steps between snapshots.
    pub fn time_grid(&self) -> Result<(f64, usize, usize)> {
        let eps_min = self.eps.iter().copied().fold(f64::INFINITY, f64::min);
        let dt = self.dt_rule.dt(eps_min);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step {dt}")));
        }
        let stride = (self.t_final / (dt * self.snapshots as f64) - 1e-9).ceil().max(1.0) as usize;
        let steps = stride * self.snapshots;
        Ok((self.t_final / steps as f64, steps, stride))
    }

    pub fn evolve_options(&self) -> Result<EvolveOptions> {
        let (dt, _, stride) = self.time_grid()?;
        Ok(EvolveOptions {
            t_final: self.t_final,
            dt,
            stride,
            blowup_factor: self.blowup_factor,
        })
    }
}

/// Everything an experiment shares across eps: cell spectrum, effective
/// model, corrector cell data and the initial envelope.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub lattice: LatticeSpec,
    pub potential: FourierPotential,
    pub spectrum: CellSpectrum,
    pub model: EffectiveModel,
    pub cells: CellCorrectors,
    pub envelope: WaveField,
}

impl Experiment {
    /// `envelope` must be supplied for [`EnvelopeSpec::Samples`].
    pub fn prepare(config: &ExperimentConfig, envelope: Option<WaveField>) -> Result<Self> {
        config.validate()?;
        let lattice = config.lattice()?;
        let potential = config.potential.build(config.dimension, config.seed)?;
        let basis = PlaneWaveBasis::new(&lattice, config.cutoff)?;
        let spectrum = CellSpectrum::new(&basis, &potential, &config.k0)?;
        spectrum.check_simple(config.band)?;
        let q = config.quadrature_points.unwrap_or(4 * config.cutoff + 4);
        let model = EffectiveModel::from_spectrum(
            &spectrum,
            config.band,
            config.kappa,
            config.sigma,
            config.h,
            q,
        )?;
        if !model.elliptic && !config.allow_non_elliptic {
            return Err(Error::NotElliptic(model.ellipticity_constant));
        }
        let cells = CellCorrectors::new(&spectrum, &model)?;
        let grid = Grid::new(config.dimension, config.envelope_points, config.box_length)?;
        let envelope = match (&config.envelope, envelope) {
            (_, Some(f)) => {
                if !f.grid.same_as(&grid) {
                    return Err(Error::GridMismatch(format!(
                        "envelope grid {:?}, expected {grid:?}",
                        f.grid
                    )));
                }
                let mut f = f;
                f.eps = 0.0;
                f.normalize()?;
                f
            }
            (EnvelopeSpec::Gaussian { width }, None) => WaveField::gaussian(grid, *width)?,
            (EnvelopeSpec::Samples { path }, None) => {
                return Err(Error::InvalidInput(format!(
                    "envelope samples from {path:?} were not loaded"
                )))
            }
        };
        Ok(Self {
            config: config.clone(),
            lattice,
            potential,
            spectrum,
            model,
            cells,
            envelope,
        })
    }

    pub fn effective_trajectory(&self) -> Result<Trajectory> {
        evolve_effective(
            &self.envelope,
            &self.model,
            &self.config.external,
            &self.config.evolve_options()?,
        )
    }

    pub fn fine_problem(&self, index: usize) -> Result<FineProblem> {
        let c = &self.config;
        FineProblem::new(
            c.fine_grid(index)?,
            ScaleParams::new(c.eps[index], c.h, c.kappa, c.sigma)?,
            self.lattice.clone(),
            self.potential.clone(),
            c.external.clone(),
        )
    }

    /// Prepared data of order `order` for the `index`-th eps.
    pub fn initial_data(&self, index: usize, order: usize) -> Result<WaveField> {
        let grid = self.config.fine_grid(index)?;
        let eps = self.config.eps[index];
        let set = CorrectorSet::build(&self.envelope, &self.cells, order)?;
        let ev = set.evaluate(grid, eps, order, &vec![0.0; grid.dimension()])?;
        let mut psi = WaveField::new(grid, eps, ev.data)?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn fine_trajectory(&self, index: usize, order: usize) -> Result<Trajectory> {
        let problem = self.fine_problem(index)?;
        let psi0 = self.initial_data(index, order)?;
        evolve_fine(&psi0, &problem, &self.config.evolve_options()?, self.config.scheme)
    }

    /// `v_N` at every snapshot of the effective trajectory.
    pub fn asymptotic_snapshots(
        &self,
        index: usize,
        effective: &Trajectory,
        framed: bool,
    ) -> Result<(Vec<(f64, WaveField)>, bool)> {
        let grid = self.config.fine_grid(index)?;
        let eps = self.config.eps[index];
        let mut wrap = false;
        let mut out = Vec::with_capacity(effective.snapshots.len());
        for (t, f) in &effective.snapshots {
            let a = assemble_vn(
                f,
                &self.cells,
                &self.model,
                eps,
                self.config.approx_order,
                *t,
                grid,
                framed,
            )?;
            wrap |= a.frame_wrap;
            out.push((*t, a.field));
        }
        Ok((out, wrap))
    }

    /// Fine run against `v_N` for the `index`-th eps.
    pub fn error_report(
        &self,
        index: usize,
        effective: &Trajectory,
        framed: bool,
    ) -> Result<(ErrorReport, Trajectory)> {
        let fine = self.fine_trajectory(index, self.config.corrector_order)?;
        let report = self.compare(index, &fine, effective, framed)?;
        Ok((report, fine))
    }

    fn compare(
        &self,
        index: usize,
        fine: &Trajectory,
        effective: &Trajectory,
        framed: bool,
    ) -> Result<ErrorReport> {
        let (v, wrap) = self.asymptotic_snapshots(index, effective, framed)?;
        let mut report = error_metrics(
            &fine.snapshots,
            &v,
            &self.config.ys_orders,
            self.config.eps[index],
            self.config.approx_order,
        )?;
        report.config_hash = self.config.hash_hex();
        report.frame_wrap = wrap;
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub points: usize,
    pub status: RowStatus,
    pub sup_l2: f64,
    pub sup_linf: f64,
    pub sup_ys: Vec<f64>,
    pub fine_mass_error: f64,
    pub frame_wrap: bool,
    pub runtime_seconds: f64,
    pub report: Option<ErrorReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(OrderFit),
    /// Every error is below [`FLOOR`].
    Floor,
    Unavailable { reason: String },
}

impl FitOutcome {
    pub fn fitted(&self) -> Option<OrderFit> {
        match self {
            Self::Fitted(f) => Some(*f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_hash: String,
    pub model: EffectiveModel,
    pub dt: f64,
    pub steps: usize,
    pub effective_mass_error: f64,
    pub rows: Vec<ConvergenceRow>,
    pub fit: FitOutcome,
}

impl ConvergenceReport {
    pub fn ok_rows(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Ok)
    }

    /// One line per eps; runtimes are left out so identical configs give
    /// identical files.
    pub fn to_csv(&self) -> String {
        let ys_orders = self
            .ok_rows()
            .find_map(|r| r.report.as_ref().map(|e| e.ys_orders.clone()))
            .unwrap_or_default();
        let mut out = String::from("eps,points,status,sup_L2,sup_Linf");
        for s in &ys_orders {
            out.push_str(&format!(",sup_Y{s}"));
        }
        out.push_str(",mass_error,frame_wrap\n");
        for r in &self.rows {
            let status = match &r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed { message } => format!("failed: {}", message.replace(',', ";")),
            };
            out.push_str(&format!(
                "{},{},{},{:e},{:e}",
                r.eps, r.points, status, r.sup_l2, r.sup_linf
            ));
            for k in 0..ys_orders.len() {
                let v = r.sup_ys.get(k).copied().unwrap_or(f64::NAN);
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(",{:e},{}\n", r.fine_mass_error, r.frame_wrap));
        }
        out
    }
}

/// Least squares of `log error` against `log eps`.
pub fn estimate_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} points, need at least 3",
            pairs.len()
        )));
    }
    if pairs.iter().any(|&(e, err)| !(e > 0.0) || !(err > 0.0)) {
        return Err(Error::DegenerateFit("eps and errors must be positive".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 {
        return Err(Error::DegenerateFit("all eps are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
    })
}

fn failed_row(eps: f64, points: usize, message: String, runtime: f64) -> ConvergenceRow {
    ConvergenceRow {
        eps,
        points,
        status: RowStatus::Failed { message },
        sup_l2: f64::NAN,
        sup_linf: f64::NAN,
        sup_ys: Vec::new(),
        fine_mass_error: f64::NAN,
        frame_wrap: false,
        runtime_seconds: runtime,
        report: None,
    }
}

/// The eps-sweep. The effective trajectory is computed once and shared;
/// rows run in parallel and a failing row is recorded without affecting the
/// others.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    run_experiment(&Experiment::prepare(config, None)?)
}

pub fn run_experiment(exp: &Experiment) -> Result<ConvergenceReport> {
    let config = &exp.config;
    let (dt, steps, _) = config.time_grid()?;
    let effective = exp.effective_trajectory()?;
    let rows: Vec<ConvergenceRow> = (0..config.eps.len())
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let eps = config.eps[i];
            let points = config.fine_grid(i).map(|g| g.points()).unwrap_or(0);
            match exp.error_report(i, &effective, config.framed) {
                Ok((report, fine)) => ConvergenceRow {
                    eps,
                    points,
                    status: RowStatus::Ok,
                    sup_l2: report.sup_l2,
                    sup_linf: report.sup_linf,
                    sup_ys: report.sup_ys.clone(),
                    fine_mass_error: fine.max_mass_error(),
                    frame_wrap: report.frame_wrap,
                    runtime_seconds: start.elapsed().as_secs_f64(),
                    report: Some(report),
                },
                Err(e) => failed_row(eps, points, e.to_string(), start.elapsed().as_secs_f64()),
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .map(|r| (r.eps, r.sup_l2))
        .collect();
    let fit = if !pairs.is_empty() && pairs.iter().all(|p| p.1 < FLOOR) {
        FitOutcome::Floor
    } else {
        match estimate_order(&pairs) {
            Ok(f) => FitOutcome::Fitted(f),
            Err(e) => FitOutcome::Unavailable {
                reason: e.to_string(),
            },
        }
    };
    Ok(ConvergenceReport {
        config_hash: config.hash_hex(),
        model: exp.model.clone(),
        dt,
        steps,
        effective_mass_error: effective.max_mass_error(),
        rows,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationRow {
    pub eps: f64,
    /// `sup_t ||psi_low - psi_high||` in `L^2`.
    pub sup_l2_distance: f64,
    /// `sup_t` of the `Y^1_eps` distance.
    pub sup_y1_distance: f64,
    /// `L^2` distance of the two prepared data.
    pub initial_distance: f64,
    pub low: ErrorReport,
    pub high: ErrorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationReport {
    pub config_hash: String,
    pub order_low: usize,
    pub order_high: usize,
    pub rows: Vec<PreparationRow>,
    /// Exponent `p` in `distance ~ eps^p` from the first and last rows.
    pub exponent: Option<f64>,
}

/// Evolves data prepared to orders `order_low` and `order_high` from the same
/// envelope and measures how far the two fine solutions drift apart.
pub fn compare_preparation(
    config: &ExperimentConfig,
    order_low: usize,
    order_high: usize,
) -> Result<PreparationReport> {
    compare_preparation_with(&Experiment::prepare(config, None)?, order_low, order_high)
}

pub fn compare_preparation_with(
    exp: &Experiment,
    order_low: usize,
    order_high: usize,
) -> Result<PreparationReport> {
    let config = &exp.config;
    if order_low.max(order_high) > MAX_ORDER {
        return Err(Error::Unsupported(format!("corrector order above {MAX_ORDER}")));
    }
    let effective = exp.effective_trajectory()?;
    let rows = (0..config.eps.len())
        .into_par_iter()
        .map(|i| -> Result<PreparationRow> {
            let eps = config.eps[i];
            let low = exp.fine_trajectory(i, order_low)?;
            let high = if order_high == order_low {
                low.clone()
            } else {
                exp.fine_trajectory(i, order_high)?
            };
            let mut sup_l2: f64 = 0.0;
            let mut sup_y1: f64 = 0.0;
            for ((_, a), (_, b)) in low.snapshots.iter().zip(&high.snapshots) {
                let w = a.difference(b)?;
                sup_l2 = sup_l2.max(w.l2_norm());
                sup_y1 = sup_y1.max(ys_norm(&w, 1, eps)?);
            }
            let initial_distance = low.snapshots[0]
                .1
                .difference(&high.snapshots[0].1)?
                .l2_norm();
            Ok(PreparationRow {
                eps,
                sup_l2_distance: sup_l2,
                sup_y1_distance: sup_y1,
                initial_distance,
                low: exp.compare(i, &low, &effective, config.framed)?,
                high: exp.compare(i, &high, &effective, config.framed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exponent = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() >= 2 && a.sup_l2_distance > 0.0 && b.sup_l2_distance > 0.0 => {
            Some((a.sup_l2_distance / b.sup_l2_distance).ln() / (a.eps / b.eps).ln())
        }
        _ => None,
    };
    Ok(PreparationReport {
        config_hash: config.hash_hex(),
        order_low,
        order_high,
        rows,
        exponent,
    })
}

/// One sample of a band diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    /// Arc length along the path.
    pub s: f64,
    pub k: Vec<f64>,
    pub energies: Vec<f64>,
}

/// The lowest `bands` energies along the Brillouin zone: the whole zone in
/// 1D, the path Gamma-X-M-Gamma in 2D.
pub fn band_diagram(
    lattice: &LatticeSpec,
    potential: &FourierPotential,
    cutoff: usize,
    bands: usize,
    points: usize,
) -> Result<Vec<BandPoint>> {
    if points < 2 {
        return Err(Error::InvalidInput("need at least two k-points".into()));
    }
    let basis = PlaneWaveBasis::new(lattice, cutoff)?;
    if bands == 0 || bands > basis.len() {
        return Err(Error::InvalidInput(format!("{bands} bands from {} modes", basis.len())));
    }
    let b = lattice.reciprocal();
    let corners: Vec<Vec<f64>> = match lattice.dimension() {
        1 => vec![vec![-0.5 * b[0][0]], vec![0.5 * b[0][0]]],
        _ => {
            let x = vec![0.5 * b[0][0], 0.5 * b[0][1]];
            let m = vec![0.5 * (b[0][0] + b[1][0]), 0.5 * (b[0][1] + b[1][1])];
            vec![vec![0.0, 0.0], x, m, vec![0.0, 0.0]]
        }
    };
    let legs = corners.len() - 1;
    let per_leg = (points - 1).div_ceil(legs).max(1);
    let mut ks = Vec::new();
    let mut s = 0.0;
    for leg in 0..legs {
        let (a, c) = (&corners[leg], &corners[leg + 1]);
        let len: f64 = a.iter().zip(c).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
        let last = if leg + 1 == legs { per_leg } else { per_leg - 1 };
        for i in 0..=last {
            let t = i as f64 / per_leg as f64;
            let k: Vec<f64> = a.iter().zip(c).map(|(p, q)| p + t * (q - p)).collect();
            ks.push((s + t * len, k));
        }
        s += len;
    }
    ks.into_par_iter()
        .map(|(s, k)| {
            let spec = CellSpectrum::new(&basis, potential, &k)?;
            Ok(BandPoint {
                s,
                k,
                energies: spec.energies().into_iter().take(bands).collect(),
            })
        })
        .collect()
}

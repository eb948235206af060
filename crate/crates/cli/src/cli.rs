use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use effmass_core::effective_nls::evolve_effective;
use effmass_core::fine::SplitScheme;
use effmass_core::harness::{
    band_diagram, compare_preparation_with, run_experiment, DtRule, EnvelopeSpec, Experiment,
    ExperimentConfig, FitOutcome, RowStatus,
};
use log::info;

use crate::io;
use crate::plot::{loglog_svg, Series};
use crate::rundir::RunDir;

#[derive(Debug, Parser)]
#[command(name = "effmass", version, about = "Effective-mass limit of NLS in periodic media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band diagram over the Brillouin zone as CSV.
    Bands {
        #[command(flatten)]
        common: Common,
        /// Number of bands to list.
        #[arg(long, default_value_t = 6)]
        bands: usize,
        /// Number of k-points along the path.
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Effective model at the configured band and k0 as JSON.
    Model {
        #[command(flatten)]
        common: Common,
    },
    /// One fine or effective trajectory.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Solver::Fine)]
        solver: Solver,
        /// Which entry of the eps list to run (fine solver only).
        #[arg(long, default_value_t = 0)]
        eps_index: usize,
        /// Preparation order of the fine initial data; defaults to the
        /// configured corrector order.
        #[arg(long)]
        prepare: Option<usize>,
        /// Write every snapshot, not only the last.
        #[arg(long)]
        all_snapshots: bool,
    },
    /// The eps-sweep with error table, order fit and plot.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Skip the SVG chart.
        #[arg(long)]
        no_plot: bool,
    },
    /// Fine runs from two preparation orders of the same envelope.
    PrepareCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        low: usize,
        #[arg(long, default_value_t = 2)]
        high: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Fine,
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Fourier,
    CellExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtKind {
    Stiff,
    Resolved,
}

/// Config file plus per-field overrides.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML or JSON experiment config; defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Run directory; defaults to runs/<command>-<config hash>.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// TOML or JSON potential spec replacing the configured one.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Envelope samples in the binary field format.
    #[arg(long)]
    pub envelope: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k0: Option<Vec<f64>>,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub sigma: Option<u32>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Corrector order K of the prepared data.
    #[arg(long)]
    pub order: Option<usize>,
    /// Order N of the asymptotic solution compared against.
    #[arg(long)]
    pub approx_order: Option<usize>,
    #[arg(long)]
    pub box_length: Option<f64>,
    #[arg(long)]
    pub envelope_points: Option<usize>,
    #[arg(long)]
    pub points_per_cell: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long, value_enum, conflicts_with = "dt")]
    pub dt_rule: Option<DtKind>,
    /// Fixed time step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare against the unshifted envelope.
    #[arg(long)]
    pub no_frame: bool,
    #[arg(long)]
    pub allow_non_elliptic: bool,
}

impl Common {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => io::load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.potential {
            c.potential = io::load_potential(p)?;
        }
        if let Some(p) = &self.envelope {
            c.envelope = EnvelopeSpec::Samples {
                path: p.display().to_string(),
            };
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        set!(eps, k0, band, kappa, sigma, h, cutoff, box_length, envelope_points, points_per_cell, t_final, snapshots, seed);
        if let Some(k) = self.order {
            c.corrector_order = k;
        }
        if let Some(n) = self.approx_order {
            c.approx_order = n;
        }
        if let Some(s) = self.scheme {
            c.scheme = match s {
                Scheme::Fourier => SplitScheme::Fourier,
                Scheme::CellExact => SplitScheme::CellExact,
            };
        }
        if let Some(r) = self.dt_rule {
            c.dt_rule = match r {
                DtKind::Stiff => DtRule::Stiff,
                DtKind::Resolved => DtRule::Resolved,
            };
        }
        if let Some(dt) = self.dt {
            c.dt_rule = DtRule::Fixed { dt };
        }
        if self.no_frame {
            c.framed = false;
        }
        if self.allow_non_elliptic {
            c.allow_non_elliptic = true;
        }
        c.validate()?;
        Ok(c)
    }

    fn run_dir(&self, command: &str, config: &ExperimentConfig) -> Result<RunDir> {
        let path = match &self.out {
            Some(p) => p.clone(),
            None => PathBuf::from("runs").join(format!("{command}-{}", config.hash_hex())),
        };
        let dir = RunDir::create(&path, config, self.config.as_deref())?;
        info!("writing to {}", dir.path.display());
        Ok(dir)
    }

    fn experiment(&self, config: &ExperimentConfig) -> Result<Experiment> {
        let envelope = match &config.envelope {
            EnvelopeSpec::Samples { path } => Some(io::read_field(Path::new(path))?),
            EnvelopeSpec::Gaussian { .. } => None,
        };
        Ok(Experiment::prepare(config, envelope)?)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bands { common, bands, points } => {
            let cfg = common.resolve()?;
            let dir = common.run_dir("bands", &cfg)?;
            let v = cfg.potential.build(cfg.dimension, cfg.seed)?;
            let diagram = band_diagram(&cfg.lattice()?, &v, cfg.cutoff, bands, points)?;
            let mut csv = String::from("s");
            for j in 0..cfg.dimension {
                csv.push_str(&format!(",k{j}"));
            }
            for n in 1..=bands {
                csv.push_str(&format!(",E{n}"));
            }
            csv.push('\n');
            for p in &diagram {
                csv.push_str(&format!("{}", p.s));
                for k in &p.k {
                    csv.push_str(&format!(",{k}"));
                }
                for e in &p.energies {
                    csv.push_str(&format!(",{e}"));
                }
                csv.push('\n');
            }
            io::write_text(&dir.file("bands.csv"), &csv)?;
            io::write_json(&dir.file("potential.json"), &effmass_core::harness::PotentialSpec::from_potential(&v))?;
            println!("{} k-points, {bands} bands -> {}", diagram.len(), dir.file("bands.csv").display());
        }
        Command::Model { common } => {
            let cfg = common.resolve()?;
            let dir = common.run_dir("model", &cfg)?;
            let exp = common.experiment(&cfg)?;
            io::write_json(&dir.file("model.json"), &exp.model)?;
            println!("{}", serde_json::to_string_pretty(&exp.model)?);
        }
        Command::Evolve {
            common,
            solver,
            eps_index,
            prepare,
            all_snapshots,
        } => {
            let cfg = common.resolve()?;
            let dir = common.run_dir("evolve", &cfg)?;
            let exp = common.experiment(&cfg)?;
            let traj = match solver {
                Solver::Effective => evolve_effective(&exp.envelope, &exp.model, &cfg.external, &cfg.evolve_options()?)?,
                Solver::Fine => {
                    if eps_index >= cfg.eps.len() {
                        bail!("eps index {eps_index} out of range ({} entries)", cfg.eps.len());
                    }
                    exp.fine_trajectory(eps_index, prepare.unwrap_or(cfg.corrector_order))?
                }
            };
            io::write_text(&dir.file("mass_log.csv"), &io::mass_log_csv(&traj.mass_log))?;
            if all_snapshots {
                for (i, (_, f)) in traj.snapshots.iter().enumerate() {
                    io::write_field(&dir.file(&format!("snapshot_{i:04}.bin")), f)?;
                }
            }
            io::write_field(&dir.file("final.bin"), traj.last())?;
            println!(
                "{} snapshots, max mass error {:.3e} -> {}",
                traj.snapshots.len(),
                traj.max_mass_error(),
                dir.path.display()
            );
        }
        Command::Converge { common, no_plot } => {
            let cfg = common.resolve()?;
            let dir = common.run_dir("converge", &cfg)?;
            let exp = common.experiment(&cfg)?;
            info!("model: E = {}, M* = {:?}, kappa* = {}", exp.model.energy, exp.model.mass_tensor, exp.model.kappa_star);
            let report = run_experiment(&exp)?;
            io::write_text(&dir.file("convergence.csv"), &report.to_csv())?;
            io::write_json(&dir.file("report.json"), &report)?;
            for (i, row) in report.rows.iter().enumerate() {
                match (&row.status, &row.report) {
                    (RowStatus::Ok, Some(r)) => io::write_text(&dir.file(&format!("errors_{i}.csv")), &r.to_csv())?,
                    (RowStatus::Failed { message }, _) => eprintln!("eps = {}: {message}", row.eps),
                    _ => {}
                }
            }
            print!("{}", report.to_csv());
            let fit = match &report.fit {
                FitOutcome::Fitted(f) => {
                    println!("slope {:.4}, intercept {:.4}, R^2 {:.5}", f.slope, f.intercept, f.r_squared);
                    Some((f.slope, f.intercept))
                }
                FitOutcome::Floor => {
                    println!("floor: every error below the fit threshold");
                    None
                }
                FitOutcome::Unavailable { reason } => {
                    println!("no fit: {reason}");
                    None
                }
            };
            if !no_plot {
                let l2: Vec<(f64, f64)> = report.ok_rows().map(|r| (r.eps, r.sup_l2)).collect();
                let linf: Vec<(f64, f64)> = report.ok_rows().map(|r| (r.eps, r.sup_linf)).collect();
                let svg = loglog_svg(
                    "sup-in-time error against eps",
                    "eps",
                    "error",
                    &[
                        Series { label: "L2", points: l2 },
                        Series { label: "Linf", points: linf },
                    ],
                    fit,
                );
                io::write_text(&dir.file("convergence.svg"), &svg)?;
            }
        }
        Command::PrepareCompare { common, low, high } => {
            let cfg = common.resolve()?;
            let dir = common.run_dir("prepare-compare", &cfg)?;
            let exp = common.experiment(&cfg)?;
            let rep = compare_preparation_with(&exp, low, high).context("preparation study")?;
            let mut csv = String::from("eps,sup_L2_distance,sup_Y1_distance,initial_distance,low_sup_L2,high_sup_L2\n");
            for r in &rep.rows {
                csv.push_str(&format!(
                    "{},{:e},{:e},{:e},{:e},{:e}\n",
                    r.eps, r.sup_l2_distance, r.sup_y1_distance, r.initial_distance, r.low.sup_l2, r.high.sup_l2
                ));
            }
            io::write_text(&dir.file("preparation.csv"), &csv)?;
            io::write_json(&dir.file("preparation.json"), &rep)?;
            print!("{csv}");
            match rep.exponent {
                Some(p) => println!("distance exponent {p:.4}"),
                None => println!("distance exponent unavailable"),
            }
        }
    }
    Ok(())
}

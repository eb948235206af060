//! Asymptotic solutions `v_N` and the error norms used to compare them with
//! fine-scale trajectories.

use serde::{Deserialize, Serialize};

use crate::correctors::{CellCorrectors, CorrectorSet};
use crate::effective::EffectiveModel;
use crate::grid::{Grid, Spectral, WaveField};
use crate::{Error, Result, C64};

/// Largest `s` accepted by [`ys_norm`].
pub const MAX_YS_ORDER: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub field: WaveField,
    /// The envelope reaches the box edge, so the moving frame wrapped
    /// visible mass around the box.
    pub frame_wrap: bool,
}

/// Envelope drift `h t omega / eps` at time `t`.
pub fn frame_shift(model: &EffectiveModel, eps: f64, t: f64) -> Vec<f64> {
    model.omega.iter().map(|w| model.h * t * w / eps).collect()
}

/// `v_N(t) = sum_{j <= N} eps^j u_j(t, x - shift, x/eps) exp(i k0.x/eps) exp(-i h E t / eps^2)`
/// built from the envelope `f0` at time `t`. With `framed = false` the
/// envelope is left unshifted.
#[allow(clippy::too_many_arguments)]
pub fn assemble_vn(
    f0: &WaveField,
    cells: &CellCorrectors,
    model: &EffectiveModel,
    eps: f64,
    order: usize,
    t: f64,
    grid: Grid,
    framed: bool,
) -> Result<Assembled> {
    let set = CorrectorSet::build(f0, cells, order)?;
    let shift = if framed {
        frame_shift(model, eps, t)
    } else {
        vec![0.0; grid.dimension()]
    };
    let ev = set.evaluate(grid, eps, order, &shift)?;
    let phase = C64::from_polar(1.0, -model.h * model.energy * t / (eps * eps));
    let data = ev.data.into_iter().map(|z| z * phase).collect();
    Ok(Assembled {
        field: WaveField::new(grid, eps, data)?,
        frame_wrap: ev.frame_wrap,
    })
}

fn multi_indices(len: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for k in 0..=(max_total - used) {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// `sum_{|alpha| + |beta| <= s} ||(eps x)^alpha (eps d)^beta f||` with
/// spectral derivatives and centered box coordinates.
pub fn ys_norm(field: &WaveField, s: u32, eps: f64) -> Result<f64> {
    if s > MAX_YS_ORDER {
        return Err(Error::Unsupported(format!("Y^s norm with s = {s} > {MAX_YS_ORDER}")));
    }
    let d = field.grid.dimension();
    let sp = Spectral::new(field.grid);
    let coords = field.grid.coordinates();
    let mut total = 0.0;
    for idx in multi_indices(2 * d, s) {
        let (alpha, beta) = idx.split_at(d);
        let mut g = field.clone();
        for (axis, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                g.data = sp.derivative(&g.data, axis);
                g.data.iter_mut().for_each(|z| *z *= eps);
            }
        }
        if alpha.iter().any(|&a| a > 0) {
            for (z, x) in g.data.iter_mut().zip(&coords) {
                let w: f64 = alpha
                    .iter()
                    .zip(x)
                    .map(|(&a, xj)| (eps * xj).powi(a as i32))
                    .product();
                *z *= w;
            }
        }
        total += g.l2_norm();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    /// One entry per requested `s`.
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub eps: f64,
    /// Order `N` of the asymptotic solution.
    pub order: usize,
    pub points: usize,
    pub config_hash: String,
    pub ys_orders: Vec<u32>,
    pub rows: Vec<ErrorRow>,
    pub sup_l2: f64,
    pub sup_linf: f64,
    pub sup_ys: Vec<f64>,
    pub frame_wrap: bool,
}

impl ErrorReport {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("t,eps,N,L2,Linf");
        for s in &self.ys_orders {
            h.push_str(&format!(",Y{s}"));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:e},{:e}", r.t, self.eps, self.order, r.l2, r.linf));
            for y in &r.ys {
                out.push_str(&format!(",{y:e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Smallest `C` with `Linf <= C eps^(-d/2) Y^s` on every row, for the
    /// `k`-th requested `s`.
    pub fn sobolev_constant(&self, k: usize, dimension: usize) -> f64 {
        let scale = self.eps.powf(-(dimension as f64) / 2.0);
        self.rows
            .iter()
            .filter(|r| r.ys[k] > 0.0)
            .map(|r| r.linf / (scale * r.ys[k]))
            .fold(0.0, f64::max)
    }
}

/// Pointwise differences `psi - v` per snapshot and their sup over time.
pub fn error_metrics(
    psi: &[(f64, WaveField)],
    v: &[(f64, WaveField)],
    ys_orders: &[u32],
    eps: f64,
    order: usize,
) -> Result<ErrorReport> {
    if psi.len() != v.len() || psi.is_empty() {
        return Err(Error::GridMismatch(format!(
            "{} fine snapshots against {} asymptotic ones",
            psi.len(),
            v.len()
        )));
    }
    let mut rows = Vec::with_capacity(psi.len());
    for ((t, a), (tv, b)) in psi.iter().zip(v) {
        if (t - tv).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("snapshot times {t} and {tv} differ")));
        }
        let w = a.difference(b)?;
        let ys = ys_orders
            .iter()
            .map(|&s| ys_norm(&w, s, eps))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ErrorRow {
            t: *t,
            l2: w.l2_norm(),
            linf: w.sup_norm(),
            ys,
        });
    }
    let sup = |f: &dyn Fn(&ErrorRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let sup_ys = (0..ys_orders.len()).map(|k| sup(&|r| r.ys[k])).collect();
    Ok(ErrorReport {
        eps,
        order,
        points: psi[0].1.grid.points(),
        config_hash: String::new(),
        ys_orders: ys_orders.to_vec(),
        sup_l2: sup(&|r| r.l2),
        sup_linf: sup(&|r| r.linf),
        sup_ys,
        rows,
        frame_wrap: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 0).len(), 1);
        assert_eq!(multi_indices(2, 1).len(), 3);
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(4, 2).len(), 15);
    }

    #[test]
    fn y0_is_l2() {
        let g = Grid::new(1, 128, 10.0).unwrap();
        let f = WaveField::from_fn(g, 0.0, |x| C64::new(x[0].sin(), (-x[0] * x[0]).exp()))
            .unwrap();
        assert_eq!(ys_norm(&f, 0, 0.1).unwrap(), f.l2_norm());
    }

    #[test]
    fn y1_of_gaussian() {
        let g = Grid::new(1, 512, 24.0).unwrap();
        let s = 0.8;
        let f = WaveField::gaussian(g, s).unwrap();
        let eps = 0.1;
        // ||x f|| = ||f'|| * s^2 = s / sqrt 2 for unit mass
        let want = 1.0 + eps * (s / 2f64.sqrt() + 1.0 / (s * 2f64.sqrt()));
        assert!((ys_norm(&f, 1, eps).unwrap() - want).abs() < 1e-12);
        assert!(ys_norm(&f, 4, eps).is_err());
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let f = WaveField::gaussian(g, 0.5).unwrap();
        let snaps = vec![(0.0, f.clone()), (0.1, f)];
        let r = error_metrics(&snaps, &snaps, &[0, 1], 0.1, 0).unwrap();
        assert_eq!(r.sup_l2, 0.0);
        assert_eq!(r.sup_linf, 0.0);
        assert_eq!(r.sup_ys, vec![0.0, 0.0]);
        assert!(r.to_csv().starts_with("t,eps,N,L2,Linf,Y0,Y1\n0,0.1,0,0e0,0e0,0e0,0e0\n"));
    }
}

//! Independent reference computations used by the integration tests. None
//! of them goes through the plane-wave or split-step code paths.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use effmass_core::C64;

/// Number of eigenvalues of the symmetric tridiagonal matrix `(diag, off)`
/// below `x` (Sturm sequence count).
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for &d in &diag[1..] {
        let prev = if q == 0.0 { 1e-300 } else { q };
        q = d - x - off * off / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenvalue of `-u''/2 + V u` on one period at `k = 0`, for an even
/// potential symmetric about the half period, by second-order differences on
/// the half cell `[0, 1/2]` with reflecting ends (`n` cell-centred points).
pub fn fd_ground_energy<V: Fn(f64) -> f64>(v: V, n: usize) -> f64 {
    let h = 0.5 / n as f64;
    let off = -0.5 / (h * h);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let y = (i as f64 + 0.5) * h;
            let ends = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            ends / (h * h) + v(y)
        })
        .collect();
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Richardson extrapolation of [`fd_ground_energy`] from `n` and `2n`.
pub fn fd_ground_energy_extrapolated<V: Fn(f64) -> f64 + Copy>(v: V, n: usize) -> f64 {
    let a = fd_ground_energy(v, n);
    let b = fd_ground_energy(v, 2 * n);
    (4.0 * b - a) / 3.0
}

pub fn cosine(y: f64) -> f64 {
    (TAU * y).cos()
}

/// Cyclic tridiagonal matrix with constant off-diagonal `c`, factored once
/// (Thomas elimination plus a Sherman-Morrison correction for the corners).
struct Cyclic {
    c: C64,
    gamma: C64,
    cp: Vec<C64>,
    inv: Vec<C64>,
    z: Vec<C64>,
    denom: C64,
}

impl Cyclic {
    fn new(diag: &[C64], c: C64) -> Self {
        let n = diag.len();
        let gamma = -diag[0];
        let mut b = diag.to_vec();
        b[0] -= gamma;
        b[n - 1] -= c * c / gamma;
        let mut cp = vec![C64::new(0.0, 0.0); n];
        let mut inv = vec![C64::new(0.0, 0.0); n];
        inv[0] = 1.0 / b[0];
        cp[0] = c * inv[0];
        for i in 1..n {
            inv[i] = 1.0 / (b[i] - c * cp[i - 1]);
            cp[i] = c * inv[i];
        }
        let mut out = Self {
            c,
            gamma,
            cp,
            inv,
            z: vec![],
            denom: C64::new(1.0, 0.0),
        };
        let mut u = vec![C64::new(0.0, 0.0); n];
        u[0] = gamma;
        u[n - 1] = c;
        out.thomas(&mut u);
        out.denom = 1.0 + u[0] + c * u[n - 1] / gamma;
        out.z = u;
        out
    }

    /// Overwrites `x` with the solution of the non-cyclic part.
    fn thomas(&self, x: &mut [C64]) {
        let n = x.len();
        x[0] *= self.inv[0];
        for i in 1..n {
            x[i] = (x[i] - self.c * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.cp[i] * next;
        }
    }

    fn solve(&self, x: &mut [C64]) {
        let n = x.len();
        self.thomas(x);
        let fact = (x[0] + self.c * x[n - 1] / self.gamma) / self.denom;
        x.iter_mut().zip(&self.z).for_each(|(a, b)| *a -= fact * b);
    }
}

/// Conservative Crank-Nicolson scheme with second-order periodic differences
/// for `i h u_t = -(h^2/2) a u_xx + w(x) u + g |u|^2 u` on `[-X/2, X/2)`.
pub struct CrankNicolson {
    pub h: f64,
    pub a: f64,
    pub g: f64,
    pub length: f64,
    pub w: Box<dyn Fn(f64) -> f64>,
}

impl CrankNicolson {
    pub fn run(&self, u0: &dyn Fn(f64) -> C64, n: usize, dt: f64, t: f64) -> Vec<C64> {
        let dx = self.length / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| -0.5 * self.length + i as f64 * dx).collect();
        let mut u: Vec<C64> = xs.iter().map(|&x| u0(x)).collect();
        let w: Vec<f64> = xs.iter().map(|&x| (self.w)(x)).collect();
        let i = C64::new(0.0, 1.0);
        let r = i * dt / (2.0 * self.h);
        let kin = self.h * self.h * self.a / (dx * dx);
        let off = r * (-0.5 * kin);
        let diag: Vec<C64> = w.iter().map(|wi| 1.0 + r * (kin + wi)).collect();
        let lhs = Cyclic::new(&diag, off);
        let mut prev = u.clone();
        let mut explicit = vec![C64::new(0.0, 0.0); n];
        let mut next = vec![C64::new(0.0, 0.0); n];
        let mut cand = vec![C64::new(0.0, 0.0); n];
        let steps = (t / dt).round() as usize;
        for _ in 0..steps {
            // explicit half: (1 - r A) u
            for j in 0..n {
                let l = u[if j == 0 { n - 1 } else { j - 1 }];
                let rr = u[if j == n - 1 { 0 } else { j + 1 }];
                explicit[j] = u[j] - r * ((kin + w[j]) * u[j] - 0.5 * kin * (l + rr));
            }
            // start from the linear extrapolation of the last two levels
            for j in 0..n {
                next[j] = 2.0 * u[j] - prev[j];
            }
            for _ in 0..50 {
                for j in 0..n {
                    let dens = 0.5 * (next[j].norm_sqr() + u[j].norm_sqr());
                    cand[j] = explicit[j] - r * self.g * dens * (next[j] + u[j]);
                }
                lhs.solve(&mut cand);
                let change = cand
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .fold(0.0, f64::max);
                std::mem::swap(&mut next, &mut cand);
                if change < 1e-28 || self.g == 0.0 {
                    break;
                }
            }
            std::mem::swap(&mut prev, &mut u);
            std::mem::swap(&mut u, &mut next);
        }
        u
    }

    /// Runs at `(n, dt)` and `(2n, dt/2)` and cancels the leading `dx^2`
    /// and `dt^2` errors; returned on the `n`-point grid.
    pub fn extrapolated(&self, u0: &dyn Fn(f64) -> C64, n: usize, dt: f64, t: f64) -> Vec<C64> {
        let coarse = self.run(u0, n, dt, t);
        let fine = self.run(u0, 2 * n, 0.5 * dt, t);
        coarse
            .iter()
            .enumerate()
            .map(|(j, c)| (4.0 * fine[2 * j] - c) / 3.0)
            .collect()
    }
}

/// Discrete `L^2` distance on a grid of spacing `dx` in 1D.
pub fn l2_distance(a: &[C64], b: &[C64], dx: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * dx).sqrt()
}

/// Every `stride`-th sample.
pub fn subsample(a: &[C64], stride: usize) -> Vec<C64> {
    a.iter().step_by(stride).copied().collect()
}

/// Normalized Gaussian with width `s` in 1D.
pub fn gaussian(s: f64) -> impl Fn(f64) -> C64 {
    let c = (PI * s * s).powf(-0.25);
    move |x| C64::new(c * (-x * x / (2.0 * s * s)).exp(), 0.0)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `d chi_1 / dk` at `k` by centered differences of eigenvectors whose
/// phase is aligned with `chi_1(k)`, projected off `chi_1(k)`.
pub fn fd_dk_chi(
    basis: &effmass_core::basis::PlaneWaveBasis,
    v: &effmass_core::potential::FourierPotential,
    k: f64,
    delta: f64,
) -> Vec<C64> {
    use effmass_core::bands::{inner, CellSpectrum};
    let chi_at = |k: f64| {
        CellSpectrum::new(basis, v, &[k]).unwrap().pair(1).unwrap().coefficients.clone()
    };
    let chi = chi_at(k);
    let aligned = |k: f64| {
        let c = chi_at(k);
        let p = inner(&c, &chi);
        let rot = p / p.norm();
        c.into_iter().map(|z| z * rot.conj()).collect::<Vec<_>>()
    };
    let (plus, minus) = (aligned(k + delta), aligned(k - delta));
    let mut fd: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * delta)).collect();
    let p = inner(&chi, &fd);
    fd.iter_mut().zip(&chi).for_each(|(z, c)| *z -= p * c);
    fd
}


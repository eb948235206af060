mod common;

use effmass_core::bands::{assemble_bloch_matrix, inner, norm, solve_bands, CellSpectrum};
use effmass_core::basis::PlaneWaveBasis;
use effmass_core::lattice::LatticeSpec;
use effmass_core::potential::FourierPotential;
use effmass_core::C64;
use proptest::prelude::*;

// Lowest Mathieu characteristic value a_0(q = 1/pi^2) rescaled by pi^2/2,
// evaluated with scipy.special.mathieu_a.
const MATHIEU_E1: f64 = -0.025301920999204322;
// Richardson-extrapolated finite-difference oracle at 4096 points per
// period; roundoff in the stiff tridiagonal limits it to ~1e-9.
const FD_E1_4096: f64 = -0.025301922035093;
// Same oracle at 512 points per period, where roundoff is negligible.
const FD_E1_512: f64 = -0.025301920986143;

fn cubic(d: usize, m: usize) -> PlaneWaveBasis {
    PlaneWaveBasis::new(&LatticeSpec::cubic(d).unwrap(), m).unwrap()
}

fn e1(v: &FourierPotential, basis: &PlaneWaveBasis, k: &[f64]) -> f64 {
    CellSpectrum::new(basis, v, k).unwrap().pair(1).unwrap().energy
}

#[test]
fn fd_oracle_is_frozen() {
    let fine = common::fd_ground_energy_extrapolated(common::cosine, 1024);
    let coarse = common::fd_ground_energy_extrapolated(common::cosine, 128);
    assert!((fine - FD_E1_4096).abs() < 1e-12, "{fine:.14}");
    assert!((coarse - FD_E1_512).abs() < 1e-12, "{coarse:.14}");
    assert!((coarse - MATHIEU_E1).abs() < 1e-10);
}

#[test]
fn ground_energy_matches_oracles() {
    let e = e1(&FourierPotential::cosine(1, 1.0), &cubic(1, 32), &[0.0]);
    assert!((e - FD_E1_4096).abs() <= 1e-6);
    assert!((e - FD_E1_512).abs() <= 1e-10);
    assert!((e - MATHIEU_E1).abs() <= 1e-12);
}

#[test]
fn group_velocity_matches_finite_difference() {
    let v = FourierPotential::cosine(1, 1.0);
    let b = cubic(1, 24);
    let d = 1e-4;
    let fd = (e1(&v, &b, &[1.0 + d]) - e1(&v, &b, &[1.0 - d])) / (2.0 * d);
    let got = CellSpectrum::new(&b, &v, &[1.0]).unwrap().derivatives(1).unwrap().gradient[0];
    assert!((got - fd).abs() <= 1e-6, "{got} vs {fd}");
}

#[test]
fn bloch_wave_derivative_matches_aligned_finite_difference() {
    let v = FourierPotential::cosine(1, 1.0);
    let b = cubic(1, 24);
    let d = 1e-4;
    let s0 = CellSpectrum::new(&b, &v, &[0.0]).unwrap();
    let fd = common::fd_dk_chi(&b, &v, 0.0, d);
    let got = &s0.derivatives(1).unwrap().dk_chi[0];
    let diff: Vec<C64> = got.iter().zip(&fd).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-5, "{}", norm(&diff));
    assert!(norm(got) > 1e-2);
}

#[test]
fn curvature_matches_second_difference() {
    let v = FourierPotential::cosine(1, 1.0);
    let b = cubic(1, 24);
    let d = 1e-3;
    let fd = (e1(&v, &b, &[d]) - 2.0 * e1(&v, &b, &[0.0]) + e1(&v, &b, &[-d])) / (d * d);
    let got = CellSpectrum::new(&b, &v, &[0.0]).unwrap().derivatives(1).unwrap().hessian[0][0];
    assert!((got - fd).abs() <= 1e-5, "{got} vs {fd}");
    assert!(got > 0.0);
}

#[test]
fn separable_potential_has_isotropic_curvature() {
    let v = FourierPotential::cosine(2, 1.0);
    let h = CellSpectrum::new(&cubic(2, 6), &v, &[0.0, 0.0])
        .unwrap()
        .derivatives(1)
        .unwrap()
        .hessian;
    assert!((h[0][0] - h[1][1]).abs() < 1e-10);
    assert!(h[0][1].abs() < 1e-10 && h[1][0].abs() < 1e-10);
}

#[test]
fn galerkin_convergence_is_spectral() {
    // V_hat(m) = 4 * 2^-|m| for |m| <= 40: smooth but not a short trig sum
    let coeffs = (-40i32..=40).map(|m| (vec![m], C64::new(4.0 * 0.5f64.powi(m.abs()), 0.0)));
    let v = FourierPotential::from_coefficients(1, coeffs).unwrap();
    let e = |m| e1(&v, &cubic(1, m), &[0.3]);
    let (a, b, c) = (e(8), e(16), e(32));
    let first = (a - b).abs();
    let second = (b - c).abs();
    assert!(first > 0.0);
    assert!(second * 10.0 <= first, "{first} -> {second}");
}

fn hermitian_potential(d: usize, raw: &[(f64, f64)]) -> FourierPotential {
    // fills the half space of |m_j| <= 1 (or 2 in 1D) and mirrors it
    let r: i32 = if d == 1 { 2 } else { 1 };
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    let mut it = raw.iter();
    for flat in 0..side.pow(d as u32) {
        let mut rem = flat;
        let mut m = vec![0i32; d];
        for s in m.iter_mut() {
            *s = (rem % side) as i32 - r;
            rem /= side;
        }
        let neg: Vec<i32> = m.iter().map(|x| -x).collect();
        if neg < m {
            continue;
        }
        let &(a, phase) = it.next().unwrap();
        let z = if neg == m {
            C64::new(a, 0.0)
        } else {
            C64::from_polar(a.abs(), phase)
        };
        if neg != m {
            out.push((neg, z.conj()));
        }
        out.push((m, z));
    }
    FourierPotential::from_coefficients(d, out).unwrap()
}

fn fd_hessian(v: &FourierPotential, b: &PlaneWaveBasis, d: usize) -> Vec<Vec<f64>> {
    let step = 1e-3;
    let at = |shift: &[(usize, f64)]| {
        let mut k = vec![0.0; d];
        for &(j, s) in shift {
            k[j] += s;
        }
        e1(v, b, &k)
    };
    let mut out = vec![vec![0.0; d]; d];
    let e0 = at(&[]);
    for j in 0..d {
        for l in 0..d {
            out[j][l] = if j == l {
                (at(&[(j, step)]) - 2.0 * e0 + at(&[(j, -step)])) / (step * step)
            } else {
                (at(&[(j, step), (l, step)]) - at(&[(j, step), (l, -step)])
                    - at(&[(j, -step), (l, step)])
                    + at(&[(j, -step), (l, -step)]))
                    / (4.0 * step * step)
            };
        }
    }
    out
}

fn coefficient_list(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-2.0f64..2.0, 0.0f64..std::f64::consts::TAU), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hessian_matches_fd_in_1d(raw in coefficient_list(3)) {
        let v = hermitian_potential(1, &raw);
        let b = cubic(1, 20);
        let got = CellSpectrum::new(&b, &v, &[0.0]).unwrap().derivatives(1).unwrap().hessian;
        let fd = fd_hessian(&v, &b, 1);
        prop_assert!((got[0][0] - fd[0][0]).abs() <= 1e-5);
    }

    #[test]
    fn hessian_matches_fd_in_2d(raw in coefficient_list(5)) {
        let v = hermitian_potential(2, &raw);
        let b = cubic(2, 5);
        let got = CellSpectrum::new(&b, &v, &[0.0, 0.0]).unwrap().derivatives(1).unwrap().hessian;
        let fd = fd_hessian(&v, &b, 2);
        for j in 0..2 {
            for l in 0..2 {
                prop_assert!((got[j][l] - fd[j][l]).abs() <= 1e-5, "{:?} vs {:?}", got, fd);
            }
        }
        prop_assert_eq!(got[0][1], got[1][0]);
    }

    #[test]
    fn matrix_is_hermitian(raw in coefficient_list(5), k0 in -3.0f64..3.0, k1 in -3.0f64..3.0) {
        let v = hermitian_potential(2, &raw);
        let a = assemble_bloch_matrix(&cubic(2, 3), &v, &[k0, k1]).unwrap();
        let dev = (&a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-14);
    }

    #[test]
    fn bands_are_even_in_k(raw in coefficient_list(3), k in -3.0f64..3.0) {
        let v = hermitian_potential(1, &raw);
        let b = cubic(1, 12);
        let plus = CellSpectrum::new(&b, &v, &[k]).unwrap().energies();
        let minus = CellSpectrum::new(&b, &v, &[-k]).unwrap().energies();
        for (a, c) in plus.iter().zip(&minus).take(5) {
            prop_assert!((a - c).abs() <= 1e-10);
        }
        prop_assert!(plus.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenpairs_normalized_and_gauged(raw in coefficient_list(3), k in -3.0f64..3.0) {
        let v = hermitian_potential(1, &raw);
        let b = cubic(1, 12);
        let a = assemble_bloch_matrix(&b, &v, &[k]).unwrap();
        let first = solve_bands(&a, 4, &[k]).unwrap();
        let second = solve_bands(&a, 4, &[k]).unwrap();
        prop_assert_eq!(&first, &second);
        for p in &first {
            prop_assert!((norm(&p.coefficients) - 1.0).abs() <= 1e-12);
            let top = p.coefficients.iter().cloned().fold(C64::new(0.0, 0.0), |m, z| {
                if z.norm() > m.norm() { z } else { m }
            });
            prop_assert!(top.im == 0.0 && top.re > 0.0);
        }
        let s = CellSpectrum::new(&b, &v, &[k]).unwrap();
        if s.check_simple(1).is_ok() {
            let dk = s.derivatives(1).unwrap().dk_chi;
            prop_assert!(inner(&s.pair(1).unwrap().coefficients, &dk[0]).norm() <= 1e-12);
        }
    }
}

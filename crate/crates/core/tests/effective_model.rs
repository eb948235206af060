use std::f64::consts::TAU;

use effmass_core::bands::CellSpectrum;
use effmass_core::basis::PlaneWaveBasis;
use effmass_core::effective::{build_effective_model, check_ellipticity, EffectiveModel};
use effmass_core::lattice::LatticeSpec;
use effmass_core::potential::FourierPotential;
use effmass_core::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// int_0^1 ce_0(pi y)^4 / (int_0^1 ce_0(pi y)^2)^2 for q = 1/pi^2, from
// scipy.special.mathieu_cem sampled on 8192 points.
const MATHIEU_KAPPA_STAR: f64 = 1.0051118848874359;

fn mathieu(m: usize) -> CellSpectrum {
    let b = PlaneWaveBasis::new(&LatticeSpec::cubic(1).unwrap(), m).unwrap();
    CellSpectrum::new(&b, &FourierPotential::cosine(1, 1.0), &[0.0]).unwrap()
}

/// `int |chi|^4` with `chi(y) = sum_m c_m exp(2 pi i m y)` summed directly
/// on `n` uniform nodes.
fn quartic_by_summation(coeffs: &[C64], cutoff: i32, n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let y = j as f64 / n as f64;
            let chi: C64 = coeffs
                .iter()
                .zip(-cutoff..=cutoff)
                .map(|(c, m)| c * C64::from_polar(1.0, TAU * m as f64 * y))
                .sum();
            chi.norm_sqr().powi(2)
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn kappa_star_matches_quadrature_oracle() {
    let s = mathieu(24);
    let c = &s.pair(1).unwrap().coefficients;
    let fine = quartic_by_summation(c, 24, 8192);
    let coarse = quartic_by_summation(c, 24, 4096);
    assert!((fine - coarse).abs() < 1e-13);
    assert!((fine - MATHIEU_KAPPA_STAR).abs() < 1e-12);
    let model = EffectiveModel::from_spectrum(&s, 1, 1.0, 1, 1.0, 128).unwrap();
    assert!((model.kappa_star - fine).abs() <= 1e-12, "{}", model.kappa_star);
    let negative = EffectiveModel::from_spectrum(&s, 1, -1.0, 1, 1.0, 128).unwrap();
    assert_eq!(negative.kappa_star, -model.kappa_star);
}

#[test]
fn mathieu_band_minimum_is_elliptic() {
    let s = mathieu(24);
    let model = EffectiveModel::from_spectrum(&s, 1, 1.0, 1, 1.0, 128).unwrap();
    assert!(model.elliptic);
    assert!(model.is_critical(1e-12));
    let (ok, c) = check_ellipticity(&model.mass_tensor).unwrap();
    assert!(ok && (c - model.mass_tensor[0][0]).abs() < 1e-15);
    // second difference of E_1 at the minimum
    let b = s.basis().clone();
    let v = FourierPotential::cosine(1, 1.0);
    let e = |k: f64| CellSpectrum::new(&b, &v, &[k]).unwrap().pair(1).unwrap().energy;
    let d = 1e-3;
    assert!(e(d) - 2.0 * e(0.0) + e(-d) > 0.0);
}

#[test]
fn free_band_at_interior_points() {
    let b = PlaneWaveBasis::new(&LatticeSpec::cubic(1).unwrap(), 6).unwrap();
    for &(n, k) in &[(1, 0.4), (2, 0.4), (3, -1.1), (1, -2.5)] {
        let s = CellSpectrum::new(&b, &FourierPotential::zero(1), &[k]).unwrap();
        let m = EffectiveModel::from_spectrum(&s, n, 1.0, 1, 1.0, 32).unwrap();
        assert!((m.mass_tensor[0][0] - 1.0).abs() <= 1e-12);
        assert!((m.kappa_star - 1.0).abs() <= 1e-12);
    }
    let b2 = PlaneWaveBasis::new(&LatticeSpec::cubic(2).unwrap(), 3).unwrap();
    let s = CellSpectrum::new(&b2, &FourierPotential::zero(2), &[0.3, -0.7]).unwrap();
    let m = EffectiveModel::from_spectrum(&s, 1, 1.0, 2, 1.0, 16).unwrap();
    for j in 0..2 {
        for l in 0..2 {
            let want = if j == l { 1.0 } else { 0.0 };
            assert!((m.mass_tensor[j][l] - want).abs() <= 1e-12);
        }
    }
    assert!((m.kappa_star - 1.0).abs() <= 1e-12);
}

#[test]
fn model_round_trips_through_json() {
    let m = EffectiveModel::from_spectrum(&mathieu(16), 1, 1.0, 1, 1.0, 128).unwrap();
    let back: EffectiveModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
}

fn random_spectrum(d: usize, seed: u64, k: Vec<f64>) -> CellSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = FourierPotential::random(d, 2, 2.0, &mut rng);
    let m = if d == 1 { 12 } else { 4 };
    let b = PlaneWaveBasis::new(&LatticeSpec::cubic(d).unwrap(), m).unwrap();
    CellSpectrum::new(&b, &v, &k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonlinear_constant_obeys_cauchy_schwarz(seed in any::<u64>(), d in 1usize..3) {
        let s = random_spectrum(d, seed, vec![0.0; d]);
        let m = EffectiveModel::from_spectrum(&s, 1, 1.0, 1, 1.0, 4 * s.basis().cutoff() + 4).unwrap();
        prop_assert!(m.kappa_star >= 1.0 - 1e-12);
    }

    #[test]
    fn constants_are_gauge_invariant(seed in any::<u64>(), theta in 0.0f64..TAU, k in -3.0f64..3.0) {
        let s = random_spectrum(1, seed, vec![k]);
        prop_assume!(s.check_simple(1).is_ok());
        let q = 4 * s.basis().cutoff() + 4;
        let base = EffectiveModel::from_spectrum(&s, 1, 1.0, 1, 1.0, q).unwrap();
        let rot = C64::from_polar(1.0, theta);
        let mut pair = s.pair(1).unwrap().clone();
        pair.coefficients.iter_mut().for_each(|z| *z *= rot);
        let mut der = s.derivatives(1).unwrap();
        der.dk_chi.iter_mut().flatten().for_each(|z| *z *= rot);
        let turned = build_effective_model(&pair, &der, s.basis(), 1.0, 1, 1.0, q).unwrap();
        prop_assert!((turned.kappa_star - base.kappa_star).abs() <= 1e-12);
        prop_assert!((turned.energy - base.energy).abs() <= 1e-12);
        prop_assert!((turned.omega[0] - base.omega[0]).abs() <= 1e-12);
        prop_assert!((turned.mass_tensor[0][0] - base.mass_tensor[0][0]).abs() <= 1e-12);
    }

    #[test]
    fn quadrature_is_converged(seed in any::<u64>(), sigma in 1u32..3) {
        let s = random_spectrum(1, seed, vec![0.0]);
        let p = 4 * s.basis().cutoff() + 4;
        let a = EffectiveModel::from_spectrum(&s, 1, 1.0, sigma, 1.0, p).unwrap();
        let b = EffectiveModel::from_spectrum(&s, 1, 1.0, sigma, 1.0, 2 * p).unwrap();
        prop_assert!((a.kappa_star - b.kappa_star).abs() <= 1e-12);
    }
}

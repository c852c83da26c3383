// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use qwfluor::dynamics::{self, DensityMatrix, Liouvillian};
use qwfluor::fock::{self, CollectiveModelParams};
use qwfluor::spectra::{
    self, SpectrumKind, SpectrumMethod, SpectrumSeries, DEFAULT_GAMMA_F,
};
use qwfluor::Error;

fn steady(p: &CollectiveModelParams) -> (Liouvillian, DensityMatrix) {
    let l = dynamics::build_liouvillian(p).unwrap();
    let rho = dynamics::steady_state(&l).unwrap();
    (l, rho)
}

fn reference(dim: usize) -> CollectiveModelParams {
    CollectiveModelParams::new(0.1, 0.16, 0.45, 0.22).with_fock_dim(dim)
}

/// Independent deflated dense-resolvent values of the Fock-16 model.
const REFERENCE: [(f64, f64); 5] = [
    (-0.5, 0.15592336423894226),
    (0.0, 1.649022931652028),
    (0.1, 1.3312945768713784),
    (0.3, 0.9002830130440872),
    (1.0, 0.0061537580482705),
];

fn reference_grid() -> Vec<f64> {
    spectra::uniform_grid(-0.5, 1.0, 16)
}

fn value_at(s: &SpectrumSeries, x: f64) -> f64 {
    let k = s
        .delta_grid()
        .iter()
        .position(|g| (g - x).abs() < 1e-12)
        .expect("grid point");
    s.values()[k]
}

#[test]
fn incoherent_spectrum_matches_reference_for_every_route() {
    let (l, rho) = steady(&reference(16));
    let grid = reference_grid();
    for method in [SpectrumMethod::Auto, SpectrumMethod::Resolvent, SpectrumMethod::Eigen] {
        let s = spectra::incoherent_spectrum_with(&l, &rho, &grid, method).unwrap();
        assert_eq!(s.kind(), SpectrumKind::Internal);
        for (x, v) in REFERENCE {
            let got = value_at(&s, x);
            assert!((got - v).abs() < 1e-8 * v.max(1.0), "{method:?} at {x}: {got} vs {v}");
        }
    }
    let td = spectra::incoherent_spectrum_with(
        &l,
        &rho,
        &grid,
        SpectrumMethod::TimeDomain {
            step: 0.05,
            tau_max: None,
        },
    )
    .unwrap();
    for (x, v) in REFERENCE {
        assert!((value_at(&td, x) - v).abs() < 1e-3 * 1.65, "time domain at {x}");
    }
}

#[test]
fn correlation_matches_reference_and_relaxes_to_coherent_level() {
    let (l, rho) = steady(&reference(16));
    let taus: Vec<f64> = (0..=300).map(|k| 0.5 * k as f64).collect();
    let c = spectra::two_time_correlation(&l, &rho, &taus).unwrap();
    let v = c.values();
    assert_abs_diff_eq!(v[0].re, 0.3852682846954706, epsilon = 1e-10);
    assert_abs_diff_eq!(v[2].re, 0.37999434483036076, epsilon = 1e-9);
    assert_abs_diff_eq!(v[10].re, 0.3016782338183867, epsilon = 1e-9);
    assert_abs_diff_eq!(c.coherent_level(), 0.22988143821627474, epsilon = 1e-10);
    assert!(c.tail_residual() < 1e-6 * v[0].re);
    assert!(v.iter().all(|z| z.norm() <= v[0].re + 1e-10));
}

#[test]
fn short_tau_grid_is_rejected() {
    let (l, rho) = steady(&reference(12));
    let taus: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
    let err = spectra::two_time_correlation(&l, &rho, &taus).unwrap_err();
    assert!(matches!(err, Error::GridTooShort { .. }));
    assert!(matches!(
        spectra::two_time_correlation(&l, &rho, &[0.5, 1.0]),
        Err(Error::InvalidGrid(_))
    ));
}

#[test]
fn linear_mode_is_coherent() {
    let p = CollectiveModelParams::new(0.05, 0.04, 0.0, 0.2).with_fock_dim(10);
    let (l, rho) = steady(&p);
    let alpha = -0.04 / Complex64::new(0.05, -0.1);
    let taus: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
    let c = spectra::two_time_correlation(&l, &rho, &taus).unwrap();
    for z in c.values() {
        assert!((z - alpha.norm_sqr()).norm() < 1e-10);
    }
    let grid = spectra::uniform_grid(-1.0, 1.0, 201);
    let inc = spectra::incoherent_spectrum(&l, &rho, &grid).unwrap();
    assert!(inc.values().iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn rayleigh_line_carries_coherent_weight() {
    let p = CollectiveModelParams::new(0.05, 0.04, 0.0, 0.2).with_fock_dim(10);
    let (l, rho) = steady(&p);
    let weight = (-0.04 / Complex64::new(0.05, -0.1)).norm_sqr();
    let half = 1.5;
    let grid = spectra::uniform_grid(-half, half, 20001);
    let s = spectra::internal_spectrum_with_rayleigh(&l, &rho, &grid, DEFAULT_GAMMA_F).unwrap();
    let inside = weight * 2.0 / std::f64::consts::PI * (2.0 * half / DEFAULT_GAMMA_F).atan();
    assert!((s.integral() - inside).abs() < 1e-4 * weight);
    assert!(s.peak().0.abs() < 1e-12);
}

#[test]
fn full_convolution_preserves_area_of_wide_lines() {
    let grid = spectra::uniform_grid(-3.0, 3.0, 3001);
    let line: Vec<f64> = grid.iter().map(|&x| spectra::lorentzian(x, 0.2, 0.3)).collect();
    let conv = spectra::convolve_lorentzian(&grid, &line, DEFAULT_GAMMA_F);
    let area = |v: &[f64]| SpectrumSeries::new(grid.clone(), v.to_vec(), SpectrumKind::Internal).unwrap().integral();
    assert!((area(&conv) - area(&line)).abs() < 5e-3 * area(&line));
    // Convolving two Lorentzians adds their widths.
    let expect = spectra::lorentzian(0.2, 0.2, 0.3 + DEFAULT_GAMMA_F);
    assert!((conv[1600] - expect).abs() < 2e-3 * expect);
}

#[test]
fn lorentzian_is_normalized() {
    let fwhm = 0.2;
    assert_abs_diff_eq!(spectra::lorentzian(0.0, 0.0, fwhm), 2.0 / (std::f64::consts::PI * fwhm), epsilon = 1e-12);
    assert_abs_diff_eq!(
        spectra::lorentzian(0.1, 0.0, fwhm),
        0.5 * spectra::lorentzian(0.0, 0.0, fwhm),
        epsilon = 1e-12
    );
}

#[test]
fn spectrum_series_validation() {
    assert!(matches!(
        SpectrumSeries::new(vec![0.0, 1.0, 3.0], vec![1.0; 3], SpectrumKind::Internal),
        Err(Error::InvalidGrid(_))
    ));
    assert!(SpectrumSeries::new(vec![0.0, 1.0, 3.0], vec![1.0; 3], SpectrumKind::Experimental).is_ok());
    assert!(matches!(
        SpectrumSeries::new(vec![0.0, 1.0], vec![1.0, -0.5], SpectrumKind::Internal),
        Err(Error::ModelInconsistency { .. })
    ));
    assert!(matches!(
        SpectrumSeries::new(vec![0.0, 1.0], vec![1.0], SpectrumKind::Internal),
        Err(Error::GridMismatch(_))
    ));
    let s = SpectrumSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 4.0], SpectrumKind::Internal).unwrap();
    assert_eq!(s.interpolate(1.5), Some(3.0));
    assert_eq!(s.interpolate(2.5), None);
    assert_abs_diff_eq!(s.integral(), 4.0, epsilon = 1e-15);
}

#[test]
fn asymmetry_of_mirror_symmetric_and_shifted_lines() {
    let grid = spectra::uniform_grid(-1.0, 1.0, 401);
    let make = |c: f64| {
        let v = grid.iter().map(|&x| spectra::lorentzian(x, c, 0.2)).collect();
        SpectrumSeries::new(grid.clone(), v, SpectrumKind::Internal).unwrap()
    };
    assert!(spectra::asymmetry(&make(0.0)).unwrap() < 1e-12);
    assert!(spectra::asymmetry(&make(0.2)).unwrap() > 0.3);
    let one_sided = SpectrumSeries::new(vec![0.1, 0.2], vec![1.0, 1.0], SpectrumKind::Internal).unwrap();
    assert!(spectra::asymmetry(&one_sided).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn incoherent_spectrum_is_nonnegative(
        delta in -0.5f64..0.5,
        rabi in 0.0f64..0.2,
        kerr in -0.6f64..0.6,
        gamma in 0.1f64..0.5,
    ) {
        let p = CollectiveModelParams::new(delta, rabi, kerr, gamma).with_fock_dim(12);
        let (l, rho) = steady(&p);
        let grid = spectra::uniform_grid(-1.5, 1.5, 61);
        let s = spectra::incoherent_spectrum(&l, &rho, &grid).unwrap();
        let n = fock::expectation(&fock::number(12).unwrap(), &rho).unwrap().re;
        prop_assert!(s.values().iter().all(|v| *v >= -1e-10 * n.max(1e-300)));
    }

    #[test]
    fn correlation_starts_at_occupation(
        delta in -0.5f64..0.5,
        rabi in 0.01f64..0.2,
        kerr in -0.6f64..0.6,
    ) {
        let p = CollectiveModelParams::new(delta, rabi, kerr, 0.3).with_fock_dim(10);
        let (l, rho) = steady(&p);
        let taus: Vec<f64> = (0..=400).map(|k| k as f64).collect();
        let c = spectra::two_time_correlation(&l, &rho, &taus).unwrap();
        let n = fock::expectation(&fock::number(10).unwrap(), &rho).unwrap().re;
        prop_assert!((c.values()[0].re - n).abs() < 1e-10);
        prop_assert!(c.values()[0].im.abs() < 1e-10);
    }
}

// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qwfluor::dynamics;
use qwfluor::fock::{self, CollectiveModelParams};
use qwfluor::medium::{self, AbsorptionMode, MediumParams};
use qwfluor::spectra::{self, SpectrumKind, SpectrumSeries, DEFAULT_GAMMA_F};
use qwfluor::Error;

fn slab(f: f64, delta_res: f64, gamma: f64, s: f64) -> MediumParams {
    MediumParams::new(f, delta_res, gamma)
        .with_mode(AbsorptionMode::Slab)
        .with_slab_phase_thickness(s)
}

#[test]
fn slab_absorption_matches_reference() {
    let m = slab(1.5, 0.1, 0.2, 0.1);
    let expected = [
        (-0.2, 0.19672131147540972),
        (0.05, 0.4615384615384615),
        (0.1, 0.48),
        (0.4, 0.19672131147540972),
    ];
    for (x, a) in expected {
        assert_abs_diff_eq!(medium::absorption_at(x, &m).unwrap(), a, epsilon = 1e-14);
    }
}

#[test]
fn thin_film_line_shape() {
    let m = MediumParams::new(0.8, 0.1, 0.2).with_a_max(0.9);
    let peak = 0.9 * 0.8;
    assert_abs_diff_eq!(medium::absorption_at(0.1, &m).unwrap(), peak, epsilon = 1e-15);
    assert_abs_diff_eq!(medium::absorption_at(0.2, &m).unwrap(), peak / 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(medium::absorption_at(0.0, &m).unwrap(), peak / 2.0, epsilon = 1e-15);
    let grid = spectra::uniform_grid(-400.0, 400.0, 800_001);
    let a = medium::absorption(&grid, &m).unwrap();
    assert_eq!(a.kind(), SpectrumKind::Absorption);
    let area = peak * std::f64::consts::PI * 0.2 / 2.0;
    assert!((a.integral() - area).abs() < 1e-3 * area);
}

#[test]
fn absorption_at_laser_frequency_falls_with_detuning() {
    let mut last = f64::INFINITY;
    for k in 0..20 {
        let m = MediumParams::new(1.0, 0.02 * k as f64, 0.2);
        let a0 = medium::absorption_at(0.0, &m).unwrap();
        assert!(a0 < last);
        last = a0;
    }
}

#[test]
fn output_spectrum_is_scaled_filtered_internal_spectrum() {
    let p = CollectiveModelParams::new(0.09, 0.16, 0.45, 0.22).with_fock_dim(16);
    let l = dynamics::build_liouvillian(&p).unwrap();
    let rho = dynamics::steady_state(&l).unwrap();
    let grid = spectra::uniform_grid(-1.5, 1.5, 121);
    let internal = spectra::internal_spectrum_with_rayleigh(&l, &rho, &grid, DEFAULT_GAMMA_F).unwrap();
    let inc = spectra::incoherent_spectrum(&l, &rho, &grid).unwrap();
    let coh = fock::expectation(&fock::annihilation(16).unwrap(), &rho).unwrap().norm_sqr();
    for mode in [AbsorptionMode::ThinFilmProportional, AbsorptionMode::Slab] {
        let m = MediumParams::matching(&p, 0.9)
            .with_mode(mode)
            .with_scale(2.5)
            .with_background(0.01);
        let out = medium::output_spectrum(&internal, &m).unwrap();
        assert_eq!(out.kind(), SpectrumKind::Output);
        for (k, &x) in grid.iter().enumerate() {
            let a = medium::absorption_at(x, &m).unwrap();
            let s_w = inc.values()[k] + coh * spectra::lorentzian(x, 0.0, DEFAULT_GAMMA_F);
            let expect = 2.5 * a * s_w + 0.01;
            assert!((out.values()[k] - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }
    let absorption = medium::absorption(&grid, &MediumParams::matching(&p, 1.0)).unwrap();
    assert!(matches!(
        medium::output_spectrum(&absorption, &MediumParams::matching(&p, 1.0)),
        Err(Error::GridMismatch(_))
    ));
}

#[test]
fn unphysical_media_are_rejected() {
    let too_strong = MediumParams::new(2.0, 0.1, 0.2).with_a_max(0.9);
    assert!(matches!(too_strong.validate(), Err(Error::ModelInconsistency { .. })));
    assert!(MediumParams::new(1.0, 0.1, 0.0).validate().is_err());
    assert!(MediumParams::new(-1.0, 0.1, 0.2).validate().is_err());
    assert!(MediumParams::new(1.0, 0.1, 0.2).with_a_max(1.5).validate().is_err());
    assert!(MediumParams::new(1.0, 0.1, 0.2).with_scale(0.0).validate().is_err());
    assert!(MediumParams::new(1.0, 0.1, 0.2).with_background(-1.0).validate().is_err());
    assert!(MediumParams::new(1.0, f64::NAN, 0.2).validate().is_err());
    // Strong slab coupling stays physical.
    assert!(slab(50.0, 0.1, 0.2, 0.1).validate().is_ok());
}

#[test]
fn susceptibility_is_a_complex_lorentzian() {
    let m = MediumParams::new(2.0, 0.1, 0.2);
    let chi = medium::susceptibility(0.1, &m);
    assert_abs_diff_eq!(chi.re, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(chi.im, 2.0 / 0.1, epsilon = 1e-12);
    assert!(medium::susceptibility(0.3, &m).re > 0.0);
}

#[test]
fn medium_round_trips_through_toml() {
    let m = slab(0.7, 0.08, 0.15, 0.2).with_scale(3.0);
    let back: MediumParams = toml::from_str(&toml::to_string(&m).unwrap()).unwrap();
    assert_eq!(m, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn slab_absorption_is_a_probability(
        f in 0.0f64..100.0,
        delta_res in -1.0f64..1.0,
        gamma in 1e-3f64..2.0,
        s in 0.0f64..5.0,
        x in -3.0f64..3.0,
    ) {
        let m = slab(f, delta_res, gamma, s);
        let a = medium::absorption_at(x, &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let hw = gamma / 2.0;
        let closed = s * f * gamma / ((x - delta_res).powi(2) + (hw + s * f).powi(2));
        prop_assert!((a - closed).abs() < 1e-12);
    }

    #[test]
    fn thin_film_never_exceeds_its_peak(
        f in 0.0f64..1.0,
        a_max in 0.01f64..1.0,
        delta_res in -1.0f64..1.0,
        gamma in 1e-3f64..2.0,
        x in -3.0f64..3.0,
    ) {
        let m = MediumParams::new(f, delta_res, gamma).with_a_max(a_max);
        let a = medium::absorption_at(x, &m).unwrap();
        prop_assert!(a >= 0.0 && a <= a_max * f + 1e-15);
    }

    #[test]
    fn output_is_linear_in_scale(scale in 1e-3f64..1e3, bg in 0.0f64..1.0) {
        let grid = spectra::uniform_grid(-1.0, 1.0, 41);
        let values: Vec<f64> = grid.iter().map(|&x| spectra::lorentzian(x, 0.05, 0.3)).collect();
        let internal = SpectrumSeries::new(grid.clone(), values, SpectrumKind::Internal).unwrap();
        let base = MediumParams::new(0.5, 0.1, 0.2);
        let one = medium::output_spectrum(&internal, &base).unwrap();
        let scaled = medium::output_spectrum(&internal, &base.with_scale(scale).with_background(bg)).unwrap();
        for (u, v) in one.values().iter().zip(scaled.values()) {
            prop_assert!((scale * u + bg - v).abs() < 1e-12 * (scale * u + bg).max(1.0));
        }
    }
}

// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lorentz-oscillator susceptibility of the quantum well, its absorption, and
//! the observable spectrum `S(Δ) = scale · a(Δ) · S_W(Δ) + background`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::CollectiveModelParams;
use crate::spectra::{SpectrumKind, SpectrumSeries};

const PHYSICAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionMode {
    /// `a = a_max · f · (Γ/2)² / ((Δ − δ_res)² + (Γ/2)²)`, i.e. proportional to
    /// `Im χ` with peak `a_max · f`.
    #[default]
    ThinFilmProportional,
    /// Radiatively coupled sheet: `ξ = s χ`, `r = iξ/(1 − iξ)`, `t = 1 + r`.
    Slab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams {
    /// Oscillator strength, arbitrary units.
    pub f: f64,
    /// Oscillator resonance minus laser frequency, meV.
    pub delta_res: f64,
    /// Oscillator width, meV.
    pub gamma: f64,
    #[serde(default)]
    pub mode: AbsorptionMode,
    /// Dimensionless coupling `s` of the slab mode.
    #[serde(default = "default_slab_phase_thickness")]
    pub slab_phase_thickness: f64,
    /// Peak absorption scale of the thin-film mode.
    #[serde(default = "default_a_max")]
    pub a_max: f64,
    #[serde(default)]
    pub background: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_slab_phase_thickness() -> f64 {
    0.1
}

fn default_a_max() -> f64 {
    0.9
}

fn default_scale() -> f64 {
    1.0
}

impl MediumParams {
    pub fn new(f: f64, delta_res: f64, gamma: f64) -> Self {
        MediumParams {
            f,
            delta_res,
            gamma,
            mode: AbsorptionMode::default(),
            slab_phase_thickness: default_slab_phase_thickness(),
            a_max: default_a_max(),
            background: 0.0,
            scale: default_scale(),
        }
    }

    /// Oscillator sharing resonance and width with the exciton model.
    pub fn matching(model: &CollectiveModelParams, f: f64) -> Self {
        Self::new(f, model.delta, model.gamma)
    }

    pub fn with_mode(mut self, mode: AbsorptionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_a_max(mut self, a_max: f64) -> Self {
        self.a_max = a_max;
        self
    }

    pub fn with_slab_phase_thickness(mut self, s: f64) -> Self {
        self.slab_phase_thickness = s;
        self
    }

    pub fn with_background(mut self, background: f64) -> Self {
        self.background = background;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("f", self.f),
            ("delta_res", self.delta_res),
            ("gamma", self.gamma),
            ("slab_phase_thickness", self.slab_phase_thickness),
            ("a_max", self.a_max),
            ("background", self.background),
            ("scale", self.scale),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, v, "must be finite"));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", self.gamma, "must be positive"));
        }
        if self.f < 0.0 {
            return Err(Error::param("f", self.f, "must be non-negative"));
        }
        if !(self.a_max > 0.0 && self.a_max <= 1.0) {
            return Err(Error::param("a_max", self.a_max, "must lie in (0, 1]"));
        }
        if self.background < 0.0 {
            return Err(Error::param("background", self.background, "must be non-negative"));
        }
        if self.scale <= 0.0 {
            return Err(Error::param("scale", self.scale, "must be positive"));
        }
        if self.slab_phase_thickness < 0.0 {
            return Err(Error::param(
                "slab_phase_thickness",
                self.slab_phase_thickness,
                "must be non-negative",
            ));
        }
        if self.mode == AbsorptionMode::ThinFilmProportional && self.a_max * self.f > 1.0 + PHYSICAL_TOL {
            return Err(Error::ModelInconsistency {
                delta: self.delta_res,
                value: self.a_max * self.f,
            });
        }
        Ok(())
    }
}

/// `χ(Δ) = f / (Δ − δ_res − iΓ/2)`.
pub fn susceptibility(delta: f64, m: &MediumParams) -> Complex64 {
    m.f / Complex64::new(delta - m.delta_res, -m.gamma / 2.0)
}

/// Absorption at one detuning.
pub fn absorption_at(delta: f64, m: &MediumParams) -> Result<f64> {
    match m.mode {
        AbsorptionMode::ThinFilmProportional => {
            let hw = m.gamma / 2.0;
            Ok(m.a_max * m.f * hw * hw / ((delta - m.delta_res).powi(2) + hw * hw))
        }
        AbsorptionMode::Slab => {
            let xi = susceptibility(delta, m) * m.slab_phase_thickness;
            let i_xi = Complex64::i() * xi;
            let r = i_xi / (1.0 - i_xi);
            let t = 1.0 + r;
            let a = 1.0 - t.norm_sqr() - r.norm_sqr();
            if !(-PHYSICAL_TOL..=1.0 + PHYSICAL_TOL).contains(&a) {
                return Err(Error::ModelInconsistency { delta, value: a });
            }
            Ok(a.clamp(0.0, 1.0))
        }
    }
}

pub fn absorption(delta_grid: &[f64], m: &MediumParams) -> Result<SpectrumSeries> {
    m.validate()?;
    let values = delta_grid
        .iter()
        .map(|&x| absorption_at(x, m))
        .collect::<Result<Vec<_>>>()?;
    SpectrumSeries::new(delta_grid.to_vec(), values, SpectrumKind::Absorption)
}

/// `scale · a(Δ) · S_W(Δ) + background`, pointwise on the internal grid.
pub fn output_spectrum(internal: &SpectrumSeries, m: &MediumParams) -> Result<SpectrumSeries> {
    if internal.kind() != SpectrumKind::Internal {
        return Err(Error::GridMismatch(format!(
            "output spectrum needs an internal spectrum, got {:?}",
            internal.kind()
        )));
    }
    let a = absorption(internal.delta_grid(), m)?;
    let values = a
        .values()
        .iter()
        .zip(internal.values())
        .map(|(a, s)| m.scale * a * s + m.background)
        .collect();
    SpectrumSeries::new(internal.delta_grid().to_vec(), values, SpectrumKind::Output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::uniform_grid;

    #[test]
    fn on_resonance_susceptibility() {
        let m = MediumParams::new(1.0, 0.1, 0.22);
        let chi = susceptibility(0.1, &m);
        assert!(chi.re.abs() < 1e-15);
        assert!((chi.im - 9.090_909_090_909_09).abs() < 1e-12);
        let far = susceptibility(100.0, &m);
        assert!((far.norm() * (100.0 - 0.1) - 1.0).abs() < 1e-5);
        assert_eq!(susceptibility(0.3, &MediumParams::new(0.0, 0.1, 0.22)).norm(), 0.0);
    }

    #[test]
    fn thin_film_half_width() {
        let m = MediumParams::new(1.0, 0.1, 0.22).with_a_max(1.0);
        assert!((absorption_at(0.1, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((absorption_at(0.21, &m).unwrap() - 0.5).abs() < 1e-12);
        assert!((absorption_at(-0.01, &m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn slab_unit_coupling_absorbs_half() {
        let m = MediumParams::new(1.0, 0.1, 0.22)
            .with_mode(AbsorptionMode::Slab)
            .with_slab_phase_thickness(0.11);
        let xi = susceptibility(0.1, &m) * m.slab_phase_thickness;
        assert!((xi - Complex64::i()).norm() < 1e-14);
        assert!((absorption_at(0.1, &m).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transparent_medium() {
        let grid = uniform_grid(-1.0, 1.0, 11);
        for mode in [AbsorptionMode::ThinFilmProportional, AbsorptionMode::Slab] {
            let m = MediumParams::new(0.0, 0.1, 0.22).with_mode(mode);
            let a = absorption(&grid, &m).unwrap();
            assert!(a.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn slab_matches_closed_form() {
        // a = sfΓ / ((Δ − δ)² + (Γ/2 + sf)²)
        let m = MediumParams::new(0.9, 0.09, 0.22)
            .with_mode(AbsorptionMode::Slab)
            .with_slab_phase_thickness(0.1);
        for x in [-0.4, 0.0, 0.09, 0.3] {
            let sf: f64 = 0.09;
            let expect = sf * 0.22 / ((x - 0.09_f64).powi(2) + (0.11 + sf).powi(2));
            assert!((absorption_at(x, &m).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn validation_rejects_unphysical_input() {
        let base = MediumParams::new(1.0, 0.1, 0.22);
        assert!(base.validate().is_ok());
        assert!(MediumParams { gamma: 0.0, ..base }.validate().is_err());
        assert!(MediumParams { f: -1.0, ..base }.validate().is_err());
        assert!(base.with_a_max(1.5).validate().is_err());
        assert!(base.with_scale(0.0).validate().is_err());
        assert!(base.with_background(-1.0).validate().is_err());
        assert!(matches!(
            MediumParams { f: 2.0, ..base }.validate(),
            Err(Error::ModelInconsistency { .. })
        ));
    }

    #[test]
    fn opaque_free_output_is_background() {
        let grid = uniform_grid(-1.0, 1.0, 5);
        let internal = SpectrumSeries::new(grid, vec![1.0, 2.0, 3.0, 2.0, 1.0], SpectrumKind::Internal).unwrap();
        let m = MediumParams::new(0.0, 0.1, 0.22).with_background(0.3);
        let out = output_spectrum(&internal, &m).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.3));
        let abs = absorption(internal.delta_grid(), &m).unwrap();
        assert!(output_spectrum(&abs, &m).is_err());
    }
}

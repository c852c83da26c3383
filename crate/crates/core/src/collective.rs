// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Few-mode exciton model solved by brute force, its reduction to the single
//! collective mode, and the superfluorescence ratio test on fitted parameters.
//!
//! The oracle Hamiltonian in the laser frame is
//!
//! ```text
//! H = Σ_n [δ a_n†a_n + Ω (a_n e^{iφ_n} + a_n† e^{−iφ_n})] + G Σ_{n,k} a_n†a_k†a_k a_n
//! ```
//!
//! with independent decay `Γ` on every mode and `Â = N^{-1/2} Σ_n a_n`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DensityMatrix, LindbladModel, Liouvillian};
use crate::error::{Error, Result};
use crate::fock::{self, CollectiveModelParams};
use crate::linalg::{self, c, CMat};
use crate::spectra::{self, SpectrumMethod, SpectrumSeries};

/// Largest total Hilbert dimension `dᴺ` the oracle accepts.
pub const ORACLE_DIM_LIMIT: usize = 4096;
/// Largest population allowed in the top Fock level of any mode.
pub const ORACLE_TAIL_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiModeParams {
    pub n_modes: usize,
    /// Single-exciton Rabi coupling `|Ω_R|`, meV.
    pub rabi_single: f64,
    /// Drive phase of every exciton, radians.
    pub phases: Vec<f64>,
    /// Pair interaction `G`, meV.
    pub kerr_single: f64,
    pub delta: f64,
    pub gamma: f64,
    pub dim_per_mode: usize,
}

impl MultiModeParams {
    /// `n_modes` excitons driven in phase.
    pub fn in_phase(
        n_modes: usize,
        rabi_single: f64,
        kerr_single: f64,
        delta: f64,
        gamma: f64,
        dim_per_mode: usize,
    ) -> Self {
        MultiModeParams {
            n_modes,
            rabi_single,
            phases: vec![0.0; n_modes],
            kerr_single,
            delta,
            gamma,
            dim_per_mode,
        }
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Self {
        self.phases = phases;
        self
    }

    pub fn total_dim(&self) -> Option<usize> {
        u32::try_from(self.n_modes)
            .ok()
            .and_then(|n| self.dim_per_mode.checked_pow(n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
        }
        if self.phases.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                actual: self.phases.len(),
            });
        }
        for (name, v) in [
            ("rabi_single", self.rabi_single),
            ("kerr_single", self.kerr_single),
            ("delta", self.delta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, v, "must be finite"));
            }
        }
        if let Some(p) = self.phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::param("phases", *p, "must be finite"));
        }
        if self.rabi_single < 0.0 {
            return Err(Error::param("rabi_single", self.rabi_single, "must be non-negative"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", self.gamma, "must be positive"));
        }
        if self.dim_per_mode < 2 {
            return Err(Error::InvalidDimension {
                dim: self.dim_per_mode,
            });
        }
        match self.total_dim() {
            Some(d) if d <= ORACLE_DIM_LIMIT => Ok(()),
            other => Err(Error::ScaleGuard {
                dim: other.unwrap_or(usize::MAX),
                limit: ORACLE_DIM_LIMIT,
            }),
        }
    }
}

/// Collective parameters: `Ω′ = |Σ e^{iφ_n}| |Ω| / √N`, `G′ = N G`, with δ and
/// Γ unchanged.
pub fn collective_reduce(m: &MultiModeParams) -> CollectiveModelParams {
    let n = m.n_modes as f64;
    let sum: Complex64 = m.phases.iter().map(|p| Complex64::from_polar(1.0, *p)).sum();
    CollectiveModelParams::new(m.delta, sum.norm() * m.rabi_single / n.sqrt(), n * m.kerr_single, m.gamma)
}

/// `N` phases drawn uniformly from `[0, 2π)`.
pub fn random_phases<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

/// Few-mode operators on the product space; mode 0 is the slowest index.
struct ModeSpace {
    dim: usize,
    modes: Vec<CMat>,
}

impl ModeSpace {
    fn new(n_modes: usize, d: usize) -> Result<Self> {
        let a = fock::annihilation(d)?.entries().clone();
        let id = CMat::eye(d);
        let modes = (0..n_modes)
            .map(|k| {
                let mut op = if k == 0 { a.clone() } else { id.clone() };
                for j in 1..n_modes {
                    op = linalg::kron(&op, if j == k { &a } else { &id });
                }
                op
            })
            .collect();
        Ok(ModeSpace {
            dim: d.pow(n_modes as u32),
            modes,
        })
    }

    fn collective(&self) -> CMat {
        let n = self.modes.len() as f64;
        let mut a = CMat::zeros((self.dim, self.dim));
        for m in &self.modes {
            a += m;
        }
        a * c(1.0 / n.sqrt())
    }
}

/// Multi-mode model and collective operator, ready for the dynamics module.
pub struct MultiModeSystem {
    pub liouvillian: Liouvillian,
    /// `Â = N^{-1/2} Σ a_n` on the product space.
    pub collective: CMat,
    modes: Vec<CMat>,
    dim_per_mode: usize,
}

pub fn build_multimode(m: &MultiModeParams) -> Result<MultiModeSystem> {
    m.validate()?;
    let space = ModeSpace::new(m.n_modes, m.dim_per_mode)?;
    let dim = space.dim;
    let mut h = CMat::zeros((dim, dim));
    let mut n_tot = CMat::zeros((dim, dim));
    for (a, phi) in space.modes.iter().zip(&m.phases) {
        let ad = linalg::dagger(a);
        let n = ad.dot(a);
        n_tot += &n;
        h += &(&n * c(m.delta));
        let e = Complex64::from_polar(m.rabi_single, *phi);
        h += &(a * e + &ad * e.conj());
    }
    // Σ_{n,k} a_n†a_k†a_k a_n, summed literally over mode pairs.
    let mut kerr = CMat::zeros((dim, dim));
    for an in &space.modes {
        let and = linalg::dagger(an);
        for ak in &space.modes {
            let akd = linalg::dagger(ak);
            kerr += &and.dot(&akd).dot(ak).dot(an);
        }
    }
    h += &(kerr * c(m.kerr_single));
    let model = LindbladModel {
        hamiltonian: h,
        jumps: space.modes.iter().map(|a| (m.gamma, a.clone())).collect(),
    };
    Ok(MultiModeSystem {
        liouvillian: Liouvillian::from_model(&model)?,
        collective: space.collective(),
        modes: space.modes,
        dim_per_mode: m.dim_per_mode,
    })
}

/// Steady-state observables of the brute-force model.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// `⟨Â†Â⟩_ss`.
    pub occupation_collective: f64,
    /// `⟨Â⟩_ss`.
    pub mean_field: Complex64,
    /// `⟨a_n†a_n⟩_ss` per mode.
    pub mode_occupations: Vec<f64>,
    /// Largest top-level population over the modes.
    pub max_tail: f64,
    /// Incoherent spectrum of `Â`.
    pub spectrum: SpectrumSeries,
}

/// Solves the few-mode master equation and evaluates the collective mode.
pub fn oracle_multimode_steady(m: &MultiModeParams, delta_grid: &[f64]) -> Result<OracleResult> {
    let sys = build_multimode(m)?;
    let rho = dynamics::steady_state(&sys.liouvillian)?;
    let max_tail = sys.max_tail(&rho);
    if max_tail > ORACLE_TAIL_LIMIT {
        let mode = (0..sys.modes.len())
            .max_by(|a, b| sys.tail(&rho, *a).total_cmp(&sys.tail(&rho, *b)))
            .unwrap_or(0);
        return Err(Error::TruncationTail {
            mode,
            population: max_tail,
            limit: ORACLE_TAIL_LIMIT,
        });
    }
    let a = &sys.collective;
    let r = rho.entries();
    let mean_field = linalg::trace(&a.dot(r));
    let occupation_collective = linalg::trace(&linalg::dagger(a).dot(a).dot(r)).re;
    let mode_occupations = sys
        .modes
        .iter()
        .map(|an| linalg::trace(&linalg::dagger(an).dot(an).dot(r)).re)
        .collect();
    let spectrum =
        spectra::incoherent_spectrum_for(&sys.liouvillian, &rho, a, delta_grid, SpectrumMethod::Auto)?;
    Ok(OracleResult {
        occupation_collective,
        mean_field,
        mode_occupations,
        max_tail,
        spectrum,
    })
}

impl MultiModeSystem {
    /// Population of the top Fock level of mode `k`.
    pub fn tail(&self, rho: &DensityMatrix, k: usize) -> f64 {
        let d = self.dim_per_mode;
        let n = self.modes.len();
        let stride = d.pow((n - 1 - k) as u32);
        rho.populations()
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride) % d == d - 1)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn max_tail(&self, rho: &DensityMatrix) -> f64 {
        (0..self.modes.len())
            .map(|k| self.tail(rho, k))
            .fold(0.0, f64::max)
    }
}

/// Classification thresholds of the superfluorescence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfThresholds {
    /// Band around 1 that counts as random-phase scaling.
    pub margin: f64,
    /// Largest relative disagreement between both ratios that still counts as
    /// superfluorescent.
    pub threshold_sf: f64,
}

impl Default for SfThresholds {
    fn default() -> Self {
        SfThresholds {
            margin: 0.15,
            threshold_sf: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SfClass {
    Superfluorescent,
    RandomPhase,
    Partial,
}

impl std::fmt::Display for SfClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SfClass::Superfluorescent => "superfluorescent",
            SfClass::RandomPhase => "random_phase",
            SfClass::Partial => "partial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfReport {
    pub power_1: f64,
    pub power_2: f64,
    pub rabi_1: f64,
    pub rabi_2: f64,
    pub kerr_1: f64,
    pub kerr_2: f64,
    /// `(P₁/P₂)(Ω′₂/Ω′₁)²`.
    pub lhs: f64,
    /// `G′₂/G′₁`.
    pub kerr_ratio: f64,
    /// `|lhs − kerr_ratio| / kerr_ratio`.
    pub agreement: f64,
    pub classification: SfClass,
}

/// Compares two fitted power points. Both must carry a laser power.
pub fn sf_ratio(
    fit_1: &CollectiveModelParams,
    fit_2: &CollectiveModelParams,
    thresholds: SfThresholds,
) -> Result<SfReport> {
    let power = |p: &CollectiveModelParams, which: &str| {
        p.laser_power
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| Error::InvalidFit(format!("fit {which} lacks a positive laser power")))
    };
    let (p1, p2) = (power(fit_1, "1")?, power(fit_2, "2")?);
    for (name, v) in [
        ("rabi of fit 1", fit_1.rabi),
        ("rabi of fit 2", fit_2.rabi),
        ("kerr of fit 1", fit_1.kerr),
        ("kerr of fit 2", fit_2.kerr),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidFit(format!("{name} must be positive, got {v}")));
        }
    }
    if !(thresholds.margin >= 0.0 && thresholds.threshold_sf >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid thresholds {thresholds:?}")));
    }
    let lhs = (p1 / p2) * (fit_2.rabi / fit_1.rabi).powi(2);
    let kerr_ratio = fit_2.kerr / fit_1.kerr;
    let agreement = (lhs - kerr_ratio).abs() / kerr_ratio;
    let classification = if agreement < thresholds.threshold_sf && lhs > 1.0 + thresholds.margin {
        SfClass::Superfluorescent
    } else if (lhs - 1.0).abs() < thresholds.margin {
        SfClass::RandomPhase
    } else {
        SfClass::Partial
    };
    Ok(SfReport {
        power_1: p1,
        power_2: p2,
        rabi_1: fit_1.rabi,
        rabi_2: fit_2.rabi,
        kerr_1: fit_1.kerr,
        kerr_2: fit_2.kerr,
        lhs,
        kerr_ratio,
        agreement,
        classification,
    })
}

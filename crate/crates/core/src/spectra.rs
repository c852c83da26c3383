// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Stationary two-time correlations via the quantum regression theorem and the
//! Wiener-Khintchine emission spectrum.
//!
//! With `v = vec(ρ_ss Â† − ⟨Â†⟩ρ_ss)` and `w` the stacked form of `X ↦ Tr[Â X]`,
//!
//! ```text
//! C(τ) − |⟨Â⟩|² = w · e^{Lτ} v
//! S_inc(Δ)      = 2 Re ∫₀^∞ e^{−iΔτ} w · e^{Lτ} v dτ = −2 Re w · (L − iΔ)⁻¹ v
//! ```

use std::f64::consts::PI;

use ndarray_linalg::{Eig, FactorizeInto, Solve};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DensityMatrix, Liouvillian, Propagator};
use crate::error::{Error, Result};
use crate::fock;
use crate::linalg::{self, c, BandedLu, CMat, CVec, ZERO};

/// Relative tail residual allowed at the end of a correlation grid.
pub const TAIL_TOL: f64 = 1e-6;
/// Allowed negativity of a spectrum relative to its maximum.
pub const NEGATIVITY_TOL: f64 = 1e-8;
/// Relative spacing tolerance of a uniform grid.
pub const UNIFORM_TOL: f64 = 1e-12;
/// Detector resolution used in the published comparison, meV.
pub const DEFAULT_GAMMA_F: f64 = 0.0107;

/// Default detuning window: `[-1.5, 1.5]` meV with 2001 points.
pub fn default_delta_grid() -> Vec<f64> {
    uniform_grid(-1.5, 1.5, 2001)
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + h * k as f64 })
        .collect()
}

/// Unit-area Lorentzian of full width at half maximum `fwhm`.
pub fn lorentzian(delta: f64, center: f64, fwhm: f64) -> f64 {
    let hw = fwhm / 2.0;
    hw / PI / ((delta - center).powi(2) + hw * hw)
}

/// Stationary correlation `C(τ) = ⟨Â†(t)Â(t+τ)⟩` on a τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    tau_grid: Vec<f64>,
    values: Vec<Complex64>,
    mean_field: Complex64,
}

impl CorrelationSeries {
    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `⟨Â⟩_ss`.
    pub fn mean_field(&self) -> Complex64 {
        self.mean_field
    }

    /// `|⟨Â⟩_ss|²`, the limit of `C(τ)` for large τ.
    pub fn coherent_level(&self) -> f64 {
        self.mean_field.norm_sqr()
    }

    /// `|C(τ_max) − |⟨Â⟩|²|`.
    pub fn tail_residual(&self) -> f64 {
        let last = self.values[self.values.len() - 1];
        (last - c(self.coherent_level())).norm()
    }
}

/// Stationary quantities of the fluctuation problem for one mode operator.
struct Fluctuation {
    /// Trace functional of `Â`.
    w: CVec,
    /// `vec(ρ_ss Â† − ⟨Â†⟩ ρ_ss)`.
    v: CVec,
    rho: CVec,
    mean: Complex64,
    occupation: f64,
}

impl Fluctuation {
    fn new(l: &Liouvillian, rho: &DensityMatrix, mode: &CMat) -> Result<Self> {
        let d = l.dim();
        if rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: rho.dim(),
            });
        }
        if mode.nrows() != d || mode.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: mode.nrows(),
            });
        }
        let r = rho.entries();
        let ad = linalg::dagger(mode);
        let mean = linalg::trace(&mode.dot(r));
        let occupation = linalg::trace(&ad.dot(mode).dot(r)).re;
        let fluct = r.dot(&ad) - r * mean.conj();
        Ok(Fluctuation {
            w: linalg::trace_functional(mode),
            v: linalg::vec_cols(&fluct),
            rho: rho.to_vec(),
            mean,
            occupation,
        })
    }
}

/// `C(τ) = Tr[Â e^{Lτ}(ρ_ss Â†)]` for the single-mode annihilation operator.
pub fn two_time_correlation(
    l: &Liouvillian,
    rho: &DensityMatrix,
    tau_grid: &[f64],
) -> Result<CorrelationSeries> {
    let a = fock::annihilation(l.dim())?;
    two_time_correlation_for(l, rho, a.entries(), tau_grid)
}

/// [`two_time_correlation`] for an arbitrary mode operator.
pub fn two_time_correlation_for(
    l: &Liouvillian,
    rho: &DensityMatrix,
    mode: &CMat,
    tau_grid: &[f64],
) -> Result<CorrelationSeries> {
    dynamics::check_tau_grid(tau_grid)?;
    let f = Fluctuation::new(l, rho, mode)?;
    let x0 = linalg::vec_cols(&rho.entries().dot(&linalg::dagger(mode)));
    let xs = Propagator::new(l).grid(&x0, tau_grid)?;
    let values: Vec<Complex64> = xs.iter().map(|x| linalg::dotu(&f.w, x)).collect();
    let series = CorrelationSeries {
        tau_grid: tau_grid.to_vec(),
        values,
        mean_field: f.mean,
    };
    let c0 = series.values[0];
    let scale = f.occupation.abs().max(c0.norm());
    if c0.im.abs() > 1e-10 * scale.max(1.0) || (c0.re - f.occupation).abs() > 1e-8 * scale {
        return Err(Error::Linalg(format!(
            "C(0) = {c0} disagrees with ⟨Â†Â⟩ = {}",
            f.occupation
        )));
    }
    if let Some(k) = series.values.iter().position(|z| z.norm() > c0.re + 1e-8) {
        return Err(Error::Linalg(format!(
            "|C(τ)| exceeds C(0) at τ = {}",
            series.tau_grid[k]
        )));
    }
    let residual = series.tail_residual();
    let limit = TAIL_TOL * c0.re;
    if residual > limit {
        return Err(Error::GridTooShort {
            residual,
            limit,
            tau_max: tau_grid[tau_grid.len() - 1],
        });
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Internal,
    Absorption,
    Output,
    Experimental,
}

/// Real spectrum on an ascending detuning grid (meV).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    delta_grid: Vec<f64>,
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl SpectrumSeries {
    /// Validates the grid and nonnegativity. Computed kinds need a uniform
    /// grid; experimental data only needs to be strictly ascending.
    pub fn new(delta_grid: Vec<f64>, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if delta_grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                delta_grid.len(),
                values.len()
            )));
        }
        if kind == SpectrumKind::Experimental {
            check_ascending(&delta_grid)?;
        } else {
            check_uniform(&delta_grid)?;
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite spectrum value at Δ = {}",
                delta_grid[k]
            )));
        }
        let max = values.iter().copied().fold(0.0_f64, f64::max);
        if let Some(k) = values.iter().position(|v| *v < -NEGATIVITY_TOL * max) {
            return Err(Error::ModelInconsistency {
                delta: delta_grid[k],
                value: values[k],
            });
        }
        Ok(SpectrumSeries {
            delta_grid,
            values,
            kind,
        })
    }

    pub fn delta_grid(&self) -> &[f64] {
        &self.delta_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(Δ, value)` at the largest value.
    pub fn peak(&self) -> (f64, f64) {
        let k = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (self.delta_grid[k], self.values[k])
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.delta_grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn interpolate(&self, delta: f64) -> Option<f64> {
        let g = &self.delta_grid;
        if delta < g[0] || delta > g[g.len() - 1] {
            return None;
        }
        let k = g.partition_point(|x| *x <= delta);
        if k == 0 {
            return Some(self.values[0]);
        }
        if k == g.len() {
            return Some(self.values[g.len() - 1]);
        }
        let t = (delta - g[k - 1]) / (g[k] - g[k - 1]);
        Some(self.values[k - 1] * (1.0 - t) + self.values[k] * t)
    }

}

pub(crate) fn check_ascending(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("grid needs at least two points".into()));
    }
    if let Some(k) = grid.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite grid point at index {k}")));
    }
    if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly ascending at index {}",
            k + 1
        )));
    }
    Ok(())
}

pub(crate) fn check_uniform(grid: &[f64]) -> Result<()> {
    check_ascending(grid)?;
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let scale = grid[0].abs().max(grid[n - 1].abs()).max(h);
    for (k, w) in grid.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > UNIFORM_TOL * scale {
            return Err(Error::InvalidGrid(format!(
                "grid spacing at index {} deviates from uniform spacing {h}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// `∫|S(Δ) − S(−Δ)| dΔ / ∫S dΔ` over the part of the grid that is symmetric
/// about zero.
pub fn asymmetry(s: &SpectrumSeries) -> Result<f64> {
    let g = s.delta_grid();
    let half = (-g[0]).min(g[g.len() - 1]);
    if !(half > 0.0) {
        return Err(Error::InvalidGrid("grid does not straddle Δ = 0".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let pts: Vec<(f64, f64, f64)> = g
        .iter()
        .zip(s.values())
        .filter(|(x, _)| x.abs() <= half)
        .map(|(x, v)| {
            let mirrored = s.interpolate(-x).unwrap_or(*v);
            (*x, *v, (v - mirrored).abs())
        })
        .collect();
    for w in pts.windows(2) {
        let h = w[1].0 - w[0].0;
        num += 0.5 * h * (w[0].2 + w[1].2);
        den += 0.5 * h * (w[0].1 + w[1].1);
    }
    if den <= 0.0 {
        return Err(Error::InvalidArgument("spectrum has no weight".into()));
    }
    Ok(num / den)
}

/// Evaluation route of the incoherent spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SpectrumMethod {
    /// Banded or dense resolvent, falling back to time domain when neither
    /// fits in memory.
    #[default]
    Auto,
    /// One LU solve of `L − iΔ` per frequency.
    Resolvent,
    /// One eigendecomposition of `L`, then a pole sum per frequency.
    Eigen,
    /// Propagate the fluctuation with a fixed output `step`, then a cubic
    /// Filon transform. Without `tau_max` the propagation runs until the
    /// fluctuation has decayed below the tail tolerance relative to its
    /// initial size.
    TimeDomain { step: f64, tau_max: Option<f64> },
}

/// Superoperator dimension above which the automatic route avoids dense
/// factorizations.
pub const DENSE_SPECTRUM_LIMIT: usize = 2500;

/// Rayleigh-free internal spectrum `S_inc` of the single-mode annihilation
/// operator.
pub fn incoherent_spectrum(
    l: &Liouvillian,
    rho: &DensityMatrix,
    delta_grid: &[f64],
) -> Result<SpectrumSeries> {
    incoherent_spectrum_with(l, rho, delta_grid, SpectrumMethod::Auto)
}

pub fn incoherent_spectrum_with(
    l: &Liouvillian,
    rho: &DensityMatrix,
    delta_grid: &[f64],
    method: SpectrumMethod,
) -> Result<SpectrumSeries> {
    let a = fock::annihilation(l.dim())?;
    incoherent_spectrum_for(l, rho, a.entries(), delta_grid, method)
}

/// Incoherent spectrum of an arbitrary mode operator.
pub fn incoherent_spectrum_for(
    l: &Liouvillian,
    rho: &DensityMatrix,
    mode: &CMat,
    delta_grid: &[f64],
    method: SpectrumMethod,
) -> Result<SpectrumSeries> {
    check_uniform(delta_grid)?;
    let f = Fluctuation::new(l, rho, mode)?;
    let n = l.super_dim();
    let prefer_eigen = if is_banded(l) {
        n <= EIGEN_AUTO_LIMIT && delta_grid.len() * 4 > n
    } else {
        n <= DENSE_SPECTRUM_LIMIT && delta_grid.len() > EIGEN_MIN_POINTS
    };
    if method == SpectrumMethod::Auto && prefer_eigen {
        if let Some(values) = eigen_checked(l, &f, delta_grid)? {
            return SpectrumSeries::new(delta_grid.to_vec(), clip_roundoff(values, &f), SpectrumKind::Internal);
        }
    }
    let method = match method {
        SpectrumMethod::Auto => {
            if is_banded(l) || n <= DENSE_SPECTRUM_LIMIT {
                SpectrumMethod::Resolvent
            } else {
                SpectrumMethod::TimeDomain {
                    step: 0.05,
                    tau_max: None,
                }
            }
        }
        m => m,
    };
    let raw = match method {
        SpectrumMethod::Resolvent => resolvent_values(l, &f, delta_grid)?,
        SpectrumMethod::Eigen => eigen_values(l, &f, delta_grid)?,
        SpectrumMethod::TimeDomain { step, tau_max } => {
            time_domain_values(l, &f, delta_grid, step, tau_max)?
        }
        SpectrumMethod::Auto => unreachable!(),
    };
    SpectrumSeries::new(delta_grid.to_vec(), clip_roundoff(raw, &f), SpectrumKind::Internal)
}

/// Largest banded superoperator dimension for which the automatic route
/// prefers one eigendecomposition over per-frequency solves on long grids.
pub const EIGEN_AUTO_LIMIT: usize = 900;

/// Grid length above which the automatic route diagonalizes a dense,
/// non-banded generator instead of factorizing it per frequency.
pub const EIGEN_MIN_POINTS: usize = 64;

/// Pole sum, accepted only if it reproduces a direct resolvent solve at a few
/// grid points; ill-conditioned eigenvectors fall back to the resolvent.
fn eigen_checked(l: &Liouvillian, f: &Fluctuation, grid: &[f64]) -> Result<Option<Vec<f64>>> {
    let Ok(values) = eigen_values(l, f, grid) else {
        return Ok(None);
    };
    let probes: Vec<usize> = [0, grid.len() / 3, grid.len() / 2, grid.len() - 1].to_vec();
    let probe_grid: Vec<f64> = probes.iter().map(|&k| grid[k]).collect();
    let direct = resolvent_values(l, f, &probe_grid)?;
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f.occupation * 1e-300);
    let ok = probes
        .iter()
        .zip(&direct)
        .all(|(&k, d)| (values[k] - d).abs() <= 1e-9 * scale + 1e-14 * f.occupation);
    Ok(ok.then_some(values))
}

/// Zeroes negative values that are round-off on the scale of `⟨Â†Â⟩`,
/// which matters for nearly dark states.
fn clip_roundoff(mut values: Vec<f64>, f: &Fluctuation) -> Vec<f64> {
    let floor = ROUNDOFF_FLOOR * f.occupation.abs();
    for v in &mut values {
        if *v < 0.0 && *v >= -floor {
            *v = 0.0;
        }
    }
    values
}

/// Negative spectral values above `−ROUNDOFF_FLOOR · ⟨Â†Â⟩` are treated as zero.
const ROUNDOFF_FLOOR: f64 = 1e-10;

fn is_banded(l: &Liouvillian) -> bool {
    let n = l.super_dim();
    let (kl, ku) = l.generator().bandwidths();
    n > 64 && (kl + ku) * (kl + ku) * 64 <= n * n
}

fn resolvent_values(l: &Liouvillian, f: &Fluctuation, grid: &[f64]) -> Result<Vec<f64>> {
    if is_banded(l) {
        resolvent_banded(l, f, grid)
    } else {
        resolvent_dense(l, f, grid)
    }
}

fn resolvent_banded(l: &Liouvillian, f: &Fluctuation, grid: &[f64]) -> Result<Vec<f64>> {
    let n = l.super_dim();
    let gen = l.generator();
    grid.iter()
        .map(|&delta| {
            let fail = |reason: String| Error::ResolventFailed { delta, reason };
            let x = if delta == 0.0 {
                // L is singular; its zero mode is ρ_ss and row 0 is redundant
                // given the others. Pin x₀ = 0, then project onto Tr x = 0.
                let lu = BandedLu::factor(gen, &[0], ZERO).map_err(|e| fail(e.to_string()))?;
                let rhs = CVec::from_iter(f.v.iter().skip(1).copied());
                let y = lu.solve(&rhs);
                let mut x = CVec::zeros(n);
                for k in 1..n {
                    x[k] = y[k - 1];
                }
                let d = l.dim();
                let tr: Complex64 = (0..d).map(|i| x[i * (d + 1)]).sum();
                x - &f.rho * tr
            } else {
                let lu = BandedLu::factor(gen, &[], Complex64::new(0.0, -delta))
                    .map_err(|e| fail(e.to_string()))?;
                lu.solve(&f.v)
            };
            Ok(-2.0 * linalg::dotu(&f.w, &x).re)
        })
        .collect()
}

fn resolvent_dense(l: &Liouvillian, f: &Fluctuation, grid: &[f64]) -> Result<Vec<f64>> {
    // M = L − iΔ + ρ_ss Trᵀ: the rank-one term lifts the zero mode and leaves
    // the solution on trace-free right-hand sides unchanged.
    let n = l.super_dim();
    let tr = linalg::trace_row(l.dim());
    let mut base = l.generator_dense();
    for i in 0..n {
        for j in 0..n {
            base[[i, j]] += f.rho[i] * tr[j];
        }
    }
    grid.iter()
        .map(|&delta| {
            let mut m = base.clone();
            for i in 0..n {
                m[[i, i]] -= Complex64::new(0.0, delta);
            }
            let x = m
                .factorize_into()
                .and_then(|lu| lu.solve_into(f.v.clone()))
                .map_err(|e| Error::ResolventFailed {
                    delta,
                    reason: e.to_string(),
                })?;
            Ok(-2.0 * linalg::dotu(&f.w, &x).re)
        })
        .collect()
}

fn eigen_values(l: &Liouvillian, f: &Fluctuation, grid: &[f64]) -> Result<Vec<f64>> {
    let (vals, vecs) = l.generator_dense().eig()?;
    let coeff = vecs.solve(&f.v)?;
    let wv = f.w.dot(&vecs);
    let stationary = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let residues: Vec<(Complex64, Complex64)> = vals
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != stationary)
        .map(|(k, lam)| (*lam, wv[k] * coeff[k]))
        .collect();
    Ok(grid
        .iter()
        .map(|&delta| {
            let shift = Complex64::new(0.0, delta);
            let sum: Complex64 = residues.iter().map(|(lam, r)| r / (lam - shift)).sum();
            -2.0 * sum.re
        })
        .collect())
}

/// Hard cap on the number of panels of the adaptive time-domain route.
const MAX_TIME_STEPS: usize = 200_000;

fn time_domain_values(
    l: &Liouvillian,
    f: &Fluctuation,
    grid: &[f64],
    h: f64,
    tau_max: Option<f64>,
) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("step", h, "must be positive"));
    }
    let g0 = linalg::dotu(&f.w, &f.v).norm();
    let limit = TAIL_TOL * g0.max(ROUNDOFF_FLOOR * f.occupation.abs());
    let (g, dg) = match tau_max {
        Some(t) => {
            let steps = (t / h).round() as usize;
            if steps < 2 {
                return Err(Error::InvalidArgument(format!(
                    "tau_max = {t} gives fewer than two steps of {h}"
                )));
            }
            let taus = uniform_grid(0.0, steps as f64 * h, steps + 1);
            let xs = Propagator::new(l).grid(&f.v, &taus)?;
            let g: Vec<Complex64> = xs.iter().map(|x| linalg::dotu(&f.w, x)).collect();
            let dg: Vec<Complex64> = xs.iter().map(|x| linalg::dotu(&f.w, &l.apply(x))).collect();
            let residual = g[steps].norm();
            if residual > limit {
                return Err(Error::GridTooShort {
                    residual,
                    limit,
                    tau_max: t,
                });
            }
            (g, dg)
        }
        None => {
            // Stop once the fluctuation and its slope stay below the tail
            // tolerance for a window of consecutive samples.
            let mut prop = Propagator::new(l);
            let mut x = f.v.clone();
            let mut g = vec![linalg::dotu(&f.w, &x)];
            let mut dg = vec![linalg::dotu(&f.w, &l.apply(&x))];
            let mut quiet = 0;
            while quiet < 50 {
                if g.len() > MAX_TIME_STEPS {
                    return Err(Error::GridTooShort {
                        residual: g[g.len() - 1].norm(),
                        limit,
                        tau_max: h * (g.len() - 1) as f64,
                    });
                }
                x = prop.advance(&x, h)?;
                let gv = linalg::dotu(&f.w, &x);
                let dv = linalg::dotu(&f.w, &l.apply(&x));
                if gv.norm() <= limit && dv.norm() * h <= limit {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                g.push(gv);
                dg.push(dv);
            }
            (g, dg)
        }
    };
    Ok(grid
        .iter()
        .map(|&delta| 2.0 * filon_hermite(&g, &dg, h, delta).re)
        .collect())
}

/// `∫₀^{Nh} e^{−iΔτ} g(τ) dτ` with `g` interpolated by cubic Hermite panels
/// from samples and derivatives on a uniform grid.
pub fn filon_hermite(g: &[Complex64], dg: &[Complex64], h: f64, delta: f64) -> Complex64 {
    let m = moments(h, delta);
    let rot = Complex64::new(0.0, -delta * h).exp();
    let mut phase = Complex64::new(1.0, 0.0);
    let mut acc = ZERO;
    for k in 0..g.len() - 1 {
        let (f0, f1, d0, d1) = (g[k], g[k + 1], dg[k], dg[k + 1]);
        let slope = (f1 - f0) / h;
        let c2 = (slope * 3.0 - d0 * 2.0 - d1) / h;
        let c3 = (d0 + d1 - slope * 2.0) / (h * h);
        acc += phase * (f0 * m[0] + d0 * m[1] + c2 * m[2] + c3 * m[3]);
        // Periodic re-evaluation keeps the accumulated phase accurate.
        phase = if (k + 1) % 256 == 0 {
            Complex64::new(0.0, -delta * h * (k + 1) as f64).exp()
        } else {
            phase * rot
        };
    }
    acc
}

/// `I_j = ∫₀^h s^j e^{−iΔs} ds` for `j = 0..3`.
fn moments(h: f64, delta: f64) -> [Complex64; 4] {
    let u = delta * h;
    let mut out = [ZERO; 4];
    if u.abs() < 1.0 {
        let z = Complex64::new(0.0, -delta);
        for (j, slot) in out.iter_mut().enumerate() {
            let mut term = c(1.0);
            let mut sum = ZERO;
            for k in 0..40 {
                let p = (j + k + 1) as i32;
                sum += term * h.powi(p) / p as f64;
                term = term * z / (k + 1) as f64;
            }
            *slot = sum;
        }
    } else {
        let e = Complex64::new(0.0, -u).exp();
        let neg_i_delta = Complex64::new(0.0, -delta);
        out[0] = (e - 1.0) / neg_i_delta;
        for j in 1..4 {
            out[j] = (e * h.powi(j as i32) - out[j - 1] * j as f64) / neg_i_delta;
        }
    }
    out
}

/// Options of [`internal_spectrum_with_rayleigh`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InternalSpectrumOptions {
    pub method: SpectrumMethod,
    /// Also convolve the incoherent part with the detector Lorentzian.
    pub full_convolution: bool,
}

/// Internal spectrum with the coherent line: `S_inc(Δ) + |⟨Â⟩|² Lor(Δ; Γ_f)`.
pub fn internal_spectrum_with_rayleigh(
    l: &Liouvillian,
    rho: &DensityMatrix,
    delta_grid: &[f64],
    gamma_f: f64,
) -> Result<SpectrumSeries> {
    internal_spectrum_with_options(l, rho, delta_grid, gamma_f, InternalSpectrumOptions::default())
}

pub fn internal_spectrum_with_options(
    l: &Liouvillian,
    rho: &DensityMatrix,
    delta_grid: &[f64],
    gamma_f: f64,
    options: InternalSpectrumOptions,
) -> Result<SpectrumSeries> {
    if !(gamma_f > 0.0) || !gamma_f.is_finite() {
        return Err(Error::param("gamma_f", gamma_f, "must be positive"));
    }
    let a = fock::annihilation(l.dim())?;
    let inc = incoherent_spectrum_for(l, rho, a.entries(), delta_grid, options.method)?;
    let mean = fock::expectation(&a, rho)?;
    let mut values = if options.full_convolution {
        convolve_lorentzian(inc.delta_grid(), inc.values(), gamma_f)
    } else {
        inc.values().to_vec()
    };
    add_rayleigh(delta_grid, &mut values, mean.norm_sqr(), gamma_f);
    SpectrumSeries::new(delta_grid.to_vec(), values, SpectrumKind::Internal)
}

/// Adds `weight · Lor(Δ; Γ_f)` centred on the laser frequency.
pub fn add_rayleigh(grid: &[f64], values: &mut [f64], weight: f64, gamma_f: f64) {
    for (v, &x) in values.iter_mut().zip(grid) {
        *v += weight * lorentzian(x, 0.0, gamma_f);
    }
}

/// Discrete convolution with a unit-area Lorentzian on a uniform grid; the
/// signal is taken as zero outside the grid.
pub fn convolve_lorentzian(grid: &[f64], values: &[f64], fwhm: f64) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return values.to_vec();
    }
    let h = grid[1] - grid[0];
    // Cell-averaged kernel: exact Lorentzian mass of each grid cell, so a
    // kernel narrower than the spacing still carries unit weight.
    let hw = fwhm / 2.0;
    let cell = |x: f64| (x / hw).atan() / PI;
    let kernel: Vec<f64> = (0..n)
        .map(|k| {
            let x = k as f64 * h;
            cell(x + 0.5 * h) - cell(x - 0.5 * h)
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| values[j] * kernel[i.abs_diff(j)])
                .sum::<f64>()
        })
        .collect()
}

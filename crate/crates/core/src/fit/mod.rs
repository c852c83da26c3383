// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Least-squares fits of the full forward model (collective mode → internal
//! spectrum → medium) to measured spectra.

pub mod io;
pub mod optim;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::collective::{self, SfReport, SfThresholds};
use crate::dynamics::{self, TruncationSchedule};
use crate::error::{Error, Result};
use crate::fock::CollectiveModelParams;
use crate::medium::{self, AbsorptionMode, MediumParams};
use crate::spectra::{self, InternalSpectrumOptions, SpectrumKind, SpectrumSeries, DEFAULT_GAMMA_F};

pub use io::{load_spectrum, parse_spectrum, LoadedSpectrum};

/// Minimum number of data points a fit accepts.
pub const MIN_FIT_POINTS: usize = 16;
/// Relative finite-difference step of the Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-4;
/// Relative floor of the data used by relative weights.
const RELATIVE_WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    Rabi,
    Kerr,
    Delta,
    Gamma,
    F,
    Scale,
    Background,
}

impl FitParam {
    pub const ALL: [FitParam; 7] = [
        FitParam::Rabi,
        FitParam::Kerr,
        FitParam::Delta,
        FitParam::Gamma,
        FitParam::F,
        FitParam::Scale,
        FitParam::Background,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParam::Rabi => "rabi",
            FitParam::Kerr => "kerr",
            FitParam::Delta => "delta",
            FitParam::Gamma => "gamma",
            FitParam::F => "f",
            FitParam::Scale => "scale",
            FitParam::Background => "background",
        }
    }
}

impl std::fmt::Display for FitParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FitParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fit parameter `{s}`")))
    }
}

/// Values of all seven model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub rabi: f64,
    pub kerr: f64,
    pub delta: f64,
    pub gamma: f64,
    pub f: f64,
    pub scale: f64,
    pub background: f64,
}

impl ParamSet {
    pub fn get(&self, p: FitParam) -> f64 {
        match p {
            FitParam::Rabi => self.rabi,
            FitParam::Kerr => self.kerr,
            FitParam::Delta => self.delta,
            FitParam::Gamma => self.gamma,
            FitParam::F => self.f,
            FitParam::Scale => self.scale,
            FitParam::Background => self.background,
        }
    }

    pub fn set(&mut self, p: FitParam, v: f64) {
        *match p {
            FitParam::Rabi => &mut self.rabi,
            FitParam::Kerr => &mut self.kerr,
            FitParam::Delta => &mut self.delta,
            FitParam::Gamma => &mut self.gamma,
            FitParam::F => &mut self.f,
            FitParam::Scale => &mut self.scale,
            FitParam::Background => &mut self.background,
        } = v;
    }
}

/// `[low, high]` per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    pub rabi: [f64; 2],
    pub kerr: [f64; 2],
    pub delta: [f64; 2],
    pub gamma: [f64; 2],
    pub f: [f64; 2],
    pub scale: [f64; 2],
    pub background: [f64; 2],
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            rabi: [0.0, 5.0],
            kerr: [-5.0, 5.0],
            delta: [-5.0, 5.0],
            gamma: [1e-3, 5.0],
            f: [0.0, 10.0],
            scale: [1e-9, 1e9],
            background: [0.0, 1e3],
        }
    }
}

impl ParamBounds {
    pub fn get(&self, p: FitParam) -> [f64; 2] {
        match p {
            FitParam::Rabi => self.rabi,
            FitParam::Kerr => self.kerr,
            FitParam::Delta => self.delta,
            FitParam::Gamma => self.gamma,
            FitParam::F => self.f,
            FitParam::Scale => self.scale,
            FitParam::Background => self.background,
        }
    }
}

/// Fixed Fock dimension or automatic convergence.
/// Written as `"auto"` or an integer in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FockDimChoice {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FockDimRepr {
    Fixed(usize),
    Named(String),
}

impl Serialize for FockDimChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FockDimChoice::Auto => FockDimRepr::Named("auto".into()).serialize(s),
            FockDimChoice::Fixed(d) => FockDimRepr::Fixed(*d).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for FockDimChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match FockDimRepr::deserialize(d)? {
            FockDimRepr::Fixed(n) => Ok(FockDimChoice::Fixed(n)),
            FockDimRepr::Named(s) if s == "auto" => Ok(FockDimChoice::Auto),
            FockDimRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or an integer, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    NelderMead,
    LevenbergMarquardt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// All weights 1.
    #[default]
    Uniform,
    /// Inverse-variance weights from the data file.
    Column,
    /// `1 / S_data²`, matching multiplicative noise of constant relative size.
    Relative,
}

/// Model options that are never fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    /// Detector resolution, meV.
    pub gamma_f: f64,
    pub absorption: AbsorptionMode,
    pub a_max: f64,
    pub slab_phase_thickness: f64,
    pub full_convolution: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        let m = MediumParams::new(1.0, 0.0, 1.0);
        ModelOptions {
            gamma_f: DEFAULT_GAMMA_F,
            absorption: m.mode,
            a_max: m.a_max,
            slab_phase_thickness: m.slab_phase_thickness,
            full_convolution: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub free_params: Vec<FitParam>,
    /// Start values of free parameters and values of fixed ones.
    pub initial: ParamSet,
    #[serde(default)]
    pub bounds: ParamBounds,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub fock_dim: FockDimChoice,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub weighting: Weighting,
    /// Divide data (and column weights accordingly) by the data peak.
    #[serde(default = "default_true")]
    pub normalize_peak: bool,
    /// Detuning windows `[lo, hi]` excluded from the objective.
    #[serde(default)]
    pub exclude: Vec<[f64; 2]>,
    /// Number of model grid points; by default the data grid is reused when
    /// it is uniform.
    #[serde(default)]
    pub model_points: Option<usize>,
    /// Laser power of the measurement, µW.
    #[serde(default)]
    pub laser_power: Option<f64>,
}

fn default_truncation_tol() -> f64 {
    1e-6
}

fn default_max_evals() -> usize {
    3000
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_true() -> bool {
    true
}

impl FitConfig {
    pub fn new(free_params: Vec<FitParam>, initial: ParamSet) -> Self {
        FitConfig {
            free_params,
            initial,
            bounds: ParamBounds::default(),
            model: ModelOptions::default(),
            fock_dim: FockDimChoice::Auto,
            truncation_tol: default_truncation_tol(),
            optimizer: Optimizer::default(),
            max_evals: default_max_evals(),
            tolerance: default_tolerance(),
            weighting: Weighting::default(),
            normalize_peak: true,
            exclude: Vec::new(),
            model_points: None,
            laser_power: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for p in &self.free_params {
            if seen.contains(p) {
                return Err(Error::Config(format!("free parameter `{p}` listed twice")));
            }
            seen.push(*p);
        }
        for p in FitParam::ALL {
            let [lo, hi] = self.bounds.get(p);
            let v = self.initial.get(p);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("bounds of `{p}` are not an interval: [{lo}, {hi}]")));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("initial `{p}` is not finite")));
            }
            if self.free_params.contains(&p) && !(lo..=hi).contains(&v) {
                return Err(Error::Config(format!(
                    "initial `{p}` = {v} lies outside its bounds [{lo}, {hi}]"
                )));
            }
        }
        if !(self.model.gamma_f > 0.0 && self.model.gamma_f.is_finite()) {
            return Err(Error::param("gamma_f", self.model.gamma_f, "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", self.tolerance, "must be positive"));
        }
        if !(self.truncation_tol > 0.0) {
            return Err(Error::param("truncation_tol", self.truncation_tol, "must be positive"));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be positive".into()));
        }
        if let FockDimChoice::Fixed(d) = self.fock_dim {
            if d < 2 {
                return Err(Error::InvalidDimension { dim: d });
            }
        }
        if let Some(n) = self.model_points {
            if n < 2 {
                return Err(Error::Config("model_points must be at least 2".into()));
            }
        }
        if let Some([lo, hi]) = self.exclude.iter().find(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!("exclusion window [{lo}, {hi}] is empty")));
        }
        Ok(())
    }
}

/// Collective and medium parameters for one parameter point.
pub fn model_params(p: &ParamSet, options: &ModelOptions, fock_dim: usize) -> (CollectiveModelParams, MediumParams) {
    let collective = CollectiveModelParams::new(p.delta, p.rabi, p.kerr, p.gamma).with_fock_dim(fock_dim);
    let medium = MediumParams::matching(&collective, p.f)
        .with_mode(options.absorption)
        .with_a_max(options.a_max)
        .with_slab_phase_thickness(options.slab_phase_thickness)
        .with_scale(p.scale)
        .with_background(p.background);
    (collective, medium)
}

/// Output spectrum of the full forward model on a uniform grid.
pub fn forward_spectrum(p: &ParamSet, options: &ModelOptions, fock_dim: usize, grid: &[f64]) -> Result<SpectrumSeries> {
    let (collective, medium) = model_params(p, options, fock_dim);
    medium.validate()?;
    let l = dynamics::build_liouvillian(&collective)?;
    let rho = dynamics::steady_state(&l)?;
    let internal = spectra::internal_spectrum_with_options(
        &l,
        &rho,
        grid,
        options.gamma_f,
        InternalSpectrumOptions {
            full_convolution: options.full_convolution,
            ..Default::default()
        },
    )?;
    medium::output_spectrum(&internal, &medium)
}

/// `χ² = Σ w_k (S_model(Δ_k) − S_data(Δ_k))²` with the model interpolated
/// linearly onto the data grid.
pub fn objective(data: &SpectrumSeries, model: &SpectrumSeries, weights: &[f64]) -> Result<f64> {
    if weights.len() != data.len() {
        return Err(Error::GridMismatch(format!(
            "{} weights for {} data points",
            weights.len(),
            data.len()
        )));
    }
    let (dg, mg) = (data.delta_grid(), model.delta_grid());
    let (dlo, dhi) = (dg[0], dg[dg.len() - 1]);
    let (mlo, mhi) = (mg[0], mg[mg.len() - 1]);
    if dlo < mlo || dhi > mhi {
        return Err(Error::Coverage {
            data_lo: dlo,
            data_hi: dhi,
            model_lo: mlo,
            model_hi: mhi,
        });
    }
    Ok(dg
        .iter()
        .zip(data.values())
        .zip(weights)
        .map(|((x, y), w)| {
            let m = model.interpolate(*x).expect("coverage checked above");
            w * (m - y).powi(2)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParamSet,
    pub collective: CollectiveModelParams,
    pub medium: MediumParams,
    pub laser_power: Option<f64>,
    pub free_params: Vec<FitParam>,
    pub chi2: f64,
    pub n_points: usize,
    /// Finite-difference curvature estimates, by parameter name.
    pub uncertainties: BTreeMap<String, f64>,
    pub converged: bool,
    pub evaluations: usize,
    pub fock_dim: usize,
    /// Factor the data was divided by before fitting.
    pub data_scale: f64,
    pub diagnostics: Vec<String>,
    /// Best objective after each evaluation.
    pub trace: Vec<f64>,
}

/// Data prepared for the objective: masked, normalized, weighted.
struct Prepared {
    data: SpectrumSeries,
    weights: Vec<f64>,
    grid: Vec<f64>,
    data_scale: f64,
}

fn prepare(data: &SpectrumSeries, weights: Option<&[f64]>, config: &FitConfig) -> Result<Prepared> {
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::GridMismatch(format!("{} weights for {} data points", w.len(), data.len())));
        }
    }
    let keep: Vec<usize> = (0..data.len())
        .filter(|&k| {
            let x = data.delta_grid()[k];
            !config.exclude.iter().any(|[lo, hi]| x >= *lo && x <= *hi)
        })
        .collect();
    if keep.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidFit(format!(
            "{} data points after exclusions; at least {MIN_FIT_POINTS} are required",
            keep.len()
        )));
    }
    let peak = keep.iter().map(|&k| data.values()[k]).fold(0.0_f64, f64::max);
    let data_scale = if config.normalize_peak {
        if peak <= 0.0 {
            return Err(Error::InvalidFit("data has no positive intensity".into()));
        }
        peak
    } else {
        1.0
    };
    let xs: Vec<f64> = keep.iter().map(|&k| data.delta_grid()[k]).collect();
    let ys: Vec<f64> = keep.iter().map(|&k| data.values()[k] / data_scale).collect();
    let ws: Vec<f64> = match config.weighting {
        Weighting::Uniform => vec![1.0; keep.len()],
        Weighting::Column => {
            let w = weights.ok_or_else(|| Error::Config("column weighting needs a weight column".into()))?;
            keep.iter().map(|&k| w[k] * data_scale * data_scale).collect()
        }
        Weighting::Relative => {
            let floor = RELATIVE_WEIGHT_FLOOR * ys.iter().copied().fold(0.0, f64::max);
            ys.iter().map(|y| 1.0 / y.max(floor).powi(2)).collect()
        }
    };
    let full_grid = data.delta_grid();
    let (lo, hi) = (full_grid[0], full_grid[full_grid.len() - 1]);
    let grid = match config.model_points {
        Some(n) => spectra::uniform_grid(lo, hi, n),
        None if nearly_uniform(full_grid) => spectra::uniform_grid(lo, hi, full_grid.len()),
        None => spectra::uniform_grid(lo, hi, (2 * full_grid.len()).max(2001)),
    };
    Ok(Prepared {
        data: SpectrumSeries::new(xs, ys, SpectrumKind::Experimental)?,
        weights: ws,
        grid,
        data_scale,
    })
}

fn nearly_uniform(grid: &[f64]) -> bool {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h)
}

fn resolve_fock_dim(p: &ParamSet, config: &FitConfig) -> Result<usize> {
    match config.fock_dim {
        FockDimChoice::Fixed(d) => Ok(d),
        FockDimChoice::Auto => {
            let (c, _) = model_params(p, &config.model, 2);
            let schedule = TruncationSchedule {
                start: 8,
                ..TruncationSchedule::default()
            };
            Ok(dynamics::converge_truncation_with(&c, config.truncation_tol, schedule)?.0)
        }
    }
}

/// Fits the model to `data`. With an automatic Fock dimension the truncation
/// is re-verified at the optimum and the fit repeated if it has to grow.
pub fn fit(data: &SpectrumSeries, weights: Option<&[f64]>, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let prep = prepare(data, weights, config)?;
    let mut start = config.initial;
    let mut dim = resolve_fock_dim(&start, config)?;
    let mut diagnostics = Vec::new();
    let mut total_evals = 0;
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..4 {
        let outcome = run_optimizer(&prep, config, &start, dim)?;
        total_evals += outcome.evaluations;
        let offset_best = trace.last().copied().unwrap_or(f64::INFINITY);
        trace.extend(outcome.trace.iter().map(|v| v.min(offset_best)));
        let mut params = start;
        for (p, v) in config.free_params.iter().zip(&outcome.x) {
            params.set(*p, *v);
        }
        let verified = match config.fock_dim {
            FockDimChoice::Auto => resolve_fock_dim(&params, config)?,
            FockDimChoice::Fixed(d) => d,
        };
        if verified > dim {
            diagnostics.push(format!("Fock dimension grew from {dim} to {verified} at the optimum; refitting"));
            dim = verified;
            start = params;
            continue;
        }
        if !outcome.converged {
            diagnostics.push(format!("optimizer did not converge: {}", outcome.message));
        }
        for p in &config.free_params {
            let [lo, hi] = config.bounds.get(*p);
            let v = params.get(*p);
            let tol = |b: f64| 1e-9 * b.abs().max(1e-3 * (hi - lo).min(1.0));
            if v - lo <= tol(lo) {
                diagnostics.push(format!("`{p}` pinned at lower bound {lo}"));
            } else if hi - v <= tol(hi) {
                diagnostics.push(format!("`{p}` pinned at upper bound {hi}"));
            }
        }
        let uncertainties = uncertainties(&prep, config, &params, dim, outcome.value);
        let (collective, medium) = model_params(&params, &config.model, dim);
        return Ok(FitResult {
            params,
            collective: CollectiveModelParams {
                laser_power: config.laser_power,
                ..collective
            },
            medium,
            laser_power: config.laser_power,
            free_params: config.free_params.clone(),
            chi2: outcome.value,
            n_points: prep.data.len(),
            uncertainties,
            converged: outcome.converged,
            evaluations: total_evals,
            fock_dim: dim,
            data_scale: prep.data_scale,
            diagnostics,
            trace,
        });
    }
    Err(Error::InvalidFit("Fock dimension kept growing across refits".into()))
}

fn residual_fn<'a>(
    prep: &'a Prepared,
    config: &'a FitConfig,
    base: &'a ParamSet,
    dim: usize,
) -> impl FnMut(&[f64]) -> Option<Vec<f64>> + 'a {
    move |x: &[f64]| {
        let mut p = *base;
        for (param, v) in config.free_params.iter().zip(x) {
            p.set(*param, *v);
        }
        let model = forward_spectrum(&p, &config.model, dim, &prep.grid).ok()?;
        let r: Vec<f64> = prep
            .data
            .delta_grid()
            .iter()
            .zip(prep.data.values())
            .zip(&prep.weights)
            .map(|((x, y), w)| w.sqrt() * (model.interpolate(*x).unwrap_or(f64::NAN) - y))
            .collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    }
}

fn problem(config: &FitConfig, start: &ParamSet) -> optim::Problem {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut typical = Vec::new();
    for p in &config.free_params {
        let [lo, hi] = config.bounds.get(*p);
        lower.push(lo);
        upper.push(hi);
        let v = start.get(*p).abs();
        typical.push(if v > 0.0 { v } else { 1e-2 * (hi - lo).min(1.0) });
    }
    optim::Problem {
        lower,
        upper,
        typical,
        max_evals: config.max_evals,
        tolerance: config.tolerance,
    }
}

fn run_optimizer(prep: &Prepared, config: &FitConfig, start: &ParamSet, dim: usize) -> Result<optim::Outcome> {
    let x0: Vec<f64> = config.free_params.iter().map(|p| start.get(*p)).collect();
    // The initial point must be evaluable; later failures only reject steps.
    let model = forward_spectrum(start, &config.model, dim, &prep.grid)?;
    objective(&prep.data, &model, &prep.weights)?;
    let prob = problem(config, start);
    let mut residuals = residual_fn(prep, config, start, dim);
    Ok(match config.optimizer {
        Optimizer::NelderMead => optim::nelder_mead(
            |x: &[f64]| residuals(x).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum()),
            &x0,
            &prob,
        ),
        Optimizer::LevenbergMarquardt => optim::levenberg_marquardt(residuals, &x0, &prob, JACOBIAN_STEP),
    })
}

fn uncertainties(prep: &Prepared, config: &FitConfig, params: &ParamSet, dim: usize, chi2: f64) -> BTreeMap<String, f64> {
    let x: Vec<f64> = config.free_params.iter().map(|p| params.get(*p)).collect();
    let prob = problem(config, params);
    let mut residuals = residual_fn(prep, config, params, dim);
    let Some(r0) = residuals(&x) else {
        return BTreeMap::new();
    };
    let sigmas = optim::jacobian(&mut residuals, &x, &r0, &prob, JACOBIAN_STEP)
        .and_then(|j| optim::curvature_uncertainties(&j, chi2));
    match sigmas {
        Some(s) => config
            .free_params
            .iter()
            .zip(s)
            .map(|(p, v)| (p.name().to_string(), v))
            .collect(),
        None => BTreeMap::new(),
    }
}

/// Units of every quantity in a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportUnits {
    pub energy: String,
    pub laser_power: String,
    pub intensity: String,
}

impl Default for ReportUnits {
    fn default() -> Self {
        ReportUnits {
            energy: "meV (rates, couplings, detunings; hbar = 1)".into(),
            laser_power: "uW".into(),
            intensity: "arbitrary units, data divided by data_scale".into(),
        }
    }
}

/// Structured fit report: config echo, result and units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub objective: String,
    pub units: ReportUnits,
    pub config: FitConfig,
    pub result: FitResult,
}

impl FitReport {
    pub fn new(config: &FitConfig, result: FitResult) -> Self {
        let objective = match config.weighting {
            Weighting::Uniform => "unweighted least squares on linear intensities",
            Weighting::Column => "least squares weighted by the data weight column",
            Weighting::Relative => "least squares weighted by 1/intensity^2",
        };
        FitReport {
            objective: objective.into(),
            units: ReportUnits::default(),
            config: config.clone(),
            result,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize fit report: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("malformed fit report: {e}")))
    }
}

/// Superfluorescence test on two fits; both need a laser power.
pub fn sf_ratio_fits(fit_1: &FitResult, fit_2: &FitResult, thresholds: SfThresholds) -> Result<SfReport> {
    let with_power = |f: &FitResult| CollectiveModelParams {
        laser_power: f.laser_power.or(f.collective.laser_power),
        ..f.collective
    };
    collective::sf_ratio(&with_power(fit_1), &with_power(fit_2), thresholds)
}

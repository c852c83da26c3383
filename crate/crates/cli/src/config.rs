// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: one TOML document with a section per concern.
//! Command-line `--set section.key=value` pairs are applied on top of the
//! file before it is deserialized.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qwfluor::collective::SfThresholds;
use qwfluor::dynamics::TruncationSchedule;
use qwfluor::fit::{FitConfig, FockDimChoice};
use qwfluor::fock::CollectiveModelParams;
use qwfluor::medium::{AbsorptionMode, MediumParams};
use qwfluor::spectra::{self, DEFAULT_GAMMA_F};
use qwfluor::{Error, Result};

/// Environment variable that overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "QWFLUOR_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSection>,
    pub medium: MediumSection,
    pub detector: DetectorSection,
    pub grid: GridSection,
    pub noise: Option<NoiseSection>,
    pub input: Option<InputSection>,
    pub fit: Option<FitConfig>,
    pub oracle: Option<OracleSection>,
    pub convergence: ConvergenceSection,
    pub sf: SfThresholds,
    pub output: OutputSection,
}

/// Collective-mode parameters; `fock_dim` may be `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub delta: f64,
    pub rabi: f64,
    pub kerr: f64,
    pub gamma: f64,
    #[serde(default)]
    pub laser_power: Option<f64>,
    #[serde(default)]
    pub fock_dim: FockDimChoice,
}

impl ModelSection {
    /// Parameters with a placeholder dimension when `fock_dim` is automatic.
    pub fn params(&self) -> CollectiveModelParams {
        let mut p = CollectiveModelParams::new(self.delta, self.rabi, self.kerr, self.gamma);
        p.laser_power = self.laser_power;
        if let FockDimChoice::Fixed(d) = self.fock_dim {
            p.fock_dim = d;
        }
        p
    }
}

/// Medium parameters; resonance and width default to the model's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub f: f64,
    pub delta_res: Option<f64>,
    pub gamma: Option<f64>,
    pub mode: AbsorptionMode,
    pub a_max: f64,
    pub slab_phase_thickness: f64,
    pub background: f64,
    pub scale: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        let m = MediumParams::new(1.0, 0.0, 1.0);
        MediumSection {
            f: m.f,
            delta_res: None,
            gamma: None,
            mode: m.mode,
            a_max: m.a_max,
            slab_phase_thickness: m.slab_phase_thickness,
            background: m.background,
            scale: m.scale,
        }
    }
}

impl MediumSection {
    pub fn params(&self, model: &CollectiveModelParams) -> MediumParams {
        MediumParams::new(
            self.f,
            self.delta_res.unwrap_or(model.delta),
            self.gamma.unwrap_or(model.gamma),
        )
        .with_mode(self.mode)
        .with_a_max(self.a_max)
        .with_slab_phase_thickness(self.slab_phase_thickness)
        .with_background(self.background)
        .with_scale(self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    /// Detector resolution (FWHM), meV.
    pub gamma_f: f64,
    pub full_convolution: bool,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            gamma_f: DEFAULT_GAMMA_F,
            full_convolution: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            lo: -1.5,
            hi: 1.5,
            points: 2001,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.points < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid [{}, {}] with {} points",
                self.lo, self.hi, self.points
            )));
        }
        Ok(spectra::uniform_grid(self.lo, self.hi, self.points))
    }
}

/// Multiplicative Gaussian noise added to the simulated output spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Standard deviation relative to the local intensity.
    pub relative: f64,
    /// Required; there is no default seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub data: PathBuf,
    #[serde(default = "default_value_column")]
    pub value_column: usize,
    #[serde(default)]
    pub weight_column: Option<usize>,
}

fn default_value_column() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    #[default]
    Equal,
    /// Alternating 0 and π.
    Antiphase,
    /// Uniform on [0, 2π); needs a seed.
    Random,
    /// Taken from `phases`.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_modes: usize,
    pub rabi_single: f64,
    pub kerr_single: f64,
    pub delta: f64,
    pub gamma: f64,
    pub dim_per_mode: usize,
    #[serde(default)]
    pub phase_mode: PhaseMode,
    #[serde(default)]
    pub phases: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Dimension of the collective model; defaults to
    /// `n_modes · (dim_per_mode − 1) + 1`.
    #[serde(default)]
    pub collective_fock_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub tol: f64,
    pub start: usize,
    pub step: usize,
    pub lookahead: usize,
    pub max_dim: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        let s = TruncationSchedule::default();
        ConvergenceSection {
            tol: 1e-6,
            start: s.start,
            step: s.step,
            lookahead: s.lookahead,
            max_dim: s.max_dim,
        }
    }
}

impl ConvergenceSection {
    pub fn schedule(&self) -> TruncationSchedule {
        TruncationSchedule {
            start: self.start,
            step: self.step,
            lookahead: self.lookahead,
            max_dim: self.max_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Toml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// File name inside `dir`; each command has its own default.
    pub file: Option<String>,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("."),
            file: None,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    /// Reads `path` (or starts empty), applies overrides, then the output
    /// directory from the environment.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
    }

    pub fn from_toml(text: &str, overrides: &[String], env_dir: Option<PathBuf>) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: RunConfig = table
            .try_into()
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if let Some(dir) = env_dir {
            config.output.dir = dir;
        }
        Ok(config)
    }

    pub fn model(&self) -> Result<ModelSection> {
        self.model
            .ok_or_else(|| Error::Config("missing [model] section".into()))
    }

    /// Path of the main output file, with `default_name` unless configured.
    pub fn output_path(&self, default_name: &str) -> PathBuf {
        self.output
            .dir
            .join(self.output.file.as_deref().unwrap_or(default_name))
    }
}

/// `section.key=value` (or `key=value` at the top level). The value is
/// parsed as a TOML value, falling back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| {
        Error::Config(format!("override `{spec}` has an empty key"))
    })?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

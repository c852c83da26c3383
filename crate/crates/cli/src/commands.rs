// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations. Each returns the summary lines printed on
//! success; files are written atomically.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use qwfluor::collective::{self, MultiModeParams, SfClass, SfReport, SfThresholds};
use qwfluor::dynamics::{self, DensityMatrix, Liouvillian};
use qwfluor::fit::io::{format_table, load_spectrum_columns, write_atomic, ColumnSelection};
use qwfluor::fit::{self, FitReport, FockDimChoice};
use qwfluor::fock::{self, CollectiveModelParams};
use qwfluor::medium;
use qwfluor::spectra::{self, InternalSpectrumOptions, SpectrumSeries};
use qwfluor::Error;

use crate::config::{OutputFormat, PhaseMode, RunConfig};
use crate::{CliError, Stage};

type CliResult<T> = Result<T, CliError>;

fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from).stage("output")?;
    }
    write_atomic(path, contents).stage("output")
}

fn to_toml<T: Serialize>(value: &T) -> CliResult<String> {
    toml::to_string(value)
        .map_err(|e| Error::Config(format!("cannot serialize output: {e}")))
        .stage("output")
}

/// Companion file next to `main`: `<stem>_<suffix>`.
fn sibling(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    main.with_file_name(format!("{stem}_{suffix}"))
}

fn resolve_dim(
    mut p: CollectiveModelParams,
    choice: FockDimChoice,
    config: &RunConfig,
) -> CliResult<CollectiveModelParams> {
    if choice == FockDimChoice::Auto {
        let (d, _) = dynamics::converge_truncation_with(&p, config.convergence.tol, config.convergence.schedule())
            .stage("truncation")?;
        p.fock_dim = d;
    }
    Ok(p)
}

fn occupation(l: &Liouvillian, rho: &DensityMatrix) -> qwfluor::Result<(f64, Complex64)> {
    let n = fock::expectation(&fock::number(l.dim())?, rho)?.re;
    let a = fock::expectation(&fock::annihilation(l.dim())?, rho)?;
    Ok((n, a))
}

#[derive(Serialize)]
struct SimulateTable<'a> {
    model: CollectiveModelParams,
    medium: medium::MediumParams,
    gamma_f: f64,
    occupation: f64,
    coherent_fraction: f64,
    delta_mev: &'a [f64],
    s_internal: &'a [f64],
    absorption: &'a [f64],
    s_output: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    s_noisy: Option<&'a [f64]>,
}

pub fn simulate(config: &RunConfig) -> CliResult<Vec<String>> {
    let section = config.model().stage("config")?;
    let p = resolve_dim(section.params(), section.fock_dim, config)?;
    let grid = config.grid.grid().stage("config")?;
    let m = config.medium.params(&p);
    m.validate().stage("medium")?;
    let noise = match config.noise {
        Some(n) => {
            let seed = n
                .seed
                .ok_or_else(|| Error::Config("[noise] needs an explicit seed".into()))
                .stage("config")?;
            if !(n.relative >= 0.0 && n.relative.is_finite()) {
                return Err(Error::Config(format!("noise level {} is invalid", n.relative))).stage("config");
            }
            Some((n.relative, seed))
        }
        None => None,
    };
    let l = dynamics::build_liouvillian(&p).stage("model")?;
    let rho = dynamics::steady_state(&l).stage("steady state")?;
    let (n, a_mean) = occupation(&l, &rho).stage("steady state")?;
    let internal = spectra::internal_spectrum_with_options(
        &l,
        &rho,
        &grid,
        config.detector.gamma_f,
        InternalSpectrumOptions {
            full_convolution: config.detector.full_convolution,
            ..Default::default()
        },
    )
    .stage("internal spectrum")?;
    let absorption = medium::absorption(&grid, &m).stage("absorption")?;
    let output = medium::output_spectrum(&internal, &m).stage("output spectrum")?;
    let noisy: Option<Vec<f64>> = noise.map(|(rel, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        output
            .values()
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (v * (1.0 + rel * z)).max(0.0)
            })
            .collect()
    });
    let path = config.output_path(match config.output.format {
        OutputFormat::Csv => "simulate.csv",
        OutputFormat::Toml => "simulate.toml",
    });
    let text = match config.output.format {
        OutputFormat::Csv => {
            let mut header = vec!["delta_meV", "S_internal", "a", "S_output"];
            let mut cols: Vec<&[f64]> = vec![&grid, internal.values(), absorption.values(), output.values()];
            if let Some(v) = &noisy {
                header.push("S_noisy");
                cols.push(v);
            }
            format_table(&header, &cols).stage("output")?
        }
        OutputFormat::Toml => to_toml(&SimulateTable {
            model: p,
            medium: m,
            gamma_f: config.detector.gamma_f,
            occupation: n,
            coherent_fraction: if n > 0.0 { a_mean.norm_sqr() / n } else { 0.0 },
            delta_mev: &grid,
            s_internal: internal.values(),
            absorption: absorption.values(),
            s_output: output.values(),
            s_noisy: noisy.as_deref(),
        })?,
    };
    write_output(&path, &text)?;
    let sym_in = spectra::asymmetry(&internal).ok();
    let sym_out = spectra::asymmetry(&output).ok();
    Ok(vec![
        format!("fock_dim = {}", p.fock_dim),
        format!("occupation = {n:.10}"),
        format!("coherent |<A>|^2 = {:.10}", a_mean.norm_sqr()),
        format!(
            "asymmetry internal = {}, output = {}",
            fmt_opt(sym_in),
            fmt_opt(sym_out)
        ),
        format!("wrote {}", path.display()),
    ])
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.5}"))
}

pub fn fit(config: &RunConfig) -> CliResult<Vec<String>> {
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("missing [input] section or --data".into()))
        .stage("config")?;
    let fit_config = config
        .fit
        .as_ref()
        .ok_or_else(|| Error::Config("missing [fit] section".into()))
        .stage("config")?;
    let loaded = if input.value_column == 1 && input.weight_column.is_none() {
        fit::load_spectrum(&input.data)
    } else {
        load_spectrum_columns(
            &input.data,
            ColumnSelection {
                value: input.value_column,
                weight: input.weight_column,
            },
        )
    }
    .stage("load spectrum")?;
    let result = fit::fit(&loaded.series, loaded.weights.as_deref(), fit_config).stage("fit")?;
    let path = config.output_path("fit_report.toml");
    let report = FitReport::new(fit_config, result.clone());
    write_output(&path, &report.to_toml().stage("output")?)?;

    let data = &loaded.series;
    let g = data.delta_grid();
    let model_grid = spectra::uniform_grid(g[0], g[g.len() - 1], (2 * g.len()).max(2001));
    let model = fit::forward_spectrum(&result.params, &fit_config.model, result.fock_dim, &model_grid)
        .stage("fit")?;
    let curve: Vec<f64> = g
        .iter()
        .map(|x| result.data_scale * model.interpolate(*x).unwrap_or(f64::NAN))
        .collect();
    let curve_path = sibling(&path, "model.csv");
    let table = format_table(&["delta_meV", "S_data", "S_model"], &[g, data.values(), &curve]).stage("output")?;
    write_output(&curve_path, &table)?;

    let mut lines = vec![
        format!("converged = {}, chi2 = {:.6e}, evaluations = {}", result.converged, result.chi2, result.evaluations),
        format!("fock_dim = {}", result.fock_dim),
    ];
    for p in fit::FitParam::ALL {
        let sigma = result.uncertainties.get(p.name());
        lines.push(match sigma {
            Some(s) => format!("{p} = {:.6} +- {:.2e}", result.params.get(p), s),
            None => format!("{p} = {:.6}", result.params.get(p)),
        });
    }
    lines.extend(result.diagnostics.iter().map(|d| format!("note: {d}")));
    lines.push(format!("wrote {} and {}", path.display(), curve_path.display()));
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct SfTestOutput {
    thresholds: SfThresholds,
    verdict: SfClass,
    pairs: Vec<SfReport>,
}

/// One class if all consecutive pairs agree, otherwise `partial`.
pub fn overall_verdict(pairs: &[SfReport]) -> SfClass {
    match pairs.first() {
        Some(first) if pairs.iter().all(|r| r.classification == first.classification) => first.classification,
        _ => SfClass::Partial,
    }
}

pub fn sf_test(config: &RunConfig, reports: &[PathBuf]) -> CliResult<Vec<String>> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("sf-test needs at least two fit reports".into())).stage("sf-test");
    }
    let mut fits = Vec::new();
    for path in reports {
        let text = std::fs::read_to_string(path).map_err(Error::from).stage("load report")?;
        let report = FitReport::from_toml(&text).stage("load report")?;
        let power = report
            .result
            .laser_power
            .or(report.result.collective.laser_power)
            .ok_or_else(|| Error::InvalidFit(format!("{} has no laser power", path.display())))
            .stage("load report")?;
        fits.push((power, report.result));
    }
    fits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pairs = fits
        .windows(2)
        .map(|w| fit::sf_ratio_fits(&w[0].1, &w[1].1, config.sf))
        .collect::<qwfluor::Result<Vec<_>>>()
        .stage("sf-test")?;
    let verdict = overall_verdict(&pairs);
    let path = config.output_path("sf_report.toml");
    write_output(
        &path,
        &to_toml(&SfTestOutput {
            thresholds: config.sf,
            verdict,
            pairs: pairs.clone(),
        })?,
    )?;
    let mut lines: Vec<String> = pairs
        .iter()
        .map(|r| {
            format!(
                "P {} -> {}: lhs = {:.3}, kerr_ratio = {:.3}, {}",
                r.power_1, r.power_2, r.lhs, r.kerr_ratio, r.classification
            )
        })
        .collect();
    lines.push(format!("verdict = {verdict}"));
    lines.push(format!("wrote {}", path.display()));
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    multimode: MultiModeParams,
    collective: CollectiveModelParams,
    occupation_multimode: f64,
    occupation_collective: f64,
    mode_occupations: Vec<f64>,
    max_tail: f64,
    occupation_abs_deviation: f64,
    occupation_rel_deviation: f64,
    spectrum_rel_deviation: f64,
    max_rel_deviation: f64,
}

pub fn oracle(config: &RunConfig) -> CliResult<Vec<String>> {
    let o = config
        .oracle
        .as_ref()
        .ok_or_else(|| Error::Config("missing [oracle] section".into()))
        .stage("config")?;
    let phases = match o.phase_mode {
        PhaseMode::Equal => vec![0.0; o.n_modes],
        PhaseMode::Antiphase => (0..o.n_modes)
            .map(|k| if k % 2 == 0 { 0.0 } else { std::f64::consts::PI })
            .collect(),
        PhaseMode::Random => {
            let seed = o
                .seed
                .ok_or_else(|| Error::Config("random phases need an explicit seed".into()))
                .stage("config")?;
            collective::random_phases(o.n_modes, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        PhaseMode::Explicit => o
            .phases
            .clone()
            .ok_or_else(|| Error::Config("phase_mode = \"explicit\" needs `phases`".into()))
            .stage("config")?,
    };
    let m = MultiModeParams::in_phase(o.n_modes, o.rabi_single, o.kerr_single, o.delta, o.gamma, o.dim_per_mode)
        .with_phases(phases);
    m.validate().stage("oracle")?;
    let grid = config.grid.grid().stage("config")?;
    let multi = collective::oracle_multimode_steady(&m, &grid).stage("multi-mode oracle")?;
    let dim_c = o
        .collective_fock_dim
        .unwrap_or(o.n_modes * (o.dim_per_mode.max(1) - 1) + 1)
        .max(2);
    let coll = collective::collective_reduce(&m).with_fock_dim(dim_c);
    let l = dynamics::build_liouvillian(&coll).stage("collective model")?;
    let rho = dynamics::steady_state(&l).stage("collective model")?;
    let (n_c, _) = occupation(&l, &rho).stage("collective model")?;
    let s_c = spectra::incoherent_spectrum(&l, &rho, &grid).stage("collective spectrum")?;
    let n_m = multi.occupation_collective;
    let abs_dev = (n_m - n_c).abs();
    let rel_dev = abs_dev / n_c.abs().max(DARK_FLOOR);
    let spec_dev = spectrum_deviation(&multi.spectrum, &s_c);
    let out = OracleOutput {
        multimode: m,
        collective: coll,
        occupation_multimode: n_m,
        occupation_collective: n_c,
        mode_occupations: multi.mode_occupations.clone(),
        max_tail: multi.max_tail,
        occupation_abs_deviation: abs_dev,
        occupation_rel_deviation: rel_dev,
        spectrum_rel_deviation: spec_dev,
        max_rel_deviation: rel_dev.max(spec_dev),
    };
    let path = config.output_path("oracle.toml");
    write_output(&path, &to_toml(&out)?)?;
    let spec_path = sibling(&path, "spectra.csv");
    let table = format_table(
        &["delta_meV", "S_multimode", "S_collective"],
        &[&grid, multi.spectrum.values(), s_c.values()],
    )
    .stage("output")?;
    write_output(&spec_path, &table)?;
    Ok(vec![
        format!("occupation multi-mode = {n_m:.12e}, collective = {n_c:.12e}"),
        format!("max relative deviation = {:.3e}", out.max_rel_deviation),
        format!("wrote {} and {}", path.display(), spec_path.display()),
    ])
}

/// Occupations and spectral peaks below this count as dark when forming
/// relative deviations.
pub const DARK_FLOOR: f64 = 1e-12;

/// `max |a − b| / max(peak a, peak b, DARK_FLOOR)`.
pub fn spectrum_deviation(a: &SpectrumSeries, b: &SpectrumSeries) -> f64 {
    let peak = a
        .values()
        .iter()
        .chain(b.values())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / peak.max(DARK_FLOOR)
}

pub fn convergence(config: &RunConfig) -> CliResult<Vec<String>> {
    let section = config.model().stage("config")?;
    let p = section.params();
    let (dim, report) = dynamics::converge_truncation_with(&p, config.convergence.tol, config.convergence.schedule())
        .stage("truncation")?;
    let dims: Vec<f64> = report.samples.iter().map(|s| s.dim as f64).collect();
    let occ: Vec<f64> = report.samples.iter().map(|s| s.occupation).collect();
    let tail: Vec<f64> = report.samples.iter().map(|s| s.tail).collect();
    let path = config.output_path("convergence.csv");
    write_output(
        &path,
        &format_table(&["fock_dim", "occupation", "tail"], &[&dims, &occ, &tail]).stage("output")?,
    )?;
    Ok(vec![
        format!("converged fock_dim = {dim} (tol {:e})", report.tol),
        format!("wrote {}", path.display()),
    ])
}

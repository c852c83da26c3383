// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spectrum tables and atomic file output.
//!
//! A spectrum table is plain text: `#` starts a comment line, data rows hold
//! `delta_meV<sep>intensity[<sep>weight]` with `<sep>` a tab or a comma.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::{SpectrumKind, SpectrumSeries};

/// Which columns of a table hold the intensity and the optional weight
/// (zero-based, column 0 is always the detuning).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSelection {
    pub value: usize,
    pub weight: Option<usize>,
}

impl Default for ColumnSelection {
    fn default() -> Self {
        ColumnSelection {
            value: 1,
            weight: None,
        }
    }
}

/// Parsed table: an experimental spectrum plus optional per-point weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpectrum {
    pub series: SpectrumSeries,
    pub weights: Option<Vec<f64>>,
}

pub fn load_spectrum(path: &Path) -> Result<LoadedSpectrum> {
    parse_spectrum(&std::fs::read_to_string(path)?)
}

pub fn load_spectrum_columns(path: &Path, columns: ColumnSelection) -> Result<LoadedSpectrum> {
    parse_spectrum_columns(&std::fs::read_to_string(path)?, Some(columns))
}

/// Two-column tables carry no weights; a third column is read as weights.
/// Wider tables need an explicit [`ColumnSelection`].
pub fn parse_spectrum(text: &str) -> Result<LoadedSpectrum> {
    parse_spectrum_columns(text, None)
}

pub fn parse_spectrum_columns(text: &str, columns: Option<ColumnSelection>) -> Result<LoadedSpectrum> {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    let mut width: Option<usize> = None;
    let mut selection = columns;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            line: line_no,
            reason,
        };
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(format!("expected {w} columns, found {}", fields.len())))
            }
            _ => {}
        }
        let sel = match selection {
            Some(s) => s,
            None => {
                let s = match fields.len() {
                    2 => ColumnSelection::default(),
                    3 => ColumnSelection {
                        value: 1,
                        weight: Some(2),
                    },
                    n => {
                        return Err(parse_err(format!(
                            "{n} columns; select the intensity column explicitly"
                        )))
                    }
                };
                selection = Some(s);
                s
            }
        };
        let needed = sel.value.max(sel.weight.unwrap_or(0));
        if sel.value == 0 || sel.weight == Some(0) || needed >= fields.len() {
            return Err(parse_err(format!(
                "column selection {sel:?} does not fit {} columns",
                fields.len()
            )));
        }
        let number = |k: usize, what: &str| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("{what} `{}` is not a number", fields[k])))
        };
        let x = number(0, "detuning")?;
        let y = number(sel.value, "intensity")?;
        if !x.is_finite() {
            return Err(parse_err(format!("non-finite detuning {x}")));
        }
        if !y.is_finite() {
            return Err(parse_err(format!("non-finite intensity {y}")));
        }
        if y < 0.0 {
            return Err(parse_err(format!("negative intensity {y}")));
        }
        if let Some(&prev) = grid.last() {
            if x <= prev {
                return Err(parse_err(format!(
                    "detuning {x} does not increase (previous {prev})"
                )));
            }
        }
        if let Some(k) = sel.weight {
            let w = number(k, "weight")?;
            if !(w.is_finite() && w > 0.0) {
                return Err(parse_err(format!("weight {w} must be positive and finite")));
            }
            weights.push(w);
        }
        grid.push(x);
        values.push(y);
        last_line = line_no;
    }
    if grid.len() < 2 {
        return Err(Error::Parse {
            line: last_line,
            reason: format!("{} data rows; at least 2 are required", grid.len()),
        });
    }
    let has_weights = selection.and_then(|s| s.weight).is_some();
    Ok(LoadedSpectrum {
        series: SpectrumSeries::new(grid, values, SpectrumKind::Experimental)?,
        weights: has_weights.then_some(weights),
    })
}

/// Comma-separated table with a `#` header; values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_table(header: &[&str], columns: &[&[f64]]) -> Result<String> {
    let rows = columns.first().map_or(0, |c| c.len());
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::GridMismatch("table columns have different lengths".into()));
    }
    let mut out = format!("# {}\n", header.join(","));
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| format!("{:?}", c[r])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_with_comments_and_tabs() {
        let s = parse_spectrum("# header\n-1.0\t0.5\n\n0.0\t1.0\n# mid\n1.0\t0.25\n").unwrap();
        assert_eq!(s.series.len(), 3);
        assert_eq!(s.series.values(), &[0.5, 1.0, 0.25]);
        assert_eq!(s.weights, None);
        assert_eq!(s.series.kind(), SpectrumKind::Experimental);
    }

    #[test]
    fn weight_column() {
        let s = parse_spectrum("0,1,2\n1,2,4\n").unwrap();
        assert_eq!(s.weights, Some(vec![2.0, 4.0]));
        assert!(parse_spectrum("0,1,0\n1,2,4\n").is_err());
    }

    #[test]
    fn descending_grid_names_line() {
        let err = parse_spectrum("# c\n0.0,1\n0.5,1\n0.2,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn nan_intensity_is_rejected() {
        let err = parse_spectrum("0.0,1\n0.5,NaN\n").unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 2);
                assert!(reason.contains("non-finite"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_spectrum("0,1\n1,x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_spectrum("0,1\n1,2,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_spectrum("0,1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_spectrum("0,1,2,3\n1,2,3,4\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn table_round_trip_is_exact() {
        let grid = [-0.1, 1.0 / 3.0, 0.7];
        let vals = [1e-17, std::f64::consts::PI, 2.5e10];
        let text = format_table(&["delta_meV", "S"], &[&grid, &vals]).unwrap();
        let back = parse_spectrum(&text).unwrap();
        assert_eq!(back.series.delta_grid(), &grid);
        assert_eq!(back.series.values(), &vals);
        let wide = format_table(&["d", "a", "b"], &[&grid, &vals, &vals]).unwrap();
        let picked = parse_spectrum_columns(
            &wide,
            Some(ColumnSelection {
                value: 2,
                weight: None,
            }),
        )
        .unwrap();
        assert_eq!(picked.series.values(), &vals);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a").unwrap();
        write_atomic(&path, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

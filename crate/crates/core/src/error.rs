// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {dim}: at least 2 levels are required")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("steady state is not unique (reciprocal condition number {rcond:e}); null space has dimension > 1")]
    AmbiguousSteadyState { rcond: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("Fock truncation did not converge up to D = {max_dim} (last relative change {last_change:e}); the drive may be too strong for the Kerr and damping rates")]
    TruncationNotConverged { max_dim: usize, last_change: f64 },

    #[error("correlation grid too short: tail residual {residual:e} exceeds {limit:e} at tau = {tau_max}")]
    GridTooShort {
        residual: f64,
        limit: f64,
        tau_max: f64,
    },

    #[error("resolvent solve failed at detuning {delta} meV: {reason}")]
    ResolventFailed { delta: f64, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unphysical model value {value} at detuning {delta} meV")]
    ModelInconsistency { delta: f64, value: f64 },

    #[error("multi-mode dimension {dim} exceeds the oracle limit {limit}")]
    ScaleGuard { dim: usize, limit: usize },

    #[error("per-mode truncation too small: mode {mode} has top-level population {population:e} > {limit:e}")]
    TruncationTail {
        mode: usize,
        population: f64,
        limit: f64,
    },

    #[error("invalid fit: {0}")]
    InvalidFit(String),

    #[error("data extends beyond the model grid: data [{data_lo}, {data_hi}] vs model [{model_lo}, {model_hi}] meV")]
    Coverage {
        data_lo: f64,
        data_hi: f64,
        model_lo: f64,
        model_hi: f64,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for errors caused by rejected input rather than failed numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter { .. }
                | Error::InvalidArgument(_)
                | Error::GridMismatch(_)
                | Error::InvalidGrid(_)
                | Error::InvalidFit(_)
                | Error::Coverage { .. }
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

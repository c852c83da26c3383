// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock-space operator algebra for the collective exciton mode.
//!
//! States `|0⟩ … |D−1⟩`; `entries[[m, n]] = ⟨m|Ô|n⟩`. All energies and rates are
//! in meV with ħ = 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// Default Fock truncation.
pub const DEFAULT_FOCK_DIM: usize = 40;

/// Hermiticity tolerance for Hamiltonian-flagged operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hamiltonian,
}

/// Dense operator on a truncated Fock space of dimension `dim ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMat,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        check_dim(entries.nrows())?;
        if entries.ncols() != entries.nrows() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        Ok(OperatorMatrix {
            entries,
            kind: OperatorKind::General,
        })
    }

    /// Wraps a matrix as a Hamiltonian, checking Hermiticity.
    pub fn hamiltonian_from(entries: CMat) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let defect = linalg::hermiticity_defect(&op.entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian is not Hermitian: max |H - H†| = {defect:e}"
            )));
        }
        op.kind = OperatorKind::Hamiltonian;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMat::eye(dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[[m, n]]
    }

    pub fn dagger(&self) -> OperatorMatrix {
        OperatorMatrix {
            entries: linalg::dagger(&self.entries),
            kind: self.kind,
        }
    }

    /// Operator product `self · rhs`.
    pub fn mul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        Ok(OperatorMatrix {
            entries: self.entries.dot(&rhs.entries),
            kind: OperatorKind::General,
        })
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        let ab = self.mul(rhs)?;
        let ba = rhs.mul(self)?;
        Ok(OperatorMatrix {
            entries: ab.entries - ba.entries,
            kind: OperatorKind::General,
        })
    }
}

/// Physical parameters of the single collective Kerr mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectiveModelParams {
    /// Exciton minus laser frequency, meV.
    pub delta: f64,
    /// Collective Rabi coupling, meV.
    pub rabi: f64,
    /// Collective Kerr strength, meV.
    pub kerr: f64,
    /// Radiative decay rate, meV.
    pub gamma: f64,
    /// Laser power in µW; only used by the superfluorescence analysis.
    #[serde(default)]
    pub laser_power: Option<f64>,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
}

fn default_fock_dim() -> usize {
    DEFAULT_FOCK_DIM
}

impl CollectiveModelParams {
    pub fn new(delta: f64, rabi: f64, kerr: f64, gamma: f64) -> Self {
        CollectiveModelParams {
            delta,
            rabi,
            kerr,
            gamma,
            laser_power: None,
            fock_dim: DEFAULT_FOCK_DIM,
        }
    }

    pub fn with_fock_dim(mut self, dim: usize) -> Self {
        self.fock_dim = dim;
        self
    }

    pub fn with_laser_power(mut self, power: f64) -> Self {
        self.laser_power = Some(power);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("rabi", self.rabi),
            ("kerr", self.kerr),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, v, "must be finite"));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", self.gamma, "must be positive"));
        }
        if self.rabi < 0.0 {
            return Err(Error::param("rabi", self.rabi, "must be non-negative"));
        }
        if let Some(p) = self.laser_power {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::param("laser_power", p, "must be positive"));
            }
        }
        check_dim(self.fock_dim)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension { dim })
    } else {
        Ok(())
    }
}

/// Annihilation operator: `⟨n−1|Â|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let mut a = CMat::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = c((n as f64).sqrt());
    }
    OperatorMatrix::new(a)
}

pub fn number(dim: usize) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let mut n_op = CMat::zeros((dim, dim));
    for n in 0..dim {
        n_op[[n, n]] = c(n as f64);
    }
    OperatorMatrix::new(n_op)
}

/// `H = δ Â†Â + Ω′(Â + Â†) + G′ Â†²Â²` in the laser frame.
pub fn hamiltonian(params: &CollectiveModelParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let d = params.fock_dim;
    let mut h = CMat::zeros((d, d));
    for n in 0..d {
        let nf = n as f64;
        h[[n, n]] = c(nf * params.delta + nf * (nf - 1.0) * params.kerr);
        if n + 1 < d {
            let off = c(params.rabi * (nf + 1.0).sqrt());
            h[[n, n + 1]] = off;
            h[[n + 1, n]] = off;
        }
    }
    OperatorMatrix::hamiltonian_from(h)
}

/// `Tr[op · ρ]`.
pub fn expectation(op: &OperatorMatrix, rho: &DensityMatrix) -> Result<Complex64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: rho.dim(),
        });
    }
    let a = op.entries();
    let r = rho.entries();
    let d = op.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[[i, k]] * r[[k, i]];
        }
    }
    Ok(acc)
}

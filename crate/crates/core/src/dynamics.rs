// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad generator, steady states, time propagation and Fock-truncation
//! convergence for the damped, driven Kerr mode.
//!
//! The generator acts on column-stacked density matrices:
//!
//! ```text
//! ρ̇ = −i[H, ρ] + Σ_k (γ_k / 2)(2 L_k ρ L_k† − L_k†L_k ρ − ρ L_k†L_k)
//! ```
//!
//! with `X ρ ↦ (I ⊗ X) vec ρ` and `ρ X ↦ (Xᵀ ⊗ I) vec ρ`.

use ndarray_linalg::{EigVals, EigValsh, FactorizeInto, ReciprocalConditionNum, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, CollectiveModelParams, OperatorMatrix};
use crate::linalg::{
    self, c, expm, BandedLu, CMat, CVec, CsrMatrix, Dopri5, I, ONE, ZERO,
};

/// Hermiticity tolerance of a physical state.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance of a physical state.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue; finite truncation produces tiny negativity.
pub const POSITIVITY_TOL: f64 = -1e-8;
/// Largest superoperator dimension propagated with a dense matrix exponential.
pub const EXPM_LIMIT: usize = 3600;
/// Relative tolerance of the adaptive integrator used above [`EXPM_LIMIT`].
pub const ODE_RTOL: f64 = 1e-10;
/// Largest superoperator dimension solved with dense LU.
pub const DENSE_LIMIT: usize = 1600;

/// Hermitian, unit-trace, positive-semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMat,
}

impl DensityMatrix {
    /// Validates all three state invariants.
    pub fn new(entries: CMat) -> Result<Self> {
        let d = entries.nrows();
        if d < 2 {
            return Err(Error::InvalidDimension { dim: d });
        }
        if entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: entries.ncols(),
            });
        }
        let herm = linalg::hermiticity_defect(&entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian: max |ρ − ρ†| = {herm:e}"
            )));
        }
        let tr = linalg::trace(&entries);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let rho = DensityMatrix { entries };
        let min_eig = rho.min_eigenvalue()?;
        if min_eig < POSITIVITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min_eig:e} below {POSITIVITY_TOL:e}"
            )));
        }
        Ok(rho)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::pure(&basis_state(dim, 0)?)
    }

    /// Projector onto a (normalized internally) state vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let norm = linalg::norm2(psi);
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let psi = psi / c(norm);
        let d = psi.len();
        let m = CMat::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj());
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let h = (&self.entries + &linalg::dagger(&self.entries)) * c(0.5);
        let ev = h.eigvalsh(UPLO::Lower)?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized `ψ`.
    pub fn fidelity_with_pure(&self, psi: &CVec) -> f64 {
        let norm2 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let rho_psi = self.entries.dot(psi);
        let overlap: Complex64 = psi.iter().zip(rho_psi.iter()).map(|(a, b)| a.conj() * b).sum();
        overlap.re / norm2
    }

    pub fn to_vec(&self) -> CVec {
        linalg::vec_cols(&self.entries)
    }
}

pub fn basis_state(dim: usize, n: usize) -> Result<CVec> {
    if n >= dim {
        return Err(Error::InvalidArgument(format!(
            "basis state {n} outside dimension {dim}"
        )));
    }
    let mut v = CVec::zeros(dim);
    v[n] = ONE;
    Ok(v)
}

/// Truncated coherent state `e^{−|α|²/2} Σ αⁿ/√n! |n⟩`, renormalized.
pub fn coherent_state(dim: usize, alpha: Complex64) -> CVec {
    let mut v = CVec::zeros(dim);
    let mut term = c((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..dim {
        v[n] = term;
        term *= alpha / c(((n + 1) as f64).sqrt());
    }
    let norm = linalg::norm2(&v);
    v / c(norm)
}

/// Hamiltonian plus damped jump operators, dense on a `dim`-level space.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: CMat,
    /// `(rate, jump operator)`; each contributes `(rate/2)(2LρL† − {L†L, ρ})`.
    pub jumps: Vec<(f64, CMat)>,
}

impl LindbladModel {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn generator(&self) -> CsrMatrix {
        let d = self.dim();
        let n = d * d;
        let mut t: Vec<(usize, usize, Complex64)> = Vec::new();
        let nz = |m: &CMat| -> Vec<(usize, usize, Complex64)> {
            m.indexed_iter()
                .filter(|(_, v)| **v != ZERO)
                .map(|((i, j), v)| (i, j, *v))
                .collect()
        };
        // Left multiplication by X: (I ⊗ X), entry (i + d k, j + d k) = X_ij.
        let left = |t: &mut Vec<(usize, usize, Complex64)>, x: &[(usize, usize, Complex64)], s: Complex64| {
            for k in 0..d {
                for &(i, j, v) in x {
                    t.push((i + d * k, j + d * k, s * v));
                }
            }
        };
        // Right multiplication by X: (Xᵀ ⊗ I), entry (k + d i, k + d j) = X_ji.
        let right = |t: &mut Vec<(usize, usize, Complex64)>, x: &[(usize, usize, Complex64)], s: Complex64| {
            for &(j, i, v) in x {
                for k in 0..d {
                    t.push((k + d * i, k + d * j, s * v));
                }
            }
        };
        let h = nz(&self.hamiltonian);
        left(&mut t, &h, -I);
        right(&mut t, &h, I);
        for (rate, op) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let half = c(rate / 2.0);
            let l = nz(op);
            let ldl = nz(&linalg::dagger(op).dot(op));
            left(&mut t, &ldl, -half);
            right(&mut t, &ldl, -half);
            // L ρ L† ↦ (conj(L) ⊗ L): entry (i + d k, j + d l) = L_ij conj(L_kl).
            for &(i, j, a) in &l {
                for &(k, m, b) in &l {
                    t.push((i + d * k, j + d * m, c(*rate) * a * b.conj()));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }
}

/// Generator of the master equation on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    generator: CsrMatrix,
    params: Option<CollectiveModelParams>,
}

impl Liouvillian {
    pub fn from_model(model: &LindbladModel) -> Result<Self> {
        let d = model.dim();
        if d < 2 {
            return Err(Error::InvalidDimension { dim: d });
        }
        Ok(Liouvillian {
            dim: d,
            generator: model.generator(),
            params: None,
        })
    }

    /// Hilbert-space dimension `D`; the generator is `D² × D²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn super_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn params(&self) -> Option<&CollectiveModelParams> {
        self.params.as_ref()
    }

    pub fn generator(&self) -> &CsrMatrix {
        &self.generator
    }

    pub fn generator_dense(&self) -> CMat {
        self.generator.to_dense()
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        self.generator.matvec(x)
    }

    /// `‖Tr ∘ L‖₂`, which vanishes for a trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        linalg::norm2(&self.generator.vecmat(&linalg::trace_row(self.dim)))
    }

    /// Full dense spectrum of the generator.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let ev = self.generator_dense().eigvals()?;
        Ok(ev.to_vec())
    }
}

pub fn build_liouvillian(params: &CollectiveModelParams) -> Result<Liouvillian> {
    let h = fock::hamiltonian(params)?;
    let a = fock::annihilation(params.fock_dim)?;
    let model = LindbladModel {
        hamiltonian: h.entries().clone(),
        jumps: vec![(params.gamma, a.entries().clone())],
    };
    let mut l = Liouvillian::from_model(&model)?;
    l.params = Some(*params);
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteadyStateMethod {
    /// Banded when the generator's bandwidth is small, otherwise dense below
    /// [`DENSE_LIMIT`] and relaxation above it.
    #[default]
    Auto,
    /// Dense LU with one generator row replaced by the trace row.
    Dense,
    /// Banded LU of the generator with `ρ₀₀` pinned, then trace-normalized.
    Banded,
    /// Adaptive integration until `‖L ρ‖` stalls below tolerance.
    Relaxation,
}

/// Tolerance on `‖L ρ_ss‖` (Frobenius norm of the stacked residual).
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    steady_state_with(l, SteadyStateMethod::Auto)
}

pub fn steady_state_with(l: &Liouvillian, method: SteadyStateMethod) -> Result<DensityMatrix> {
    let n = l.super_dim();
    let method = match method {
        SteadyStateMethod::Auto => {
            let (kl, ku) = l.generator.bandwidths();
            if (kl + ku) * (kl + ku) * 16 <= n * n / 4 && n > 64 {
                SteadyStateMethod::Banded
            } else if n <= DENSE_LIMIT {
                SteadyStateMethod::Dense
            } else {
                SteadyStateMethod::Relaxation
            }
        }
        m => m,
    };
    let x = match method {
        SteadyStateMethod::Dense => steady_dense(l)?,
        SteadyStateMethod::Banded => match steady_banded(l) {
            Ok(x) => x,
            // A pinned vacuum population of zero or a degenerate null space
            // both show up as a tiny pivot; the dense path tells them apart.
            Err(_) if n <= DENSE_LIMIT * 4 => steady_dense(l)?,
            Err(e) => return Err(e),
        },
        SteadyStateMethod::Relaxation => steady_relaxation(l)?,
        SteadyStateMethod::Auto => unreachable!(),
    };
    finish_state(l, x)
}

fn finish_state(l: &Liouvillian, x: CVec) -> Result<DensityMatrix> {
    let d = l.dim();
    let mut m = linalg::unvec_cols(&x, d);
    m = (&m + &linalg::dagger(&m)) * c(0.5);
    let tr = linalg::trace(&m);
    m /= tr;
    let residual = linalg::norm2(&l.apply(&linalg::vec_cols(&m)));
    if residual > STEADY_RESIDUAL_TOL {
        return Err(Error::Linalg(format!(
            "steady-state residual ‖Lρ‖ = {residual:e} exceeds {STEADY_RESIDUAL_TOL:e}"
        )));
    }
    DensityMatrix::new(m)
}

fn steady_dense(l: &Liouvillian) -> Result<CVec> {
    let d = l.dim();
    let n = l.super_dim();
    let mut a = l.generator_dense();
    let tr = linalg::trace_row(d);
    a.row_mut(0).assign(&tr);
    let mut b = CVec::zeros(n);
    b[0] = ONE;
    // LAPACK reports an exactly zero pivot as a factorization error.
    let lu = a
        .factorize_into()
        .map_err(|_| Error::AmbiguousSteadyState { rcond: 0.0 })?;
    let rcond = lu.rcond()?;
    if !(rcond > 1e-13) {
        return Err(Error::AmbiguousSteadyState { rcond });
    }
    Ok(lu.solve(&b)?)
}

fn steady_banded(l: &Liouvillian) -> Result<CVec> {
    let n = l.super_dim();
    let lu = BandedLu::factor(&l.generator, &[0], ZERO)?;
    if lu.min_pivot_ratio() < 1e-13 {
        return Err(Error::AmbiguousSteadyState {
            rcond: lu.min_pivot_ratio(),
        });
    }
    // Pin ρ₀₀ = 1: move column 0 to the right-hand side, drop row 0.
    let mut rhs = CVec::zeros(n - 1);
    for r in 1..n {
        rhs[r - 1] = -l.generator.get(r, 0);
    }
    let y = lu.solve(&rhs);
    let mut x = CVec::zeros(n);
    x[0] = ONE;
    for r in 1..n {
        x[r] = y[r - 1];
    }
    Ok(x)
}

fn steady_relaxation(l: &Liouvillian) -> Result<CVec> {
    let d = l.dim();
    let mut x = DensityMatrix::vacuum(d)?.to_vec();
    let mut ode = Dopri5::new(|y: &CVec| l.apply(y), 1e-11, 1e-15);
    let mut t = 0.0;
    let mut chunk = 10.0 / l.generator.norm_inf().max(1e-3);
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        ode.advance(&mut x, t, t + chunk)?;
        t += chunk;
        let res = linalg::norm2(&l.apply(&x));
        if res < 0.1 * STEADY_RESIDUAL_TOL {
            return Ok(x);
        }
        if res >= last && res < STEADY_RESIDUAL_TOL {
            return Ok(x);
        }
        last = res;
        chunk *= 1.5;
    }
    Err(Error::Linalg(format!(
        "relaxation to the steady state stalled at residual {last:e} after t = {t}"
    )))
}

/// Steady state from the eigenvector of the smallest-magnitude eigenvalue of
/// the dense generator; an independent cross-check of [`steady_state`].
pub fn steady_state_eigen(l: &Liouvillian) -> Result<DensityMatrix> {
    use ndarray_linalg::Eig;
    let (vals, vecs) = l.generator_dense().eig()?;
    let k = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Linalg("empty spectrum".into()))?;
    let x = vecs.column(k).to_owned();
    finish_state(l, x)
}

/// `e^{L t} x` for a density-matrix-shaped `x`.
pub fn propagate(l: &Liouvillian, x: &CMat, t: f64) -> Result<CMat> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "propagation time must be non-negative, got {t}"
        )));
    }
    if x.nrows() != l.dim() || x.ncols() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            actual: x.nrows(),
        });
    }
    let v = linalg::vec_cols(x);
    let out = Propagator::new(l).advance(&v, t)?;
    Ok(linalg::unvec_cols(&out, l.dim()))
}

/// Repeated propagation by the generator, caching the exponential of the most
/// recent step on the dense path.
pub struct Propagator<'a> {
    l: &'a Liouvillian,
    cached: Option<(f64, CMat)>,
}

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian) -> Self {
        Propagator { l, cached: None }
    }

    pub fn uses_expm(&self) -> bool {
        self.l.super_dim() <= EXPM_LIMIT
    }

    pub fn advance(&mut self, v: &CVec, t: f64) -> Result<CVec> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "propagation time must be non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(v.clone());
        }
        if self.uses_expm() {
            let hit = matches!(&self.cached, Some((dt, _)) if (dt - t).abs() <= 1e-12 * t);
            if !hit {
                let m = self.l.generator_dense() * c(t);
                self.cached = Some((t, expm(&m)?));
            }
            let (_, e) = self.cached.as_ref().expect("cache filled above");
            Ok(e.dot(v))
        } else {
            let scale = v.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(1e-300);
            let mut ode = Dopri5::new(|y: &CVec| self.l.apply(y), ODE_RTOL, ODE_RTOL * 1e-3 * scale);
            let mut y = v.clone();
            ode.advance(&mut y, 0.0, t)?;
            Ok(y)
        }
    }

    /// Values of `e^{L τ} v` on an ascending grid starting at `τ = 0`.
    pub fn grid(&mut self, v: &CVec, taus: &[f64]) -> Result<Vec<CVec>> {
        check_tau_grid(taus)?;
        let mut out = Vec::with_capacity(taus.len());
        let mut cur = v.clone();
        let mut prev = 0.0;
        if self.uses_expm() {
            for &tau in taus {
                cur = self.advance(&cur, tau - prev)?;
                prev = tau;
                out.push(cur.clone());
            }
        } else {
            let scale = v.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(1e-300);
            let l = self.l;
            let mut ode = Dopri5::new(|y: &CVec| l.apply(y), ODE_RTOL, ODE_RTOL * 1e-3 * scale);
            for &tau in taus {
                ode.advance(&mut cur, prev, tau)?;
                prev = tau;
                out.push(cur.clone());
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_tau_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() || taus[0] != 0.0 {
        return Err(Error::InvalidGrid("tau grid must start at 0".into()));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("tau grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Increasing Fock-dimension schedule for [`converge_truncation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSchedule {
    pub start: usize,
    pub step: usize,
    /// Comparison partner of each candidate `D` is `D + lookahead`.
    pub lookahead: usize,
    pub max_dim: usize,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        TruncationSchedule {
            start: 16,
            step: 4,
            lookahead: 8,
            max_dim: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSample {
    pub dim: usize,
    pub occupation: f64,
    /// `Σ_{n ≥ D−4} ⟨n|ρ|n⟩`.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub dim: usize,
    pub tol: f64,
    pub samples: Vec<TruncationSample>,
}

fn truncation_sample(params: &CollectiveModelParams, dim: usize) -> Result<TruncationSample> {
    let p = params.with_fock_dim(dim);
    let rho = steady_state(&build_liouvillian(&p)?)?;
    let n = fock::number(dim)?;
    let occupation = fock::expectation(&n, &rho)?.re;
    let pops = rho.populations();
    let tail = pops[dim.saturating_sub(4)..].iter().sum();
    Ok(TruncationSample {
        dim,
        occupation,
        tail,
    })
}

/// Smallest `D` of the schedule whose occupation changes by less than `tol`
/// (relative) and whose tail population changes by less than `tol` (absolute,
/// probabilities are already normalized) when `D → D + lookahead`.
pub fn converge_truncation(
    params: &CollectiveModelParams,
    tol: f64,
) -> Result<(usize, TruncationReport)> {
    converge_truncation_with(params, tol, TruncationSchedule::default())
}

pub fn converge_truncation_with(
    params: &CollectiveModelParams,
    tol: f64,
    schedule: TruncationSchedule,
) -> Result<(usize, TruncationReport)> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", tol, "must be positive"));
    }
    if schedule.start < 2 || schedule.step == 0 || schedule.lookahead == 0 {
        return Err(Error::InvalidArgument(format!("invalid schedule {schedule:?}")));
    }
    params.validate()?;
    let mut cache: Vec<TruncationSample> = Vec::new();
    let sample = |dim: usize, cache: &mut Vec<TruncationSample>| -> Result<TruncationSample> {
        if let Some(s) = cache.iter().find(|s| s.dim == dim) {
            return Ok(*s);
        }
        let s = truncation_sample(params, dim)?;
        cache.push(s);
        Ok(s)
    };
    let mut dim = schedule.start;
    let mut last_change = f64::INFINITY;
    while dim + schedule.lookahead <= schedule.max_dim {
        let lo = sample(dim, &mut cache)?;
        let hi = sample(dim + schedule.lookahead, &mut cache)?;
        let occ_change = (lo.occupation - hi.occupation).abs();
        let tail_change = (lo.tail - hi.tail).abs();
        let occ_ok = occ_change <= tol * hi.occupation.abs() + 1e-14;
        last_change = occ_change / hi.occupation.abs().max(1e-300);
        if occ_ok && tail_change < tol {
            cache.sort_by_key(|s| s.dim);
            return Ok((
                dim,
                TruncationReport {
                    dim,
                    tol,
                    samples: cache,
                },
            ));
        }
        dim += schedule.step;
    }
    Err(Error::TruncationNotConverged {
        max_dim: schedule.max_dim,
        last_change,
    })
}

/// Convenience: collective annihilation operator for a Liouvillian built from
/// collective parameters.
pub fn mode_operator(l: &Liouvillian) -> Result<OperatorMatrix> {
    fock::annihilation(l.dim())
}

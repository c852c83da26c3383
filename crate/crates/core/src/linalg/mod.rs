// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense and sparse complex linear algebra used by the master-equation code.
//!
//! Density matrices are vectorized by stacking columns: element `(i, j)` of a
//! `d × d` matrix lands at index `i + d * j`. With this convention
//! `vec(X ρ Y) = (Yᵀ ⊗ X) vec(ρ)`.

mod banded;
mod expm;
mod ode;
mod sparse;

pub use banded::BandedLu;
pub use expm::expm;
pub use ode::{Dopri5, OdeStats};
pub use sparse::CsrMatrix;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Column-stacked vectorization of a square matrix.
pub fn vec_cols(m: &CMat) -> CVec {
    let d = m.nrows();
    let mut out = CVec::zeros(d * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..d {
            out[i + d * j] = m[[i, j]];
        }
    }
    out
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "vector length is not a square of {d}");
    CMat::from_shape_fn((d, d), |(i, j)| v[i + d * j])
}

/// Row vector `w` with `w · vec(X) = Tr[op · X]`, i.e. `w = vec(opᵀ)`.
pub fn trace_functional(op: &CMat) -> CVec {
    vec_cols(&op.t().to_owned())
}

/// The functional `vec(X) ↦ Tr X`.
pub fn trace_row(d: usize) -> CVec {
    let mut w = CVec::zeros(d * d);
    for i in 0..d {
        w[i + d * i] = ONE;
    }
    w
}

pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn identity(d: usize) -> CMat {
    CMat::eye(d)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diag().sum()
}

/// Largest entry magnitude of `m - m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn norm2(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Plain bilinear product `Σ a_k b_k` (no conjugation).
pub fn dotu(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(m: &CMat) -> f64 {
    m.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_identity_matches_kron_convention() {
        let x = CMat::from_shape_fn((3, 3), |(i, j)| Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let y = CMat::from_shape_fn((3, 3), |(i, j)| Complex64::new((i * j) as f64, 1.0));
        let rho = CMat::from_shape_fn((3, 3), |(i, j)| Complex64::new(0.3 * i as f64, 0.1 * j as f64));
        let lhs = vec_cols(&x.dot(&rho).dot(&y));
        let rhs = kron(&y.t().to_owned(), &x).dot(&vec_cols(&rho));
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(unvec_cols(&vec_cols(&rho), 3), rho);
    }

    #[test]
    fn trace_functional_evaluates_trace_of_product() {
        let a = CMat::from_shape_fn((3, 3), |(i, j)| Complex64::new(i as f64, j as f64));
        let x = CMat::from_shape_fn((3, 3), |(i, j)| Complex64::new(1.0 + j as f64, i as f64));
        let expect = trace(&a.dot(&x));
        let got = dotu(&trace_functional(&a), &vec_cols(&x));
        assert!((expect - got).norm() < 1e-12);
        assert!((dotu(&trace_row(3), &vec_cols(&x)) - trace(&x)).norm() < 1e-12);
    }
}

// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use super::{CMat, CVec, ZERO};

/// Compressed sparse row matrix of complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    pub fn from_dense(a: &CMat) -> Self {
        let mut t = Vec::new();
        for ((i, j), &v) in a.indexed_iter() {
            if v != ZERO {
                t.push((i, j, v));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r)
            .find(|&(j, _)| j == c)
            .map(|(_, v)| v)
            .unwrap_or(ZERO)
    }

    pub fn matvec(&self, x: &CVec) -> CVec {
        let mut y = CVec::zeros(self.nrows);
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &CVec, y: &mut CVec) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    /// `wᵀ A` for a row vector `w` (no conjugation).
    pub fn vecmat(&self, w: &CVec) -> CVec {
        assert_eq!(w.len(), self.nrows);
        let mut out = CVec::zeros(self.ncols);
        for r in 0..self.nrows {
            let wr = w[r];
            if wr == ZERO {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += wr * self.values[k];
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut a = CMat::zeros((self.nrows, self.ncols));
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                a[[r, c]] = v;
            }
        }
        a
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.nrows {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest diagonal-plus-off-diagonal absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(
            2,
            3,
            vec![
                (1, 2, Complex64::new(1.0, 0.0)),
                (0, 0, Complex64::new(2.0, 1.0)),
                (1, 2, Complex64::new(0.5, 0.0)),
                (0, 1, Complex64::new(1.0, 0.0)),
                (0, 1, Complex64::new(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), Complex64::new(1.5, 0.0));
        assert_eq!(m.get(0, 1), ZERO);
        let x = CVec::from(vec![Complex64::new(1.0, 0.0); 3]);
        let y = m.matvec(&x);
        assert_eq!(y[0], Complex64::new(2.0, 1.0));
        let dense = m.to_dense();
        assert_eq!(CsrMatrix::from_dense(&dense), m);
        assert_eq!(m.bandwidths(), (0, 1));
    }
}

// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Banded LU factorization with partial pivoting.
//!
//! Column-stacked single-mode Liouvillians have lower bandwidth `D` and upper
//! bandwidth `D + 1`, so factorization costs `O(D⁴)` instead of `O(D⁶)`.

use num_complex::Complex64;

use super::{CVec, CsrMatrix, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
    pivots: Vec<usize>,
    min_pivot_ratio: f64,
}

impl BandedLu {
    /// Factorizes the principal submatrix of `a` obtained by deleting the rows
    /// and columns listed in `skip` (sorted ascending), optionally adding
    /// `shift` to the diagonal.
    pub fn factor(a: &CsrMatrix, skip: &[usize], shift: Complex64) -> Result<Self> {
        let full = a.nrows();
        assert_eq!(full, a.ncols(), "banded factorization needs a square matrix");
        let mut map = vec![usize::MAX; full];
        let mut n = 0;
        for (i, slot) in map.iter_mut().enumerate() {
            if skip.binary_search(&i).is_err() {
                *slot = n;
                n += 1;
            }
        }
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..full {
            if map[r] == usize::MAX {
                continue;
            }
            for (c, _) in a.row(r) {
                if map[c] == usize::MAX {
                    continue;
                }
                let (rr, cc) = (map[r], map[c]);
                if cc < rr {
                    kl = kl.max(rr - cc);
                } else {
                    ku = ku.max(cc - rr);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
            pivots: vec![0; n],
            min_pivot_ratio: f64::INFINITY,
        };
        let mut scale = 0.0_f64;
        for r in 0..full {
            if map[r] == usize::MAX {
                continue;
            }
            for (c, v) in a.row(r) {
                if map[c] == usize::MAX {
                    continue;
                }
                *lu.at_mut(map[r], map[c]) += v;
                scale = scale.max(v.norm());
            }
        }
        if shift != ZERO {
            for i in 0..n {
                *lu.at_mut(i, i) += shift;
            }
            scale = scale.max(shift.norm());
        }
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[self.idx(r, c)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        let k = self.idx(r, c);
        &mut self.data[k]
    }

    fn eliminate(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).norm();
            for r in k + 1..=last_row {
                let v = self.at(r, k).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.pivots[k] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Linalg(format!(
                    "banded LU: zero pivot in column {k}"
                )));
            }
            if scale > 0.0 {
                self.min_pivot_ratio = self.min_pivot_ratio.min(best / scale);
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.idx(k, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            for r in k + 1..=last_row {
                let factor = self.at(r, k) / pivot;
                if factor == ZERO {
                    continue;
                }
                *self.at_mut(r, k) = factor;
                let len = last_col - k;
                let base_k = self.idx(k, k + 1);
                let base_r = self.idx(r, k + 1);
                let (head, tail) = self.data.split_at_mut(base_r);
                let src = &head[base_k..base_k + len];
                for (t, u) in tail[..len].iter_mut().zip(src) {
                    *t -= factor * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot magnitude relative to the largest matrix entry; a cheap
    /// singularity indicator.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.clone();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == ZERO {
                continue;
            }
            for r in k + 1..=(k + self.kl).min(n - 1) {
                x[r] -= self.at(r, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                acc -= self.at(k, c) * x[c];
            }
            x[k] = acc / self.at(k, k);
        }
        x
    }
}

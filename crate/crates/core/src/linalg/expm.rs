// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential via scaling-and-squaring with a degree-13 Padé
//! approximant (Higham 2005).

use ndarray_linalg::{FactorizeInto, Solve};

use super::{c, norm1, CMat};
use crate::error::Result;

/// Padé(13) numerator coefficients; the denominator uses the same values with
/// alternating signs.
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371_920_351_148_152;

pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Ok(CMat::zeros((0, 0)));
    }
    let norm = norm1(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * c(2f64.powi(-squarings));

    let eye = CMat::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * c(B13[13]) + &a4 * c(B13[11]) + &a2 * c(B13[9]);
    let w2 = &a6 * c(B13[7]) + &a4 * c(B13[5]) + &a2 * c(B13[3]) + &eye * c(B13[1]);
    let u = scaled.dot(&(a6.dot(&w1) + w2));

    let z1 = &a6 * c(B13[12]) + &a4 * c(B13[10]) + &a2 * c(B13[8]);
    let z2 = &a6 * c(B13[6]) + &a4 * c(B13[4]) + &a2 * c(B13[2]) + &eye * c(B13[0]);
    let v = a6.dot(&z1) + z2;

    let numer = &v + &u;
    let denom = &v - &u;
    let lu = denom.factorize_into()?;
    let mut result = CMat::zeros((n, n));
    for j in 0..n {
        let col = lu.solve(&numer.column(j).to_owned())?;
        result.column_mut(j).assign(&col);
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, I, ZERO};
    use num_complex::Complex64;

    #[test]
    fn diagonal_matrix() {
        let mut a = CMat::zeros((3, 3));
        a[[0, 0]] = c(-1.0);
        a[[1, 1]] = Complex64::new(0.5, 2.0);
        a[[2, 2]] = c(7.0);
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let expect = a[[i, i]].exp();
            assert!((e[[i, i]] - expect).norm() < 1e-12 * expect.norm());
        }
        assert_eq!(e[[0, 1]], ZERO);
    }

    #[test]
    fn rotation_generator() {
        // exp(θ [[0, -1], [1, 0]]) is a rotation by θ.
        let theta = 40.0_f64;
        let mut a = CMat::zeros((2, 2));
        a[[0, 1]] = c(-theta);
        a[[1, 0]] = c(theta);
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - c(theta.cos())).norm() < 1e-11);
        assert!((e[[1, 0]] - c(theta.sin())).norm() < 1e-11);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let mut a = CMat::zeros((3, 3));
        a[[0, 1]] = I;
        a[[1, 2]] = c(2.0);
        let e = expm(&a).unwrap();
        let expect = CMat::eye(3) + &a + a.dot(&a) * c(0.5);
        assert!(max_abs(&(e - expect)) < 1e-14);
    }
}

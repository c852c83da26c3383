// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Dormand–Prince 5(4) integrator for autonomous complex linear
//! systems `y' = f(y)`.

use super::{c, CVec};
use crate::error::{Error, Result};

// Butcher tableau; the nodes c_i are not needed for autonomous systems.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub struct Dopri5<F> {
    rhs: F,
    rtol: f64,
    atol: f64,
    max_steps: usize,
    h: f64,
    pub stats: OdeStats,
}

impl<F> Dopri5<F>
where
    F: FnMut(&CVec) -> CVec,
{
    pub fn new(rhs: F, rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rhs,
            rtol,
            atol,
            max_steps: 5_000_000,
            h: 0.0,
            stats: OdeStats::default(),
        }
    }

    fn eval(&mut self, y: &CVec) -> CVec {
        self.stats.evaluations += 1;
        (self.rhs)(y)
    }

    fn error_norm(&self, y: &CVec, y_new: &CVec, err: &CVec) -> f64 {
        let n = y.len().max(1) as f64;
        let s: f64 = y
            .iter()
            .zip(y_new.iter())
            .zip(err.iter())
            .map(|((a, b), e)| {
                let sc = self.atol + self.rtol * a.norm().max(b.norm());
                (e.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    fn initial_step(&mut self, y: &CVec, f0: &CVec) -> f64 {
        let d0 = self.weighted_rms(y, y);
        let d1 = self.weighted_rms(f0, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = y + &(f0 * c(h0));
        let f1 = self.eval(&y1);
        let d2 = self.weighted_rms(&(&f1 - f0), y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    fn weighted_rms(&self, v: &CVec, y: &CVec) -> f64 {
        let n = v.len().max(1) as f64;
        let s: f64 = v
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a.norm() / (self.atol + self.rtol * b.norm())).powi(2))
            .sum();
        (s / n).sqrt()
    }

    /// Advances `y` from `t0` to `t1` (with `t1 ≥ t0`).
    pub fn advance(&mut self, y: &mut CVec, t0: f64, t1: f64) -> Result<()> {
        if t1 < t0 {
            return Err(Error::InvalidArgument(format!(
                "integration interval [{t0}, {t1}] runs backwards"
            )));
        }
        if t1 == t0 {
            return Ok(());
        }
        let mut t = t0;
        let mut k1 = self.eval(y);
        if self.h <= 0.0 {
            self.h = self.initial_step(y, &k1);
        }
        let mut steps = 0usize;
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Linalg(format!(
                    "ODE integrator exceeded {} steps at t = {t}",
                    self.max_steps
                )));
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            let hc = c(h);

            let y2 = &*y + &(&k1 * (hc * A21));
            let k2 = self.eval(&y2);
            let y3 = &*y + &((&k1 * c(A31) + &k2 * c(A32)) * hc);
            let k3 = self.eval(&y3);
            let y4 = &*y + &((&k1 * c(A41) + &k2 * c(A42) + &k3 * c(A43)) * hc);
            let k4 = self.eval(&y4);
            let y5 = &*y
                + &((&k1 * c(A51) + &k2 * c(A52) + &k3 * c(A53) + &k4 * c(A54)) * hc);
            let k5 = self.eval(&y5);
            let y6 = &*y
                + &((&k1 * c(A61) + &k2 * c(A62) + &k3 * c(A63) + &k4 * c(A64) + &k5 * c(A65))
                    * hc);
            let k6 = self.eval(&y6);
            let y_new = &*y
                + &((&k1 * c(B1) + &k3 * c(B3) + &k4 * c(B4) + &k5 * c(B5) + &k6 * c(B6)) * hc);
            let k7 = self.eval(&y_new);
            let err = (&k1 * c(E1)
                + &k3 * c(E3)
                + &k4 * c(E4)
                + &k5 * c(E5)
                + &k6 * c(E6)
                + &k7 * c(E7))
                * hc;
            let en = self.error_norm(y, &y_new, &err);
            if !en.is_finite() {
                return Err(Error::Linalg(format!("ODE integrator diverged at t = {t}")));
            }
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                self.stats.accepted += 1;
                t = if last { t1 } else { t + h };
                *y = y_new;
                k1 = k7;
                // Keep the natural step size when the last step was clipped.
                if !last || h >= self.h {
                    self.h = h * factor;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn damped_oscillation_is_accurate() {
        let lambda = Complex64::new(-0.5, 3.0);
        let mut ode = Dopri5::new(|y: &CVec| y.mapv(|v| v * lambda), 1e-10, 1e-14);
        let mut y = CVec::from(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]);
        ode.advance(&mut y, 0.0, 1.0).unwrap();
        ode.advance(&mut y, 1.0, 4.0).unwrap();
        let g = (lambda * 4.0).exp();
        assert!((y[0] - g).norm() < 1e-9 * g.norm());
        assert!((y[1] - g * Complex64::new(0.0, 2.0)).norm() < 2e-9 * g.norm());
        assert!(ode.stats.accepted > 0);
    }

    #[test]
    fn backwards_interval_is_rejected() {
        let mut ode = Dopri5::new(|y: &CVec| y.clone(), 1e-8, 1e-12);
        let mut y = CVec::zeros(1);
        assert!(ode.advance(&mut y, 1.0, 0.5).is_err());
    }
}

// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Box-constrained Nelder-Mead and Levenberg-Marquardt minimizers.
//!
//! Step sizes and convergence tests are measured in units of a per-coordinate
//! typical magnitude. Evaluation order is fixed, so results are deterministic.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, Solve};

/// Box constraints and per-coordinate scales.
#[derive(Debug, Clone)]
pub struct Problem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub typical: Vec<f64>,
    pub max_evals: usize,
    pub tolerance: f64,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each evaluation.
    pub trace: Vec<f64>,
    pub message: String,
}

/// Counts evaluations and records the best-so-far trace.
struct Tracker<'a, F> {
    f: &'a mut F,
    evals: usize,
    max_evals: usize,
    best: f64,
    best_x: Vec<f64>,
    trace: Vec<f64>,
}

impl<'a, F: FnMut(&[f64]) -> f64> Tracker<'a, F> {
    fn new(f: &'a mut F, max_evals: usize, x0: &[f64]) -> Self {
        Tracker {
            f,
            evals: 0,
            max_evals,
            best: f64::INFINITY,
            best_x: x0.to_vec(),
            trace: Vec::new(),
        }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
        v
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn finish(self, converged: bool, message: String) -> Outcome {
        Outcome {
            x: self.best_x,
            value: self.best,
            evaluations: self.evals,
            converged,
            trace: self.trace,
            message,
        }
    }
}

/// Nelder-Mead with projection onto the box. One restart from the best vertex
/// guards against a collapsed simplex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], p: &Problem) -> Outcome {
    let n = x0.len();
    let mut tr = Tracker::new(&mut f, p.max_evals, x0);
    if n == 0 {
        tr.eval(x0);
        return tr.finish(true, "no free parameters".into());
    }
    let mut start = x0.to_vec();
    let mut status = (false, String::new());
    for _ in 0..2 {
        status = nm_round(&mut tr, &start, p);
        if !status.0 {
            break;
        }
        start = tr.best_x.clone();
    }
    tr.finish(status.0, status.1)
}

fn nm_round<F: FnMut(&[f64]) -> f64>(tr: &mut Tracker<'_, F>, x0: &[f64], p: &Problem) -> (bool, String) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = 0.05 * p.typical[i];
        v[i] = if v[i] + step <= p.upper[i] { v[i] + step } else { v[i] - step };
        p.clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| tr.eval(v)).collect();
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();
        let (fl, fh) = (values[0], values[n]);
        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).enumerate().map(|(i, (a, b))| (a - b).abs() / p.typical[i]))
            .fold(0.0_f64, f64::max);
        if (fh - fl).abs() <= p.tolerance * (fl.abs() + p.tolerance) && spread <= p.tolerance.sqrt() {
            return (true, "simplex converged".into());
        }
        if tr.exhausted() {
            return (false, "evaluation budget exhausted".into());
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n][i] - centroid[i])).collect();
            p.clamp(&mut v);
            v
        };
        let xr = along(-1.0);
        let fr = tr.eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = tr.eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = tr.eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = tr.eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for k in 1..=n {
            let v: Vec<f64> = (0..n).map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i])).collect();
            values[k] = tr.eval(&v);
            simplex[k] = v;
        }
    }
}

/// Forward-difference Jacobian of the residual vector, stepping inward at the
/// upper bound.
pub fn jacobian<R: FnMut(&[f64]) -> Option<Vec<f64>>>(
    residuals: &mut R,
    x: &[f64],
    r0: &[f64],
    p: &Problem,
    rel_step: f64,
) -> Option<Array2<f64>> {
    let n = x.len();
    let m = r0.len();
    let mut j = Array2::zeros((m, n));
    for i in 0..n {
        let mut h = rel_step * x[i].abs().max(p.typical[i]);
        if x[i] + h > p.upper[i] {
            h = -h;
        }
        let mut xp = x.to_vec();
        xp[i] += h;
        let rp = residuals(&xp)?;
        for k in 0..m {
            j[[k, i]] = (rp[k] - r0[k]) / h;
        }
    }
    Some(j)
}

/// Levenberg-Marquardt on `Σ r_k²` with finite-difference Jacobians and
/// Marquardt diagonal scaling.
pub fn levenberg_marquardt<R: FnMut(&[f64]) -> Option<Vec<f64>>>(
    mut residuals: R,
    x0: &[f64],
    p: &Problem,
    rel_step: f64,
) -> Outcome {
    let n = x0.len();
    let mut evals = 0usize;
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut eval = |x: &[f64], evals: &mut usize, trace: &mut Vec<f64>, best: &mut f64| {
        *evals += 1;
        let r = residuals(x);
        let v = r.as_ref().map(|r| r.iter().map(|v| v * v).sum::<f64>()).unwrap_or(f64::INFINITY);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < *best {
            *best = v;
        }
        trace.push(*best);
        (r, v)
    };
    let mut x = x0.to_vec();
    let (r, mut chi2) = eval(&x, &mut evals, &mut trace, &mut best);
    let Some(mut r) = r else {
        return Outcome {
            x,
            value: f64::INFINITY,
            evaluations: evals,
            converged: false,
            trace,
            message: "model failed at the initial point".into(),
        };
    };
    if n == 0 {
        return Outcome {
            x,
            value: chi2,
            evaluations: evals,
            converged: true,
            trace,
            message: "no free parameters".into(),
        };
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut message = String::from("evaluation budget exhausted");
    'outer: while evals < p.max_evals {
        let j = {
            let mut counted = |xx: &[f64]| eval(xx, &mut evals, &mut trace, &mut best).0;
            jacobian(&mut counted, &x, &r, p, rel_step)
        };
        let Some(j) = j else {
            message = "model failed while differentiating".into();
            break;
        };
        let rv = Array1::from(r.clone());
        let a = j.t().dot(&j);
        let g = j.t().dot(&rv);
        // Scaled gradient test.
        let gnorm = (0..n).map(|i| (g[i] * p.typical[i]).abs()).fold(0.0, f64::max);
        if gnorm <= p.tolerance * chi2.max(1e-300) {
            converged = true;
            message = "gradient below tolerance".into();
            break;
        }
        loop {
            if evals >= p.max_evals {
                break 'outer;
            }
            let mut m = a.clone();
            for i in 0..n {
                let d = a[[i, i]].max(1e-12 / (p.typical[i] * p.typical[i]));
                m[[i, i]] += lambda * d;
            }
            let step = match m.solve(&(-&g)) {
                Ok(s) => s,
                Err(_) => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        message = "damped normal equations singular".into();
                        break 'outer;
                    }
                    continue;
                }
            };
            let mut xt: Vec<f64> = (0..n).map(|i| x[i] + step[i]).collect();
            p.clamp(&mut xt);
            let moved = (0..n).map(|i| (xt[i] - x[i]).abs() / p.typical[i]).fold(0.0, f64::max);
            let (rt, ct) = eval(&xt, &mut evals, &mut trace, &mut best);
            if ct < chi2 {
                let decrease = (chi2 - ct) / chi2.max(1e-300);
                x = xt;
                chi2 = ct;
                r = rt.expect("finite objective has residuals");
                lambda = (lambda / 3.0).max(1e-12);
                if decrease <= p.tolerance && moved <= p.tolerance.sqrt() {
                    converged = true;
                    message = "relative decrease below tolerance".into();
                    break 'outer;
                }
                continue 'outer;
            }
            if moved <= 1e-14 {
                converged = true;
                message = "step below machine resolution".into();
                break 'outer;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                converged = true;
                message = "no descent direction left".into();
                break 'outer;
            }
        }
    }
    Outcome {
        x,
        value: chi2,
        evaluations: evals,
        converged,
        trace,
        message,
    }
}

/// `σ_i = sqrt(s² [(JᵀJ)⁻¹]_ii)` with `s² = χ² / (m − n)`; `None` when the
/// curvature matrix is singular or there are no residual degrees of freedom.
pub fn curvature_uncertainties(j: &Array2<f64>, chi2: f64) -> Option<Vec<f64>> {
    let (m, n) = j.dim();
    if m <= n || n == 0 {
        return None;
    }
    let cov = j.t().dot(j).inv().ok()?;
    let s2 = chi2 / (m - n) as f64;
    let out: Vec<f64> = (0..n).map(|i| (s2 * cov[[i, i]]).sqrt()).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

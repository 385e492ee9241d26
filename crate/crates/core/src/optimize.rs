//! Small local optimizers shared by the fitting, tomography and VQE code.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::linalg::solve_real;
use crate::math::sqrt;

/// Result of a local minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Function evaluations, including those spent in line searches.
    pub evaluations: usize,
    /// Final stopping measure: gradient norm for gradient methods,
    /// simplex value spread for Nelder-Mead.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the Euclidean gradient norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop once a step lowers the value by less than this relative amount
    /// several times in a row.
    pub value_tolerance: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 10_000,
            gradient_tolerance: 1e-8,
            value_tolerance: 1e-15,
        }
    }
}

/// Limited-memory BFGS with a weak-Wolfe bisection line search.
///
/// `f(x, grad)` returns the value and writes the gradient.
pub fn lbfgs<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut stalls = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iter in 0..opts.max_iterations {
        let gnorm = norm(&g);
        if gnorm < opts.gradient_tolerance {
            return Minimum {
                x,
                value: fx,
                iterations: iter,
                evaluations,
                residual: gnorm,
                converged: true,
            };
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho_hist[i] * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0 / gnorm.max(1.0)
        };
        for dj in d.iter_mut() {
            *dj *= gamma;
        }
        for i in 0..k {
            let beta = rho_hist[i] * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (dj, gj) in d.iter_mut().zip(&g) {
                *dj = -gj / gnorm.max(1.0);
            }
            slope = dot(&g, &d);
        }

        // weak Wolfe line search by bisection
        let (c1, c2) = (1e-4, 0.9);
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut t = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            for ((xn, xi), di) in x_new.iter_mut().zip(&x).zip(&d) {
                *xn = xi + t * di;
            }
            f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            if !(f_new <= fx + c1 * t * slope) {
                hi = t;
            } else if dot(&g_new, &d) < c2 * slope {
                lo = t;
            } else {
                accepted = true;
                break;
            }
            t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        }
        if !accepted && !(f_new < fx) {
            return Minimum {
                x,
                value: fx,
                iterations: iter,
                evaluations,
                residual: gnorm,
                converged: false,
            };
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / sy);
        }
        if fx - f_new <= opts.value_tolerance * fx.abs().max(f64::MIN_POSITIVE) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;
        if stalls >= 5 {
            let gnorm = norm(&g);
            return Minimum {
                x,
                value: fx,
                iterations: iter + 1,
                evaluations,
                residual: gnorm,
                converged: gnorm < opts.gradient_tolerance,
            };
        }
    }
    let gnorm = norm(&g);
    Minimum {
        x,
        value: fx,
        iterations: opts.max_iterations,
        evaluations,
        residual: gnorm,
        converged: gnorm < opts.gradient_tolerance,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub value_tolerance: f64,
    /// ... and every vertex lies within this distance of the best one.
    pub step_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 4000,
            value_tolerance: 1e-12,
            step_tolerance: 1e-9,
        }
    }
}

/// Downhill simplex with the standard reflection/expansion/contraction
/// coefficients. `step` sets the initial simplex edge per coordinate.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = n + 1;
    let mut iterations = 0;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.value_tolerance && size <= opts.step_tolerance {
            return Minimum {
                x: simplex.swap_remove(0),
                value: values[0],
                iterations,
                evaluations,
                residual: spread,
                converged: true,
            };
        }
        if evaluations >= opts.max_evaluations {
            return Minimum {
                x: simplex.swap_remove(0),
                value: values[0],
                iterations,
                evaluations,
                residual: spread,
                converged: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let towards = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = towards(1.0);
        let fr = f(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = towards(2.0);
            let fe = f(&xe);
            evaluations += 1;
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
            let xc = towards(0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = towards(-0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            for (vj, bj) in simplex[i].iter_mut().zip(&best) {
                *vj = bj + 0.5 * (*vj - bj);
            }
            values[i] = f(&simplex[i]);
            evaluations += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which the fit is considered converged.
    pub step_tolerance: f64,
    /// Infinity norm of `Jᵀr` below which the fit is considered converged.
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-12,
            gradient_tolerance: 1e-14,
        }
    }
}

/// Levenberg-Marquardt for `min ½‖r(p)‖²` with Marquardt diagonal scaling.
///
/// `model(p, r, jac)` fills the `m` residuals and the row-major `m × n`
/// Jacobian. The returned value is the sum of squared residuals.
pub fn levenberg_marquardt<F>(mut model: F, p0: &[f64], m: usize, opts: &LmOptions) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64], &mut [f64]),
{
    let n = p0.len();
    if m < n {
        bail!(Domain, "{m} residuals cannot determine {n} parameters");
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    model(&p, &mut r, &mut jac);
    let mut evaluations = 1;
    let mut cost = dot(&r, &r);
    let mut lambda = 1e-3;
    let mut r_try = vec![0.0; m];
    let mut jac_try = vec![0.0; m * n];

    for iter in 0..opts.max_iterations {
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for row in 0..m {
            let jr = &jac[row * n..(row + 1) * n];
            for a in 0..n {
                jtr[a] += jr[a] * r[row];
                for b in 0..n {
                    jtj[a * n + b] += jr[a] * jr[b];
                }
            }
        }
        let gmax = jtr.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if gmax <= opts.gradient_tolerance * (1.0 + cost) {
            return Ok(Minimum {
                x: p,
                value: cost,
                iterations: iter,
                evaluations,
                residual: gmax,
                converged: true,
            });
        }

        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[k * n + k] += lambda * jtj[k * n + k].max(1e-12);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Ok(delta) = solve_real(&a, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let p_try: Vec<f64> = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
            model(&p_try, &mut r_try, &mut jac_try);
            evaluations += 1;
            let cost_try = dot(&r_try, &r_try);
            if cost_try.is_finite() && cost_try <= cost {
                let step = norm(&delta);
                let scale = norm(&p);
                core::mem::swap(&mut r, &mut r_try);
                core::mem::swap(&mut jac, &mut jac_try);
                p = p_try;
                let drop = cost - cost_try;
                cost = cost_try;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if step <= opts.step_tolerance * (scale + opts.step_tolerance)
                    || drop <= 1e-30
                {
                    return Ok(Minimum {
                        x: p,
                        value: cost,
                        iterations: iter + 1,
                        evaluations,
                        residual: gmax,
                        converged: true,
                    });
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no descent possible along any damped step: a stationary point
            return Ok(Minimum {
                x: p,
                value: cost,
                iterations: iter,
                evaluations,
                residual: gmax,
                converged: true,
            });
        }
    }
    Err(crate::Error::Convergence {
        iterations: opts.max_iterations,
        residual: cost,
    })
}

/// Gain schedule for simultaneous-perturbation stochastic approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpsaOptions {
    pub iterations: usize,
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaOptions {
    fn default() -> Self {
        Self {
            iterations: 200,
            a: 0.2,
            c: 0.15,
            big_a: 20.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

/// SPSA: two noisy evaluations per iteration along a random ±1 direction.
/// Returns the final iterate; `value` is one fresh evaluation there.
pub fn spsa<F, R>(mut f: F, x0: &[f64], opts: &SpsaOptions, rng: &mut R) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for k in 0..opts.iterations {
        let ak = opts.a / libm::pow(k as f64 + 1.0 + opts.big_a, opts.alpha);
        let ck = opts.c / libm::pow(k as f64 + 1.0, opts.gamma);
        for d in delta.iter_mut() {
            *d = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        for i in 0..n {
            plus[i] = x[i] + ck * delta[i];
            minus[i] = x[i] - ck * delta[i];
        }
        let diff = f(&plus) - f(&minus);
        for i in 0..n {
            x[i] -= ak * diff / (2.0 * ck * delta[i]);
        }
    }
    let value = f(&x);
    Minimum {
        x,
        value,
        iterations: opts.iterations,
        evaluations: 2 * opts.iterations + 1,
        residual: f64::NAN,
        converged: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let m = lbfgs(rosenbrock, &[-1.2, 1.0], &LbfgsOptions::default());
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-7 && (m.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn lbfgs_quadratic_in_many_dimensions() {
        let n = 50;
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..x.len() {
                let w = (i + 1) as f64;
                g[i] = 2.0 * w * (x[i] - 1.0);
                v += w * (x[i] - 1.0) * (x[i] - 1.0);
            }
            v
        };
        let m = lbfgs(f, &vec![0.0; n], &LbfgsOptions::default());
        assert!(m.converged);
        assert!(m.x.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5;
        let m = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5);
        assert!((m.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn lm_fits_exponential() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * libm::exp(-1.5 * t)).collect();
        let model = |p: &[f64], r: &mut [f64], j: &mut [f64]| {
            for (k, (&t, &y)) in ts.iter().zip(&ys).enumerate() {
                let e = libm::exp(-p[1] * t);
                r[k] = p[0] * e - y;
                j[2 * k] = e;
                j[2 * k + 1] = -p[0] * t * e;
            }
        };
        let m = levenberg_marquardt(model, &[1.0, 0.5], ts.len(), &LmOptions::default()).unwrap();
        assert!((m.x[0] - 2.0).abs() < 1e-9 && (m.x[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn lm_rejects_underdetermined() {
        let model = |_: &[f64], _: &mut [f64], _: &mut [f64]| {};
        assert!(levenberg_marquardt(model, &[0.0, 0.0], 1, &LmOptions::default()).is_err());
    }

    #[test]
    fn spsa_descends_noisy_bowl() {
        let mut rng = crate::seeded_rng(3);
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>();
        let m = spsa(f, &[2.0, -1.0, 0.0], &SpsaOptions { iterations: 2000, ..Default::default() }, &mut rng);
        assert!(m.value < 1e-3, "{m:?}");
    }
}

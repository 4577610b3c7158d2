//! Derivative-free Nelder–Mead simplex minimizer.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Relative perturbation of each coordinate for the initial simplex.
    pub initial_step: f64,
    /// Absolute perturbation used for coordinates that start at zero.
    pub zero_step: f64,
    /// Per-coordinate simplex spread, relative to max(1, |x|).
    pub x_tol: f64,
    /// Spread of vertex values, relative to max(1, |f|).
    pub f_tol: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            zero_step: 0.00025,
            x_tol: 1e-4,
            f_tol: 1e-4,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.calls += 1;
        let v = (self.f)(x);
        // NaN would poison the ordering; treat it as uphill.
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t·(b - a)
    a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
}

pub fn nelder_mead<F>(f: F, x0: &[f64], options: &NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(invalid("nelder_mead needs at least one parameter"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("start point is not finite"));
    }
    let mut f = Counted { f, calls: 0 };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut x = x0.to_vec();
        if i > 0 {
            let j = i - 1;
            x[j] = if x[j] != 0.0 {
                x[j] * (1.0 + options.initial_step)
            } else {
                options.zero_step
            };
        }
        let v = f.eval(&x);
        if !v.is_finite() {
            return Err(invalid(format!(
                "objective is not finite at initial vertex {x:?}"
            )));
        }
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if spread_ok(&simplex, options) {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let best_value = simplex[0].1;
        let second_worst = simplex[n - 1].1;

        let reflected = affine(&centroid, &worst.0, -options.reflection);
        let fr = f.eval(&reflected);

        if fr < best_value {
            let expanded = affine(&centroid, &reflected, options.expansion);
            let fe = f.eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (reflected, fr);
            continue;
        }
        if fr < worst.1 {
            let outside = affine(&centroid, &reflected, options.contraction);
            let fc = f.eval(&outside);
            if fc <= fr {
                simplex[n] = (outside, fc);
                continue;
            }
        } else {
            let inside = affine(&centroid, &worst.0, options.contraction);
            let fc = f.eval(&inside);
            if fc < worst.1 {
                simplex[n] = (inside, fc);
                continue;
            }
        }

        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = affine(&best, &vertex.0, options.shrink);
            let v = f.eval(&x);
            *vertex = (x, v);
        }
    }

    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        iterations,
        evaluations: f.calls,
        converged,
    })
}

fn spread_ok(simplex: &[(Vec<f64>, f64)], options: &NelderMeadOptions) -> bool {
    let (best, best_value) = &simplex[0];
    let f_scale = best_value.abs().max(1.0);
    let values_close = simplex[1..]
        .iter()
        .all(|(_, v)| (v - best_value).abs() <= options.f_tol * f_scale);
    let points_close = simplex[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(best)
            .all(|(a, b)| (a - b).abs() <= options.x_tol * b.abs().max(1.0))
    });
    values_close && points_close
}

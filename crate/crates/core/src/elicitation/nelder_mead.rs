//! Nelder–Mead simplex minimization.

use crate::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            initial_step: 0.25,
            tolerance: 1e-4,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t·(b − a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimizes `f` from `x0`. Converged when the largest distance of a vertex
/// from the best vertex is below `tolerance`, or when the spread of function
/// values across the simplex is below `tolerance²`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], cfg: &NelderMeadConfig) -> NelderMeadResult {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.initial_step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&best.0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - best.1;
        if diameter < cfg.tolerance || spread < cfg.tolerance * cfg.tolerance {
            converged = true;
            break;
        }
        if iterations == cfg.max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = affine(&centroid, &worst.0, -REFLECT);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = affine(&centroid, &worst.0, -EXPAND);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (towards, f_towards) = if fr < worst.1 {
                (affine(&centroid, &reflected, CONTRACT), fr)
            } else {
                (affine(&centroid, &worst.0, CONTRACT), worst.1)
            };
            let fc = eval(&towards);
            if fc < f_towards {
                simplex[n] = (towards, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = affine(&anchor, &v.0, SHRINK);
                    let fx = eval(&x);
                    *v = (x, fx);
                }
            }
        }
        let current_best = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(current_best);
    }
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        fx,
        trace,
        converged,
        iterations,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = NelderMeadConfig {
            initial_step: 0.5,
            tolerance: 1e-8,
            max_iter: 5000,
        };
        let r = minimize(f, &[-1.2, 1.0], &cfg);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap() {
        let r = minimize(
            |x: &[f64]| x[0] * x[0],
            &[10.0],
            &NelderMeadConfig {
                initial_step: 1.0,
                tolerance: 1e-12,
                max_iter: 3,
            },
        );
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}

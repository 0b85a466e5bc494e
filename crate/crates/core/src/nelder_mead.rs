//! Derivative-free simplex minimisation.
//!
//! Standard Nelder-Mead moves (reflection 1, expansion 2, contraction ½,
//! shrink ½) with the common initial simplex that perturbs each coordinate
//! by 5%. Objective values may be `+∞`, which marks infeasible points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    /// Simplex diameter tolerance (infinity norm).
    pub x_tol: f64,
    /// Spread of objective values across the simplex.
    pub f_tol: f64,
    /// Relative perturbation of each coordinate for the initial simplex.
    pub initial_step: f64,
    /// Perturbation used for coordinates equal to zero.
    pub zero_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            max_evaluations: 2000,
            x_tol: 1e-4,
            f_tol: 1e-4,
            initial_step: 0.05,
            zero_step: 0.00025,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Initial simplex around `x0`.
pub fn initial_simplex(x0: &[f64], opts: &NelderMeadOptions) -> Vec<Vec<f64>> {
    let mut s = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 {
            v[i] * (1.0 + opts.initial_step)
        } else {
            opts.zero_step
        };
        s.push(v);
    }
    s
}

/// Minimises `f` from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    minimize_from_simplex(f, initial_simplex(x0, opts), opts)
}

/// Minimises `f` from an explicit simplex of `n + 1` vertices.
pub fn minimize_from_simplex<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    simplex: Vec<Vec<f64>>,
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let n = simplex.len().saturating_sub(1);
    assert!(n >= 1 && simplex.iter().all(|v| v.len() == n), "simplex must have n + 1 vertices of length n");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<(Vec<f64>, f64)> = simplex
        .into_iter()
        .map(|v| {
            let fv = eval(&v, &mut evals);
            (v, fv)
        })
        .collect();
    if pts.iter().all(|p| p.1 == f64::INFINITY) {
        return Err(Error::AllPointsInfeasible);
    }
    let order = |pts: &mut Vec<(Vec<f64>, f64)>| pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut pts);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations && evals < opts.max_evaluations {
        let best = &pts[0];
        let x_spread = pts[1..]
            .iter()
            .flat_map(|p| p.0.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = pts[1..].iter().map(|p| (p.1 - best.1).abs()).fold(0.0, f64::max);
        if x_spread <= opts.x_tol && f_spread <= opts.f_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < pts[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < pts[n].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(pts[n].1) {
                pts[n] = (xc, fc);
            } else {
                let x0 = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    let v: Vec<f64> = x0.iter().zip(&p.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                    let fv = eval(&v, &mut evals);
                    *p = (v, fv);
                }
            }
        }
        order(&mut pts);
    }
    let (x, fx) = pts.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        fx,
        iterations,
        evaluations: evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let opts = NelderMeadOptions {
            x_tol: 1e-8,
            f_tol: 1e-10,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn quadratic_in_five_dimensions() {
        let c = [1.25, 0.27, -0.64, -0.34, 1.8];
        let f = |x: &[f64]| x.iter().zip(&c).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2)).sum();
        let opts = NelderMeadOptions {
            x_tol: 1e-7,
            f_tol: 1e-12,
            max_iterations: 5000,
            max_evaluations: 10000,
            ..Default::default()
        };
        let r = minimize(f, &[1.0, 0.3, -0.5, -0.2, 1.5], &opts).unwrap();
        for (a, b) in r.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn respects_infeasible_region() {
        // Feasible only for x > 0.5; optimum at the boundary side.
        let f = |x: &[f64]| if x[0] <= 0.5 { f64::INFINITY } else { (x[0] - 0.4).powi(2) + x[1] * x[1] };
        let r = minimize(f, &[2.0, 1.0], &NelderMeadOptions::default()).unwrap();
        assert!(r.fx.is_finite());
        assert!(r.x[0] > 0.5 && r.x[0] < 0.52);
    }

    #[test]
    fn all_infeasible_start_is_an_error() {
        let r = minimize(|_| f64::INFINITY, &[1.0, 2.0], &NelderMeadOptions::default());
        assert_eq!(r, Err(Error::AllPointsInfeasible));
        let nan = minimize(|_| f64::NAN, &[1.0], &NelderMeadOptions::default());
        assert_eq!(nan, Err(Error::AllPointsInfeasible));
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let opts = NelderMeadOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn zero_coordinates_get_absolute_step() {
        let s = initial_simplex(&[0.0, 2.0], &NelderMeadOptions::default());
        assert_eq!(s, vec![vec![0.0, 2.0], vec![0.00025, 2.0], vec![0.0, 2.1]]);
    }

    proptest! {
        #[test]
        fn never_worse_than_start(
            x0 in proptest::collection::vec(-3.0..3.0f64, 1..5),
            shift in -2.0..2.0f64,
        ) {
            let f = |x: &[f64]| x.iter().map(|v| (v - shift).powi(2) + (3.0 * v).sin()).sum::<f64>();
            let start = f(&x0);
            let r = minimize(f, &x0, &NelderMeadOptions { max_iterations: 50, ..Default::default() }).unwrap();
            prop_assert!(r.fx <= start);
            prop_assert_eq!(f(&r.x), r.fx);
        }
    }
}

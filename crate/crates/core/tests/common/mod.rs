#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, Normal};
use volfeedback::ModelParams;

/// Base parameters shared by most figures: `r = 0.02`, `β = β̃ = 0.5`,
/// `σ_x = 0.2`.
pub fn base(gamma: f64, alpha: f64, rho_dx: f64) -> ModelParams {
    ModelParams {
        r: 0.02,
        alpha,
        gamma,
        beta: 0.5,
        beta_q: 0.5,
        sigma_x: 0.2,
        rho_dx,
    }
}

/// `(γ, α, ρ_dx)` for the six curves of the price-dividend figure.
pub const FIG1_GRID: [(f64, f64, f64); 6] = [
    (1.0, 0.03, -0.5),
    (1.0, 0.03, 0.5),
    (2.0, 0.05, -0.5),
    (2.0, 0.05, 0.5),
    (3.0, 0.08, -0.5),
    (3.0, 0.08, 0.5),
];

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Second-order central-difference solve of the price-dividend ODE on
/// `n` uniform nodes of `[0, b]`, with `f'(0) = 0` and
/// `f'(b) = -2 f(b) / b`. The nonlinear drift is lagged one Picard
/// iteration behind the linear solve.
pub fn fd_solve(p: &ModelParams, b: f64, n: usize) -> Vec<f64> {
    let h = b / (n - 1) as f64;
    let s2 = 0.5 * p.sigma_x * p.sigma_x;
    let x: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut f = vec![1.0; n];
    let mut y = vec![0.0; n];
    for iter in 0..500 {
        let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let rhs = vec![-1.0; n];
        for i in 0..n {
            let a = y[i] * p.sigma_x * p.rho_dx - p.beta * x[i];
            let c = p.r + p.gamma * x[i] * x[i] - p.alpha;
            diag[i] = -2.0 * s2 / (h * h) - c;
            if i == 0 {
                sup[0] = 2.0 * s2 / (h * h);
            } else if i == n - 1 {
                // Ghost node f_n = f_{n-2} - 4h f_{n-1} / b.
                let g = -4.0 * h / b;
                sub[i] = 2.0 * s2 / (h * h);
                diag[i] += (a / (2.0 * h) + s2 / (h * h)) * g;
            } else {
                sub[i] = s2 / (h * h) - a / (2.0 * h);
                sup[i] = s2 / (h * h) + a / (2.0 * h);
            }
        }
        let next = thomas(&sub, &diag, &sup, &rhs);
        assert!(next.iter().all(|v| *v > 0.0), "oracle iterate lost positivity");
        let change = next.iter().zip(&f).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
        f = next;
        if p.rho_dx == 0.0 || (iter > 0 && change < 1e-11) {
            return f;
        }
        for i in 0..n {
            let fx = if i == 0 {
                0.0
            } else if i == n - 1 {
                -2.0 * f[i] / b
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            };
            let q = p.sigma_x * fx / f[i];
            let arg = (x[i] * x[i] - (1.0 - p.rho_dx * p.rho_dx) * q * q).max(0.0);
            y[i] = -p.rho_dx * q + arg.sqrt();
        }
    }
    panic!("oracle Picard iteration did not converge");
}

/// Richardson-extrapolated oracle values at the nodes `i·b/5000`,
/// combining 5 001- and 10 001-node solves.
pub fn fd_oracle(p: &ModelParams, b: f64) -> Vec<f64> {
    let coarse = fd_solve(p, b, 5001);
    let fine = fd_solve(p, b, 10001);
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| (4.0 * fine[2 * i] - c) / 3.0)
        .collect()
}

/// Black-Scholes call on a dividend-paying underlying with continuous
/// dividend yield `q`.
pub fn black_scholes_call(s: f64, k: f64, r: f64, q: f64, vol: f64, t: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let sd = vol * t.sqrt();
    let d1 = ((s / k).ln() + (r - q) * t) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    s * (-q * t).exp() * n.cdf(d1) - k * (-r * t).exp() * n.cdf(d2)
}

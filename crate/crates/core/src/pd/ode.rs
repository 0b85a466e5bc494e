//! First-order form of the price-dividend ratio equation.
//!
//! With `g = f'`, the second-order equation
//! `(y σ ρ - β x) f' + ½ σ² f'' - (r + γ x² - α) f = -1`
//! becomes `f' = g`, `g' = G(x, f, g)` where the dividend growth
//! volatility `y` is eliminated through
//! `y = -ρ q + sign(x) √(x² - (1 - ρ²) q²)`, `q = σ g / f`.

use crate::params::ModelParams;

#[derive(Debug, Clone, Copy)]
pub struct PdOde {
    pub excess_rate: f64,
    pub gamma: f64,
    pub beta: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl PdOde {
    pub fn new(p: &ModelParams, rho: f64) -> Self {
        Self {
            excess_rate: p.r - p.alpha,
            gamma: p.gamma,
            beta: p.beta,
            sigma: p.sigma_x,
            rho,
        }
    }

    /// Argument of the square root in the dividend volatility.
    #[inline]
    pub fn sqrt_arg(&self, x: f64, f: f64, g: f64) -> f64 {
        let q = self.sigma * g / f;
        x * x - (1.0 - self.rho * self.rho) * q * q
    }

    /// Discount-rate coefficient `r + γ x² - α`.
    #[inline]
    pub fn discount(&self, x: f64) -> f64 {
        self.excess_rate + self.gamma * x * x
    }

    /// `g' = G(x, f, g)`.
    #[inline]
    pub fn second_derivative(&self, x: f64, f: f64, g: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let rho = self.rho;
        let mut acc = -1.0 + self.discount(x) * f + self.beta * x * g;
        if rho != 0.0 {
            acc += rho * rho * s2 * g * g / f;
            if x != 0.0 {
                let a = self.sqrt_arg(x, f, g);
                if a > 0.0 {
                    acc -= x.signum() * self.sigma * rho * g * a.sqrt();
                }
            }
        }
        2.0 * acc / s2
    }

    /// `(G, ∂G/∂f, ∂G/∂g)`.
    #[inline]
    pub fn second_derivative_jac(&self, x: f64, f: f64, g: f64) -> (f64, f64, f64) {
        let s2 = self.sigma * self.sigma;
        let rho = self.rho;
        let c = self.discount(x);
        let mut val = -1.0 + c * f + self.beta * x * g;
        let mut df = c;
        let mut dg = self.beta * x;
        if rho != 0.0 {
            let r2s2 = rho * rho * s2;
            val += r2s2 * g * g / f;
            df -= r2s2 * g * g / (f * f);
            dg += 2.0 * r2s2 * g / f;
            if x != 0.0 {
                let a = self.sqrt_arg(x, f, g);
                if a > 0.0 {
                    let root = a.sqrt();
                    let k = x.signum() * self.sigma * rho;
                    let one_m = (1.0 - rho * rho) * s2;
                    let da_df = 2.0 * one_m * g * g / (f * f * f);
                    let da_dg = -2.0 * one_m * g / (f * f);
                    val -= k * g * root;
                    df -= k * g * da_df / (2.0 * root);
                    dg -= k * (root + g * da_dg / (2.0 * root));
                }
            }
        }
        let scale = 2.0 / s2;
        (scale * val, scale * df, scale * dg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_central_differences() {
        let p = ModelParams {
            r: 0.02,
            alpha: 0.05,
            gamma: 2.0,
            beta: 0.5,
            beta_q: 0.5,
            sigma_x: 0.2,
            rho_dx: -0.5,
        };
        for &rho in &[-0.5, 0.0, 0.7] {
            let ode = PdOde::new(&p, rho);
            for &(x, f, g) in &[(0.3, 25.0, -8.0), (1.2, 3.0, -2.5), (0.05, 30.0, -1.0)] {
                let (_, df, dg) = ode.second_derivative_jac(x, f, g);
                let h = 1e-6;
                let nf = (ode.second_derivative(x, f * (1.0 + h), g)
                    - ode.second_derivative(x, f * (1.0 - h), g))
                    / (2.0 * f * h);
                let ng = (ode.second_derivative(x, f, g + h) - ode.second_derivative(x, f, g - h))
                    / (2.0 * h);
                assert!((df - nf).abs() < 1e-5 * (1.0 + nf.abs()), "df {df} vs {nf}");
                assert!((dg - ng).abs() < 1e-5 * (1.0 + ng.abs()), "dg {dg} vs {ng}");
                let (a, b) = (ode.second_derivative_jac(x, f, g).0, ode.second_derivative(x, f, g));
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0));
            }
        }
    }
}

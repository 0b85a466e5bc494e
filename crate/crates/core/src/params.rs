//! Structural parameters, squared-volatility conversions and market state.
//!
//! All rates are per annum. Volatility `x` follows an Ornstein-Uhlenbeck
//! process with physical speed `beta` and risk-neutral speed `beta_q`; the
//! volatility risk premium `beta_q - beta` is always derived, never stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names accepted by [`ModelParams::set`], in canonical order.
pub const PARAM_KEYS: [&str; 7] = ["r", "alpha", "gamma", "beta", "beta_q", "sigma_x", "rho_dx"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Risk-free rate, continuously compounded.
    pub r: f64,
    /// Expected dividend growth rate.
    pub alpha: f64,
    /// Price of diffusion return risk.
    pub gamma: f64,
    /// Physical mean-reversion speed of volatility.
    pub beta: f64,
    /// Risk-neutral mean-reversion speed of volatility.
    pub beta_q: f64,
    /// Volatility of volatility.
    pub sigma_x: f64,
    /// Correlation between dividend shocks and volatility shocks.
    pub rho_dx: f64,
}

impl ModelParams {
    /// Volatility risk premium `beta_q - beta`.
    pub fn lambda_x(&self) -> f64 {
        self.beta_q - self.beta
    }

    /// Checks admissibility and returns the parameters unchanged.
    ///
    /// `sigma_x = 0` is accepted only together with `gamma = 0`: the
    /// price-dividend ratio is then constant and no boundary value problem
    /// has to be solved, which leaves a deterministic-volatility model.
    pub fn validate(self) -> Result<Self> {
        for (name, value) in self.entries() {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if self.beta <= 0.0 || self.beta_q <= 0.0 {
            return Err(Error::NonPositiveSpeed {
                beta: self.beta,
                beta_q: self.beta_q,
            });
        }
        if self.sigma_x < 0.0 || (self.sigma_x == 0.0 && self.gamma != 0.0) {
            return Err(Error::NonPositiveVolOfVol(self.sigma_x));
        }
        if self.rho_dx.abs() > 1.0 {
            return Err(Error::CorrelationOutOfRange(self.rho_dx));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
                reason: "must be non-negative",
            });
        }
        if self.gamma == 0.0 && self.r <= self.alpha {
            return Err(Error::GammaZeroRequiresRGreaterAlpha {
                r: self.r,
                alpha: self.alpha,
            });
        }
        Ok(self)
    }

    pub fn to_squared_form(&self) -> SquaredVolParams {
        SquaredVolParams {
            kappa: 2.0 * self.beta,
            theta: self.sigma_x * self.sigma_x / (2.0 * self.beta),
            sigma_h: 2.0 * self.sigma_x,
            lambda_h: 2.0 * (self.beta_q - self.beta),
        }
    }

    /// Inverse of [`to_squared_form`](Self::to_squared_form); the
    /// parameters that have no squared-form counterpart (`r`, `alpha`,
    /// `gamma`, `rho_dx`) are taken from `self`.
    pub fn with_squared_form(&self, sq: &SquaredVolParams) -> ModelParams {
        let beta = sq.kappa / 2.0;
        ModelParams {
            beta,
            beta_q: beta + sq.lambda_h / 2.0,
            sigma_x: sq.sigma_h / 2.0,
            ..*self
        }
    }

    /// Sets one parameter by its config-file key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "r" => &mut self.r,
            "alpha" => &mut self.alpha,
            "gamma" => &mut self.gamma,
            "beta" => &mut self.beta,
            "beta_q" => &mut self.beta_q,
            "sigma_x" => &mut self.sigma_x,
            "rho_dx" => &mut self.rho_dx,
            other => return Err(Error::InvalidConfig(format!("unknown model key `{other}`"))),
        };
        *slot = value;
        Ok(())
    }

    fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("r", self.r),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("beta_q", self.beta_q),
            ("sigma_x", self.sigma_x),
            ("rho_dx", self.rho_dx),
        ]
    }
}

/// Squared-volatility (Heston/CIR) form of the volatility dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquaredVolParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma_h: f64,
    pub lambda_h: f64,
}

/// Snapshot of price, dividend rate and return volatility at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub t: f64,
    pub price: f64,
    pub dividend: f64,
    /// Instantaneous return volatility; may be negative.
    pub x: f64,
}

impl MarketState {
    pub fn new(t: f64, price: f64, dividend: f64, x: f64) -> Result<Self> {
        if !(price > 0.0) || !(dividend > 0.0) {
            return Err(Error::InvalidParameter {
                name: "price/dividend",
                value: price.min(dividend),
                reason: "must be strictly positive",
            });
        }
        Ok(Self {
            t,
            price,
            dividend,
            x,
        })
    }
}

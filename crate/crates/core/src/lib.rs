//! Stock, dividend and volatility dynamics under the volatility feedback
//! effect.
//!
//! The expected return depends on squared return volatility, so the
//! price-dividend ratio `f(x)` is a function of volatility alone and solves
//! a nonlinear boundary value problem. This crate
//!
//! * solves that problem ([`pd`]),
//! * simulates joint price/dividend/volatility paths ([`simulate`]),
//! * prices European calls by Monte Carlo under the risk-neutral measure
//!   ([`pricer`]),
//! * filters option quotes and calibrates the structural parameters to
//!   them ([`quotes`], [`calibrate`]).
//!
//! The `volfeedback` binary wraps these as batch subcommands; see
//! [`cli`].

pub mod banded;
pub mod calibrate;
pub mod cli;
pub mod config;
pub mod error;
pub mod hermite;
pub mod nelder_mead;
pub mod params;
pub mod pd;
pub mod pricer;
pub mod quotes;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use params::{MarketState, ModelParams, SquaredVolParams};
pub use pd::{pd_ratio_constant, solve_pd_ratio, PdGridConfig, PdSolution};

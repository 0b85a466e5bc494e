//! Price-dividend ratio: boundary value problem solver and derived maps
//! (dividend growth volatility, return/volatility correlation, dividend
//! yield, excess-volatility predicate).

mod ode;
mod solution;
mod solver;

pub use ode::PdOde;
pub use solution::{LocalCoefficients, PdSolution};
pub(crate) use solution::fmt_num;
pub use solver::{pd_ratio_constant, solve_pd_ratio, BoundaryCondition, PdGridConfig};

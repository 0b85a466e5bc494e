//! Tabulated price-dividend ratio and the quantities derived from it.

use std::io::Write;

use super::ode::PdOde;
use super::solver::{interpolants, BoundaryCondition, PdGridConfig};
use crate::error::{Error, Result};
use crate::hermite::HermiteTable;
use crate::params::ModelParams;

/// Price-dividend ratio `f` on `[0, b]`, extended to the whole real line
/// by evenness (`f(-x) = f(x)`, `f_x(-x) = -f_x(x)`) and beyond `b` by the
/// asymptotic tail `f(x) = f(b) (b / x)²`, which is `1 / (γ x²)` when the
/// boundary value is imposed.
#[derive(Debug, Clone)]
pub struct PdSolution {
    params: ModelParams,
    b: f64,
    tol: f64,
    residual_norm: f64,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Constant { value: f64, mesh: Vec<f64> },
    Tabulated {
        f: HermiteTable,
        fx: HermiteTable,
        /// `f(b) b²`.
        tail: f64,
    },
}

/// Local coefficients of the price dynamics at one volatility level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub f: f64,
    pub fx: f64,
    /// Dividend yield `1 / f`.
    pub yield_: f64,
    /// Volatility loading of returns, `σ_x f_x / f`.
    pub vol_loading: f64,
    /// Dividend growth volatility `y(x)`, square root clamped at zero.
    pub y: f64,
}

impl PdSolution {
    pub(crate) fn from_collocation(
        params: ModelParams,
        cfg: &PdGridConfig,
        ode: &PdOde,
        mesh: Vec<f64>,
        mut state: Vec<f64>,
        residual_norm: f64,
    ) -> Self {
        let n = mesh.len();
        state[1] = 0.0;
        match cfg.boundary {
            BoundaryCondition::AsymptoticValue => {
                state[2 * n - 2] = 1.0 / (params.gamma * cfg.b * cfg.b)
            }
            BoundaryCondition::AsymptoticSlope => {
                state[2 * n - 1] = -2.0 * state[2 * n - 2] / cfg.b
            }
        }
        let tail = state[2 * n - 2] * cfg.b * cfg.b;
        let (f, fx) = interpolants(ode, &mesh, &state);
        Self {
            params,
            b: cfg.b,
            tol: cfg.tol,
            residual_norm,
            repr: Repr::Tabulated { f, fx, tail },
        }
    }

    pub(crate) fn constant(params: ModelParams, cfg: &PdGridConfig) -> Self {
        let n = cfg.initial_mesh_size;
        let mesh = (0..n).map(|i| cfg.b * i as f64 / (n - 1) as f64).collect();
        Self {
            params,
            b: cfg.b,
            tol: cfg.tol,
            residual_norm: 0.0,
            repr: Repr::Constant {
                value: 1.0 / (params.r - params.alpha),
                mesh,
            },
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.repr, Repr::Constant { .. })
    }

    pub fn mesh(&self) -> &[f64] {
        match &self.repr {
            Repr::Constant { mesh, .. } => mesh,
            Repr::Tabulated { f, .. } => f.nodes(),
        }
    }

    /// `f` at the mesh nodes.
    pub fn f_vals(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Constant { value, mesh } => vec![*value; mesh.len()],
            Repr::Tabulated { f, .. } => f.values().to_vec(),
        }
    }

    /// `f_x` at the mesh nodes.
    pub fn fx_vals(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Constant { mesh, .. } => vec![0.0; mesh.len()],
            Repr::Tabulated { fx, .. } => fx.values().to_vec(),
        }
    }

    /// `(f(x), f_x(x))`.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match &self.repr {
            Repr::Constant { value, .. } => (*value, 0.0),
            Repr::Tabulated { f, fx, tail } => {
                let a = x.abs();
                let (fv, dv) = if a <= self.b {
                    let k = f.interval(a);
                    (f.eval_in(k, a).0, fx.eval_in(k, a).0)
                } else {
                    (tail / (a * a), -2.0 * tail / (a * a * a))
                };
                (fv, if x < 0.0 { -dv } else { dv })
            }
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn fx(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn dividend_yield(&self, x: f64) -> f64 {
        1.0 / self.f(x)
    }

    fn sqrt_arg(&self, x: f64, q: f64) -> f64 {
        let rho = self.params.rho_dx;
        x * x - (1.0 - rho * rho) * q * q
    }

    /// Coefficients used by the path simulators; never fails.
    #[inline]
    pub fn coefficients(&self, x: f64) -> LocalCoefficients {
        let (f, fx) = self.eval(x);
        let q = self.params.sigma_x * fx / f;
        let rho = self.params.rho_dx;
        let arg = self.sqrt_arg(x, q).max(0.0);
        let y = -rho * q + sign(x) * arg.sqrt();
        LocalCoefficients {
            f,
            fx,
            yield_: 1.0 / f,
            vol_loading: q,
            y,
        }
    }

    /// Dividend growth volatility `y(x)`, with the root chosen so that
    /// `y` has the sign of `x`.
    pub fn dividend_vol(&self, x: f64) -> Result<f64> {
        let (f, fx) = self.eval(x);
        let q = self.params.sigma_x * fx / f;
        let arg = self.sqrt_arg(x, q);
        if arg < -self.tol {
            return Err(Error::SqrtDomainViolation { x, arg });
        }
        Ok(-self.params.rho_dx * q + sign(x) * arg.max(0.0).sqrt())
    }

    /// Instantaneous correlation between returns and return volatility.
    pub fn return_vol_correlation(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::UndefinedAtZero);
        }
        let y = self.dividend_vol(x)?;
        let rho = self.params.rho_dx;
        let q = self.params.sigma_x * self.fx(x) / self.f(x);
        let den = (q * q + y * y + 2.0 * rho * q * y).max(0.0).sqrt();
        if den == 0.0 {
            return Err(Error::UndefinedAtZero);
        }
        Ok((sign(x) * (q + y * rho) / den).clamp(-1.0, 1.0))
    }

    /// Whether return variance exceeds dividend growth variance at `x`,
    /// evaluated through the correlation threshold
    /// `ρ_dx < -σ_x f_x / (2 x f)`. Where `f_x = 0` both variances
    /// coincide and the answer is `false`.
    pub fn excess_volatility_holds(&self, x: f64) -> bool {
        if x == 0.0 {
            return false;
        }
        let (f, fx) = self.eval(x);
        let q = self.params.sigma_x * fx / f;
        // f_x/x is even, so the threshold is the same for ±x.
        let q_over_x = q / x;
        q_over_x < 0.0 && self.params.rho_dx < -q_over_x / 2.0
    }

    /// Writes `x, f, f_x, y, rho_rx, div_yield` at every mesh node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f", "f_x", "y", "rho_rx", "div_yield"])?;
        for &x in self.mesh() {
            let (f, fx) = self.eval(x);
            let y = self.dividend_vol(x).unwrap_or(f64::NAN);
            let rho = self.return_vol_correlation(x).unwrap_or(f64::NAN);
            w.write_record([x, f, fx, y, rho, 1.0 / f].map(fmt_num))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.12e}")
    }
}

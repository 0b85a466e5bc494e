//! Physical-measure simulation of joint volatility, price and dividend
//! paths, and the path statistics that expose volatility feedback.
//!
//! Volatility moves by the exact Ornstein-Uhlenbeck transition; the price
//! takes log-Euler steps driven by the dividend and volatility shocks. The
//! dividend is derived from the price as `D = P / f(x)` unless direct
//! simulation is requested, in which case both series are kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{MarketState, ModelParams};
use crate::pd::PdSolution;
use crate::rng::{CorrelatedShocks, StreamFactory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Step size in years.
    pub dt: f64,
    /// Simulated time span in years.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub x0: f64,
    pub p0: f64,
    /// Also simulate the dividend directly from its own SDE.
    pub direct_dividend: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / (24.0 * 252.0),
            horizon: 1.0,
            n_paths: 1,
            seed: 0,
            x0: 0.2,
            p0: 100.0,
            direct_dividend: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("sim: {m}")));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.horizon >= self.dt) {
            return bad("horizon must be at least dt");
        }
        if self.n_paths < 1 {
            return bad("n_paths must be at least 1");
        }
        if !(self.p0 > 0.0) {
            return bad("p0 must be positive");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }
}

/// Exact OU transition with mean-reversion speed `speed`.
#[inline]
pub fn ou_transition(x: f64, dt: f64, eps_x: f64, speed: f64, sigma_x: f64) -> f64 {
    let decay = (-speed * dt).exp();
    let sd = sigma_x * ((1.0 - (-2.0 * speed * dt).exp()) / (2.0 * speed)).sqrt();
    x * decay + sd * eps_x
}

/// Exact physical-measure volatility step.
pub fn ou_step_exact(x: f64, dt: f64, eps_x: f64, params: &ModelParams) -> f64 {
    ou_transition(x, dt, eps_x, params.beta, params.sigma_x)
}

/// Precomputed OU coefficients for a fixed step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OuStep {
    decay: f64,
    sd: f64,
}

impl OuStep {
    pub(crate) fn new(speed: f64, sigma_x: f64, dt: f64) -> Self {
        Self {
            decay: (-speed * dt).exp(),
            sd: sigma_x * ((1.0 - (-2.0 * speed * dt).exp()) / (2.0 * speed)).sqrt(),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, x: f64, eps_x: f64) -> f64 {
        x * self.decay + self.sd * eps_x
    }
}

/// Log-increment of the price over one step, given the drift rate
/// (excluding the Itô correction) that applies under the chosen measure.
#[inline]
pub(crate) fn log_price_increment(
    drift: f64,
    x: f64,
    y: f64,
    vol_loading: f64,
    shocks: CorrelatedShocks,
    dt: f64,
    sqrt_dt: f64,
) -> f64 {
    (drift - 0.5 * x * x) * dt + (y * shocks.eps_d + vol_loading * shocks.eps_x) * sqrt_dt
}

/// One physical-measure step of `(P, x)`; the dividend is re-derived as
/// `P / f(x)` at the new volatility.
pub fn price_step(
    state: &MarketState,
    sol: &PdSolution,
    shocks: CorrelatedShocks,
    dt: f64,
    params: &ModelParams,
) -> MarketState {
    let c = sol.coefficients(state.x);
    let drift = params.r + params.gamma * state.x * state.x - c.yield_;
    let dlp = log_price_increment(drift, state.x, c.y, c.vol_loading, shocks, dt, dt.sqrt());
    let price = state.price * dlp.exp();
    let x = ou_step_exact(state.x, dt, shocks.eps_x, params);
    MarketState {
        t: state.t + dt,
        price,
        dividend: price / sol.f(x),
        x,
    }
}

/// One step of the directly simulated dividend stream.
pub fn dividend_step(
    dividend: f64,
    x: f64,
    sol: &PdSolution,
    eps_d: f64,
    dt: f64,
    params: &ModelParams,
) -> f64 {
    let y = sol.coefficients(x).y;
    dividend * ((params.alpha - 0.5 * y * y) * dt + y * dt.sqrt() * eps_d).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPath {
    pub x: Vec<f64>,
    pub price: Vec<f64>,
    pub dividend: Vec<f64>,
    /// Directly simulated dividends, when requested.
    pub dividend_direct: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub paths: Vec<SimPath>,
}

/// Simulates a single path from explicit shocks.
pub fn simulate_path_with_shocks(
    sol: &PdSolution,
    params: &ModelParams,
    x0: f64,
    p0: f64,
    dt: f64,
    shocks: &[CorrelatedShocks],
    direct_dividend: bool,
) -> SimPath {
    let n = shocks.len();
    let mut x = Vec::with_capacity(n + 1);
    let mut price = Vec::with_capacity(n + 1);
    let mut dividend = Vec::with_capacity(n + 1);
    let mut direct = direct_dividend.then(|| Vec::with_capacity(n + 1));

    let mut state = MarketState {
        t: 0.0,
        price: p0,
        dividend: p0 / sol.f(x0),
        x: x0,
    };
    x.push(state.x);
    price.push(state.price);
    dividend.push(state.dividend);
    if let Some(d) = direct.as_mut() {
        d.push(state.dividend);
    }
    for &s in shocks {
        if let Some(d) = direct.as_mut() {
            let last = *d.last().unwrap();
            d.push(dividend_step(last, state.x, sol, s.eps_d, dt, params));
        }
        state = price_step(&state, sol, s, dt, params);
        x.push(state.x);
        price.push(state.price);
        dividend.push(state.dividend);
    }
    SimPath {
        x,
        price,
        dividend,
        dividend_direct: direct,
    }
}

/// Simulates `cfg.n_paths` independent paths; path `i` uses substream `i`.
pub fn simulate_paths(sol: &PdSolution, cfg: &SimConfig) -> Result<PathSet> {
    cfg.validate()?;
    let params = *sol.params();
    let n = cfg.n_steps();
    let streams = StreamFactory::new(cfg.seed, "simulate");
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i as u64);
            let shocks: Vec<CorrelatedShocks> = (0..n)
                .map(|_| CorrelatedShocks::draw(&mut rng, params.rho_dx))
                .collect();
            simulate_path_with_shocks(sol, &params, cfg.x0, cfg.p0, cfg.dt, &shocks, cfg.direct_dividend)
        })
        .collect();
    let times = (0..=n).map(|k| k as f64 * cfg.dt).collect();
    Ok(PathSet { times, paths })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub corr_dx2_dlnp: f64,
    pub corr_dx2_dlnd: f64,
    pub mean_vol_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStatistics {
    pub n_paths: usize,
    pub n_steps: usize,
    /// Sample `Corr(Δ(x²), Δln P)` pooled over all increments.
    pub corr_dx2_dlnp: f64,
    /// Sample `Corr(Δ(x²), Δln D)` pooled over all increments.
    pub corr_dx2_dlnd: f64,
    /// `corr_dx2_dlnp - corr_dx2_dlnd`, a measure of volatility feedback.
    pub feedback_gap: f64,
    /// Realised `sd(Δln P) / sd(Δln D)`.
    pub realized_vol_ratio: f64,
    /// Mean of the model ratio `x / y(x)` along the paths.
    pub mean_vol_ratio: f64,
    /// Mean of the model correlation `ρ_rx(x)` along the paths.
    pub mean_rho_rx: f64,
    /// Lag-one autocorrelation of squared log returns.
    pub sq_return_autocorr_lag1: f64,
    pub per_path: Vec<PathSummary>,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sa: f64,
    sb: f64,
    saa: f64,
    sbb: f64,
    sab: f64,
}

impl Moments {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.sa += a;
        self.sb += b;
        self.saa += a * a;
        self.sbb += b * b;
        self.sab += a * b;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sa += o.sa;
        self.sb += o.sb;
        self.saa += o.saa;
        self.sbb += o.sbb;
        self.sab += o.sab;
    }

    fn var_a(&self) -> f64 {
        self.saa / self.n - (self.sa / self.n).powi(2)
    }

    fn var_b(&self) -> f64 {
        self.sbb / self.n - (self.sb / self.n).powi(2)
    }

    fn corr(&self) -> Option<f64> {
        let cov = self.sab / self.n - self.sa / self.n * self.sb / self.n;
        let (va, vb) = (self.var_a(), self.var_b());
        if self.n < 2.0 || !(va > 0.0) || !(vb > 0.0) {
            return None;
        }
        Some(cov / (va * vb).sqrt())
    }
}

/// Summary statistics of a simulated path set.
pub fn path_statistics(paths: &PathSet, sol: &PdSolution) -> Result<PathStatistics> {
    let n_steps = paths.times.len().saturating_sub(1);
    if n_steps < 2 || paths.paths.is_empty() {
        return Err(Error::InsufficientData(format!(
            "need at least 2 steps, got {n_steps}"
        )));
    }
    let degenerate = || Error::InsufficientData("increments have zero variance".into());

    let mut pooled_p = Moments::default();
    let mut pooled_d = Moments::default();
    let mut pooled_pd = Moments::default();
    let mut sq_lag = Moments::default();
    let (mut ratio_sum, mut ratio_n) = (0.0, 0.0);
    let (mut rho_sum, mut rho_n) = (0.0, 0.0);
    let mut per_path = Vec::with_capacity(paths.paths.len());

    for path in &paths.paths {
        let mut mp = Moments::default();
        let mut md = Moments::default();
        let mut prev_sq: Option<f64> = None;
        let (mut pr_sum, mut pr_n) = (0.0, 0.0);
        for k in 0..n_steps {
            let dx2 = path.x[k + 1].powi(2) - path.x[k].powi(2);
            let dlp = (path.price[k + 1] / path.price[k]).ln();
            let dld = (path.dividend[k + 1] / path.dividend[k]).ln();
            mp.push(dx2, dlp);
            md.push(dx2, dld);
            pooled_pd.push(dlp, dld);
            let sq = dlp * dlp;
            if let Some(p) = prev_sq {
                sq_lag.push(p, sq);
            }
            prev_sq = Some(sq);

            let x = path.x[k];
            if x != 0.0 {
                if let Ok(y) = sol.dividend_vol(x) {
                    if y != 0.0 {
                        pr_sum += x / y;
                        pr_n += 1.0;
                    }
                }
                if let Ok(rho) = sol.return_vol_correlation(x) {
                    rho_sum += rho;
                    rho_n += 1.0;
                }
            }
        }
        pooled_p.merge(&mp);
        pooled_d.merge(&md);
        ratio_sum += pr_sum;
        ratio_n += pr_n;
        per_path.push(PathSummary {
            corr_dx2_dlnp: mp.corr().unwrap_or(f64::NAN),
            corr_dx2_dlnd: md.corr().unwrap_or(f64::NAN),
            mean_vol_ratio: if pr_n > 0.0 { pr_sum / pr_n } else { f64::NAN },
        });
    }

    let corr_p = pooled_p.corr().ok_or_else(degenerate)?;
    let corr_d = pooled_d.corr().ok_or_else(degenerate)?;
    let (vp, vd) = (pooled_pd.var_a(), pooled_pd.var_b());
    if !(vd > 0.0) || ratio_n == 0.0 {
        return Err(degenerate());
    }
    Ok(PathStatistics {
        n_paths: paths.paths.len(),
        n_steps,
        corr_dx2_dlnp: corr_p,
        corr_dx2_dlnd: corr_d,
        feedback_gap: corr_p - corr_d,
        realized_vol_ratio: (vp / vd).sqrt(),
        mean_vol_ratio: ratio_sum / ratio_n,
        mean_rho_rx: if rho_n > 0.0 { rho_sum / rho_n } else { f64::NAN },
        sq_return_autocorr_lag1: sq_lag.corr().unwrap_or(f64::NAN),
        per_path,
    })
}

/// Writes one path as CSV: `t, x, x2, P, D, f, y, rho_rx`.
pub fn write_path_csv<W: std::io::Write>(
    out: W,
    times: &[f64],
    path: &SimPath,
    sol: &PdSolution,
) -> Result<()> {
    use crate::pd::fmt_num;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "x2", "P", "D", "f", "y", "rho_rx"])?;
    for (k, &t) in times.iter().enumerate() {
        let x = path.x[k];
        let y = sol.dividend_vol(x).unwrap_or(f64::NAN);
        let rho = sol.return_vol_correlation(x).unwrap_or(f64::NAN);
        w.write_record(
            [t, x, x * x, path.price[k], path.dividend[k], sol.f(x), y, rho].map(fmt_num),
        )?;
    }
    w.flush()?;
    Ok(())
}

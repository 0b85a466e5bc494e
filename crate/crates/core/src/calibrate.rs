//! Calibration of the structural parameters to option quotes.
//!
//! The loss is the root mean squared difference between quoted mids and
//! model prices. Model prices on one quote date share a single set of
//! simulated risk-neutral growth factors drawn from a date-keyed substream,
//! so the loss surface is deterministic across evaluations.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveTime};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::params::ModelParams;
use crate::pd::{solve_pd_ratio, PdGridConfig, PdSolution};
use crate::pricer::{simulate_growth, McConfig};
use crate::quotes::{add_trading_days, OptionQuote, TRADING_DAYS};
use crate::rng::StreamFactory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Free `(β̃, σ_x, ρ_dx, λ_x, γ)`.
    Full,
    /// `γ = 0`; free `(β̃, σ_x, ρ_dx)`. `λ_x` is not identified.
    GammaZero,
}

impl CalibrationMode {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            Self::Full => &["beta_q", "sigma_x", "rho_dx", "lambda_x", "gamma"],
            Self::GammaZero => &["beta_q", "sigma_x", "rho_dx"],
        }
    }

    /// Free-parameter vector of `p`.
    pub fn pack(self, p: &ModelParams) -> Vec<f64> {
        match self {
            Self::Full => vec![p.beta_q, p.sigma_x, p.rho_dx, p.lambda_x(), p.gamma],
            Self::GammaZero => vec![p.beta_q, p.sigma_x, p.rho_dx],
        }
    }

    /// Model parameters from a free vector; `alpha` is the average dividend
    /// growth rate and `r` a placeholder overwritten per quote.
    pub fn unpack(self, v: &[f64], alpha: f64, r: f64) -> ModelParams {
        match self {
            Self::Full => ModelParams {
                r,
                alpha,
                gamma: v[4],
                beta: v[0] - v[3],
                beta_q: v[0],
                sigma_x: v[1],
                rho_dx: v[2],
            },
            Self::GammaZero => ModelParams {
                r,
                alpha,
                gamma: 0.0,
                beta: v[0],
                beta_q: v[0],
                sigma_x: v[1],
                rho_dx: v[2],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    /// Average dividend growth rate `ᾱ`, an input.
    pub alpha_bar: f64,
    pub mc: McConfig,
    pub grid: PdGridConfig,
    pub optimizer: NelderMeadOptions,
    /// Restart once from the incumbent with a smaller simplex.
    pub restart: bool,
    pub restart_step: f64,
    pub standard_errors: bool,
    /// Fail with `MaxIterations` instead of returning an unconverged fit.
    pub strict: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            mode: CalibrationMode::Full,
            alpha_bar: 0.0613,
            mc: McConfig::default(),
            grid: PdGridConfig::default(),
            optimizer: NelderMeadOptions::default(),
            restart: true,
            restart_step: 0.01,
            standard_errors: true,
            strict: false,
        }
    }
}

/// Quotes grouped by date, rate and volatility proxy.
#[derive(Debug, Clone)]
struct QuoteGroup {
    date: NaiveDate,
    rate: f64,
    x0: f64,
    steps: Vec<usize>,
    /// `(quote index, horizon index)`.
    members: Vec<(usize, usize)>,
}

/// Loss evaluator with quotes pre-grouped for common random numbers.
#[derive(Debug, Clone)]
pub struct PanelPricer {
    quotes: Vec<OptionQuote>,
    groups: Vec<QuoteGroup>,
    mc: McConfig,
    grid: PdGridConfig,
}

impl PanelPricer {
    pub fn new(quotes: &[OptionQuote], mc: &McConfig, grid: &PdGridConfig) -> Result<Self> {
        mc.validate()?;
        grid.validate()?;
        let mut by_key: BTreeMap<(NaiveDate, u64, u64), Vec<usize>> = BTreeMap::new();
        for (i, q) in quotes.iter().enumerate() {
            by_key
                .entry((q.quote_date, q.tbill_rate.to_bits(), q.vol_proxy.to_bits()))
                .or_default()
                .push(i);
        }
        let groups = by_key
            .into_iter()
            .map(|((date, rate, x0), idx)| {
                let steps_of = |i: usize| {
                    let q = &quotes[i];
                    ((q.maturity_years() / mc.dt).round() as usize).max(1)
                };
                let mut steps: Vec<usize> = idx.iter().map(|&i| steps_of(i)).collect();
                steps.sort_unstable();
                steps.dedup();
                let members = idx
                    .iter()
                    .map(|&i| (i, steps.binary_search(&steps_of(i)).unwrap()))
                    .collect();
                QuoteGroup {
                    date,
                    rate: f64::from_bits(rate),
                    x0: f64::from_bits(x0),
                    steps,
                    members,
                }
            })
            .collect();
        Ok(Self {
            quotes: quotes.to_vec(),
            groups,
            mc: *mc,
            grid: *grid,
        })
    }

    pub fn quotes(&self) -> &[OptionQuote] {
        &self.quotes
    }

    /// One price-dividend solution per distinct rate.
    fn solutions(&self, params: &ModelParams) -> Result<BTreeMap<u64, PdSolution>> {
        let mut rates: Vec<u64> = self.groups.iter().map(|g| g.rate.to_bits()).collect();
        rates.sort_unstable();
        rates.dedup();
        rates
            .into_iter()
            .map(|bits| {
                let p = ModelParams { r: f64::from_bits(bits), ..*params };
                solve_pd_ratio(&p, &self.grid).map(|s| (bits, s))
            })
            .collect()
    }

    /// Model prices in quote order. Any failure to solve for the
    /// price-dividend ratio is reported as `InfeasiblePoint`.
    pub fn model_prices(&self, params: &ModelParams) -> Result<Vec<f64>> {
        let infeasible = |e: Error| Error::InfeasiblePoint(format!("{}: {e}", e.name()));
        params.validate().map_err(infeasible)?;
        let sols = self.solutions(params).map_err(infeasible)?;
        let streams = StreamFactory::new(self.mc.seed, "calibrate");
        let per_group: Vec<Vec<(usize, f64)>> = self
            .groups
            .par_iter()
            .map(|g| {
                let sol = &sols[&g.rate.to_bits()];
                let p = ModelParams { r: g.rate, ..*params };
                let day = streams.child(g.date.num_days_from_ce() as u64);
                let growth = simulate_growth(
                    sol,
                    &p,
                    g.x0,
                    &g.steps,
                    self.mc.dt,
                    self.mc.n_paths,
                    self.mc.antithetic,
                    &day,
                );
                g.members
                    .iter()
                    .map(|&(i, h)| {
                        let q = &self.quotes[i];
                        (i, growth.call_price(h, q.spot, q.strike, g.rate).price)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; self.quotes.len()];
        for (i, v) in per_group.into_iter().flatten() {
            out[i] = v;
        }
        Ok(out)
    }

    /// Model price minus quoted mid, in quote order.
    pub fn residuals(&self, params: &ModelParams) -> Result<Vec<f64>> {
        let prices = self.model_prices(params)?;
        Ok(prices
            .iter()
            .zip(&self.quotes)
            .map(|(m, q)| m - q.mid())
            .collect())
    }

    pub fn rmse(&self, params: &ModelParams) -> Result<f64> {
        if self.quotes.is_empty() {
            return Err(Error::InsufficientData("no quotes".into()));
        }
        Ok(rmse(&self.residuals(params)?))
    }
}

/// `√(mean(r²))`.
pub fn rmse(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Root mean squared pricing error of `params` (with `params.alpha` as
/// the average dividend growth rate and each quote's own rate).
pub fn rmse_loss(
    quotes: &[OptionQuote],
    params: &ModelParams,
    mc: &McConfig,
    grid: &PdGridConfig,
) -> Result<f64> {
    PanelPricer::new(quotes, mc, grid)?.rmse(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    pub params: ModelParams,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Fitted `λ_x = β̃ - β`; absent when not identified.
    pub lambda_x: Option<f64>,
    pub in_sample_rmse: f64,
    pub out_sample_rmse: Option<f64>,
    /// Gauss-Newton approximations, aligned with `names`.
    pub standard_errors: Option<Vec<f64>>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub n_quotes: usize,
    /// `γ σ_x ρ_rx` at the mean volatility proxy.
    pub implied_lambda_x: Option<f64>,
}

/// Fits the free parameters to `quotes` starting from `start`.
pub fn calibrate(
    quotes: &[OptionQuote],
    start: &ModelParams,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if quotes.is_empty() {
        return Err(Error::AllPointsInfeasible);
    }
    let pricer = PanelPricer::new(quotes, &cfg.mc, &cfg.grid)?;
    let mode = cfg.mode;
    let r_mean = quotes.iter().map(|q| q.tbill_rate).sum::<f64>() / quotes.len() as f64;
    let loss = |v: &[f64]| {
        let p = mode.unpack(v, cfg.alpha_bar, r_mean);
        pricer.rmse(&p).unwrap_or(f64::INFINITY)
    };

    let x0 = mode.pack(start);
    let mut res = minimize(loss, &x0, &cfg.optimizer)?;
    if cfg.restart {
        let opts = NelderMeadOptions {
            initial_step: cfg.restart_step,
            ..cfg.optimizer
        };
        let again = minimize(loss, &res.x, &opts)?;
        res = crate::nelder_mead::NelderMeadResult {
            iterations: res.iterations + again.iterations,
            evaluations: res.evaluations + again.evaluations,
            ..if again.fx <= res.fx { again } else { res }
        };
    }
    if !res.fx.is_finite() {
        return Err(Error::AllPointsInfeasible);
    }
    if cfg.strict && !res.converged {
        return Err(Error::MaxIterations(res.iterations));
    }
    let params = mode.unpack(&res.x, cfg.alpha_bar, r_mean);
    let standard_errors = if cfg.standard_errors {
        gauss_newton_std_errors(&pricer, mode, &res.x, cfg.alpha_bar, r_mean)
    } else {
        None
    };
    let x_mean = quotes.iter().map(|q| q.vol_proxy).sum::<f64>() / quotes.len() as f64;
    let implied_lambda_x = solve_pd_ratio(&params, &cfg.grid)
        .ok()
        .and_then(|sol| implied_vol_risk_premium(&params, &sol, x_mean).ok());
    Ok(CalibrationResult {
        mode,
        params,
        names: mode.names().iter().map(|s| s.to_string()).collect(),
        estimates: res.x.clone(),
        lambda_x: (mode == CalibrationMode::Full).then(|| res.x[3]),
        in_sample_rmse: res.fx,
        out_sample_rmse: None,
        standard_errors,
        iterations: res.iterations,
        evaluations: res.evaluations,
        converged: res.converged,
        n_quotes: quotes.len(),
        implied_lambda_x,
    })
}

/// Adds the out-of-sample RMSE of a fitted result.
pub fn evaluate_out_of_sample(
    result: &mut CalibrationResult,
    quotes: &[OptionQuote],
    cfg: &CalibrationConfig,
) -> Result<()> {
    result.out_sample_rmse = if quotes.is_empty() {
        None
    } else {
        Some(rmse_loss(quotes, &result.params, &cfg.mc, &cfg.grid)?)
    };
    Ok(())
}

/// Standard errors from `σ̂² (JᵀJ)⁻¹`, with `J` the central-difference
/// Jacobian of the pricing residuals.
fn gauss_newton_std_errors(
    pricer: &PanelPricer,
    mode: CalibrationMode,
    x: &[f64],
    alpha: f64,
    r: f64,
) -> Option<Vec<f64>> {
    let n = pricer.quotes().len();
    let k = x.len();
    if n <= k {
        return None;
    }
    let res = pricer.residuals(&mode.unpack(x, alpha, r)).ok()?;
    let mut jac = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let h = 1e-4 * x[j].abs().max(0.1);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[j] += h;
        dn[j] -= h;
        let ru = pricer.residuals(&mode.unpack(&up, alpha, r)).ok()?;
        let rd = pricer.residuals(&mode.unpack(&dn, alpha, r)).ok()?;
        for i in 0..n {
            jac[(i, j)] = (ru[i] - rd[i]) / (2.0 * h);
        }
    }
    let ssr = DVector::from_vec(res).norm_squared();
    let s2 = ssr / (n - k) as f64;
    let cov = (jac.transpose() * &jac).try_inverse()? * s2;
    Some((0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect())
}

/// Volatility risk premium implied by the return/volatility correlation,
/// `γ σ_x ρ_rx(x)`.
pub fn implied_vol_risk_premium(params: &ModelParams, sol: &PdSolution, x: f64) -> Result<f64> {
    if params.gamma == 0.0 {
        return Ok(0.0);
    }
    let rho_rx = sol.return_vol_correlation(x)?;
    Ok(implied_vol_risk_premium_from(params.gamma, params.sigma_x, rho_rx))
}

pub fn implied_vol_risk_premium_from(gamma: f64, sigma_x: f64, rho_rx: f64) -> f64 {
    gamma * sigma_x * rho_rx
}

/// Layout of a synthetic quote panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticPanel {
    pub start: NaiveDate,
    pub n_dates: u32,
    /// Maturities in trading days.
    pub maturities: Vec<u32>,
    /// Strikes as multiples of spot.
    pub moneyness: Vec<f64>,
    pub spot0: f64,
    pub rate: f64,
    /// Half-width of the synthetic bid/ask spread.
    pub half_spread: f64,
    pub x0: f64,
    pub seed: u64,
}

impl Default for SyntheticPanel {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(1995, 1, 3).unwrap(),
            n_dates: 30,
            maturities: vec![21, 42, 63, 84],
            moneyness: vec![0.94, 0.97, 1.0, 1.03, 1.06],
            spot0: 460.0,
            rate: 0.05,
            half_spread: 0.125,
            x0: 0.13,
            seed: 20,
        }
    }
}

/// Quotes whose mids are model prices at `truth`. Spot, rate and
/// volatility proxy follow a simple daily random walk per date.
pub fn synthetic_quotes(
    truth: &ModelParams,
    panel: &SyntheticPanel,
    mc: &McConfig,
    grid: &PdGridConfig,
) -> Result<Vec<OptionQuote>> {
    use rand::Rng;
    let mut rng = StreamFactory::new(panel.seed, "synthetic-panel").stream(0);
    let mut skeleton = Vec::new();
    let (mut spot, mut x) = (panel.spot0, panel.x0);
    let mut date = panel.start;
    for d in 0..panel.n_dates {
        if d > 0 {
            date = add_trading_days(date, 1);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let w: f64 = rng.sample(rand_distr::StandardNormal);
            spot *= (x / TRADING_DAYS.sqrt() * z).exp();
            x = (x + 0.01 * w).clamp(0.08, 0.3);
        }
        let rate = panel.rate + 0.002 * (rng.random::<f64>() - 0.5);
        let rate = (rate * 1e5).round() / 1e5;
        let vol = (x * 1e4).round() / 1e4;
        let spot_r = (spot * 100.0).round() / 100.0;
        for &m in &panel.maturities {
            for &k in &panel.moneyness {
                skeleton.push(OptionQuote {
                    quote_date: date,
                    timestamp: NaiveTime::from_hms_opt(10, 0, 0).unwrap(),
                    spot: spot_r,
                    strike: (spot_r * k / 5.0).round() * 5.0,
                    expiry_date: add_trading_days(date, m),
                    bid: 0.0,
                    ask: 0.0,
                    tbill_rate: rate,
                    vol_proxy: vol,
                });
            }
        }
    }
    let prices = PanelPricer::new(&skeleton, mc, grid)?.model_prices(truth)?;
    Ok(skeleton
        .into_iter()
        .zip(prices)
        .map(|(q, p)| {
            let half = panel.half_spread.min(p);
            OptionQuote { bid: p - half, ask: p + half, ..q }
        })
        .collect())
}

/// Text table with one column per fitted specification; standard errors
/// in parentheses below each estimate.
pub fn format_table(columns: &[(&str, &CalibrationResult)]) -> String {
    use std::fmt::Write;
    let rows: [(&str, &str); 5] = [
        ("beta_q", "beta~ (risk-neutral speed)"),
        ("sigma_x", "sigma_x"),
        ("rho_dx", "rho_dx"),
        ("lambda_x", "lambda_x"),
        ("gamma", "gamma"),
    ];
    let w = 16;
    let mut s = String::new();
    write!(s, "{:<28}", "").unwrap();
    for (name, _) in columns {
        write!(s, "{name:>w$}").unwrap();
    }
    s.push('\n');
    for (key, label) in rows {
        write!(s, "{label:<28}").unwrap();
        let mut ses = String::new();
        write!(ses, "{:<28}", "").unwrap();
        for (_, r) in columns {
            match r.names.iter().position(|n| n == key) {
                Some(i) => {
                    write!(s, "{:>w$.4}", r.estimates[i]).unwrap();
                    match r.standard_errors.as_ref().map(|v| v[i]) {
                        Some(se) => write!(ses, "{:>w$}", format!("({se:.4})")).unwrap(),
                        None => write!(ses, "{:>w$}", "").unwrap(),
                    }
                }
                None if key == "gamma" && r.mode == CalibrationMode::GammaZero => {
                    write!(s, "{:>w$}", "0 (fixed)").unwrap();
                    write!(ses, "{:>w$}", "").unwrap();
                }
                None => {
                    write!(s, "{:>w$}", "-").unwrap();
                    write!(ses, "{:>w$}", "").unwrap();
                }
            }
        }
        s.push('\n');
        if ses.trim().len() > 0 {
            s.push_str(ses.trim_end());
            s.push('\n');
        }
    }
    let line = |s: &mut String, label: &str, f: &dyn Fn(&CalibrationResult) -> String| {
        write!(s, "{label:<28}").unwrap();
        for (_, r) in columns {
            write!(s, "{:>w$}", f(r)).unwrap();
        }
        s.push('\n');
    };
    line(&mut s, "in-sample $RMSE", &|r| format!("{:.4}", r.in_sample_rmse));
    line(&mut s, "out-of-sample $RMSE", &|r| {
        r.out_sample_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
    });
    line(&mut s, "quotes", &|r| r.n_quotes.to_string());
    line(&mut s, "implied lambda_x", &|r| {
        r.implied_lambda_x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
    });
    s
}

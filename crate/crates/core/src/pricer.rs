//! Monte Carlo pricing of European calls under the risk-neutral measure.
//!
//! Risk-neutral paths reuse the physical price-dividend ratio: only the
//! mean-reversion speed of volatility changes (to `β̃`) and the expected
//! return becomes `r`. Antithetic pairs negate both shock streams and are
//! the independent unit for standard errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{MarketState, ModelParams};
use crate::pd::PdSolution;
use crate::rng::{CorrelatedShocks, StreamFactory};
use crate::simulate::{log_price_increment, OuStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    /// Time to maturity in years.
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64) -> Result<Self> {
        if !(strike >= 0.0) || !strike.is_finite() {
            return Err(Error::InvalidParameter {
                name: "strike",
                value: strike,
                reason: "must be finite and non-negative",
            });
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::InvalidParameter {
                name: "maturity",
                value: maturity,
                reason: "must be finite and positive",
            });
        }
        Ok(Self { strike, maturity })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 20_000,
            dt: 1.0 / 252.0,
            seed: 0,
            antithetic: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("mc: {m}")));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.n_paths < 2 {
            return bad("n_paths must be at least 2");
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return bad("n_paths must be even with antithetic variates");
        }
        Ok(())
    }

    /// Number of independent sampling units (pairs when antithetic).
    pub fn n_units(&self) -> usize {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_effective: usize,
}

impl PriceEstimate {
    /// Mean and standard error of i.i.d. unit samples.
    pub fn from_units(units: &[f64], n_paths: usize) -> Self {
        let n = units.len() as f64;
        let mean = units.iter().sum::<f64>() / n;
        let var = if units.len() > 1 {
            units.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            price: mean,
            std_error: (var / n).sqrt(),
            n_effective: n_paths,
        }
    }
}

/// Estimate of `a - b` from unit samples generated with common random
/// numbers.
pub fn paired_difference(a: &[f64], b: &[f64]) -> PriceEstimate {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    PriceEstimate::from_units(&d, a.len())
}

/// Risk-neutral path stepper bound to one solution.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RnStepper<'a> {
    sol: &'a PdSolution,
    r: f64,
    dt: f64,
    sqrt_dt: f64,
    ou: OuStep,
}

impl<'a> RnStepper<'a> {
    pub(crate) fn new(sol: &'a PdSolution, params: &ModelParams, dt: f64) -> Self {
        Self {
            sol,
            r: params.r,
            dt,
            sqrt_dt: dt.sqrt(),
            ou: OuStep::new(params.beta_q, params.sigma_x, dt),
        }
    }

    /// Advances `(x, ln P)` and returns the dividend yield at the start of
    /// the step.
    #[inline]
    pub(crate) fn step(&self, x: &mut f64, lnp: &mut f64, s: CorrelatedShocks) -> f64 {
        let c = self.sol.coefficients(*x);
        *lnp += log_price_increment(self.r - c.yield_, *x, c.y, c.vol_loading, s, self.dt, self.sqrt_dt);
        *x = self.ou.apply(*x, s.eps_x);
        c.yield_
    }
}

/// One risk-neutral step of `(P, x)`; the dividend is re-derived from the
/// new price.
pub fn rn_step(
    state: &MarketState,
    sol: &PdSolution,
    shocks: CorrelatedShocks,
    dt: f64,
    params: &ModelParams,
) -> MarketState {
    let stepper = RnStepper::new(sol, params, dt);
    let (mut x, mut lnp) = (state.x, state.price.ln());
    stepper.step(&mut x, &mut lnp, shocks);
    let price = lnp.exp();
    MarketState {
        t: state.t + dt,
        price,
        dividend: price / sol.f(x),
        x,
    }
}

fn check_solution(sol: &PdSolution, params: &ModelParams) -> Result<()> {
    params.validate()?;
    let s = sol.params();
    let same = s.r - s.alpha == params.r - params.alpha
        && s.gamma == params.gamma
        && s.beta == params.beta
        && s.sigma_x == params.sigma_x
        && s.rho_dx == params.rho_dx;
    if same {
        Ok(())
    } else {
        Err(Error::InvalidConfig(
            "price-dividend solution was computed for different parameters".into(),
        ))
    }
}

/// Simulated risk-neutral gross returns `P_T / P_0`, shared across
/// several horizons.
///
/// `growth[u]` holds, for sampling unit `u`, one entry per horizon (and a
/// second block for the antithetic partner, if any).
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSamples {
    pub steps: Vec<usize>,
    pub dt: f64,
    pub antithetic: bool,
    pub growth: Vec<Vec<f64>>,
    pub n_paths: usize,
}

impl GrowthSamples {
    /// Discounted call payoff per sampling unit for a spot, strike, rate
    /// and horizon index.
    pub fn call_units(&self, horizon: usize, spot: f64, strike: f64, rate: f64) -> Vec<f64> {
        let m = self.steps.len();
        let t = self.steps[horizon] as f64 * self.dt;
        let disc = (-rate * t).exp();
        let pay = |g: f64| disc * (spot * g - strike).max(0.0);
        self.growth
            .iter()
            .map(|g| {
                if self.antithetic {
                    0.5 * (pay(g[horizon]) + pay(g[m + horizon]))
                } else {
                    pay(g[horizon])
                }
            })
            .collect()
    }

    pub fn call_price(&self, horizon: usize, spot: f64, strike: f64, rate: f64) -> PriceEstimate {
        PriceEstimate::from_units(&self.call_units(horizon, spot, strike, rate), self.n_paths)
    }
}

/// Number of steps used for maturity `t` at nominal step `dt`.
pub fn steps_for(t: f64, dt: f64) -> usize {
    ((t / dt).round() as usize).max(1)
}

/// Simulates risk-neutral growth factors from `x0` to each horizon given
/// in steps of `dt`. Unit `u` draws from substream `u` of `streams`.
pub fn simulate_growth(
    sol: &PdSolution,
    params: &ModelParams,
    x0: f64,
    steps: &[usize],
    dt: f64,
    n_paths: usize,
    antithetic: bool,
    streams: &StreamFactory,
) -> GrowthSamples {
    let n_units = if antithetic { n_paths / 2 } else { n_paths };
    let stepper = RnStepper::new(sol, params, dt);
    let n_max = steps.iter().copied().max().unwrap_or(0);
    let m = steps.len();
    let rho = params.rho_dx;
    let growth = (0..n_units)
        .into_par_iter()
        .map(|u| {
            let mut rng = streams.stream(u as u64);
            let mut out = vec![0.0; if antithetic { 2 * m } else { m }];
            let (mut xa, mut la) = (x0, 0.0);
            let (mut xb, mut lb) = (x0, 0.0);
            for k in 1..=n_max {
                let s = CorrelatedShocks::draw(&mut rng, rho);
                stepper.step(&mut xa, &mut la, s);
                if antithetic {
                    stepper.step(&mut xb, &mut lb, s.negated());
                }
                for (j, &n) in steps.iter().enumerate() {
                    if n == k {
                        out[j] = la.exp();
                        if antithetic {
                            out[m + j] = lb.exp();
                        }
                    }
                }
            }
            out
        })
        .collect();
    GrowthSamples {
        steps: steps.to_vec(),
        dt,
        antithetic,
        growth,
        n_paths: if antithetic { 2 * n_units } else { n_units },
    }
}

/// Discounted call payoffs per sampling unit, for common-random-number
/// comparisons between parameter sets or initial states.
pub fn call_unit_payoffs(
    spec: &OptionSpec,
    state: &MarketState,
    sol: &PdSolution,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    check_solution(sol, params)?;
    mc.validate()?;
    let n = steps_for(spec.maturity, mc.dt);
    let dt = spec.maturity / n as f64;
    let streams = StreamFactory::new(mc.seed, "price");
    let g = simulate_growth(sol, params, state.x, &[n], dt, mc.n_paths, mc.antithetic, &streams);
    Ok(g.call_units(0, state.price, spec.strike, params.r))
}

/// Discounted expected call payoff. The step is adjusted to
/// `T / round(T / dt)` so that the horizon is hit exactly.
pub fn price_call(
    spec: &OptionSpec,
    state: &MarketState,
    sol: &PdSolution,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<PriceEstimate> {
    let units = call_unit_payoffs(spec, state, sol, params, mc)?;
    Ok(PriceEstimate::from_units(&units, mc.n_paths))
}

/// Discounted expected terminal price: a call struck at zero.
pub fn price_zero_strike(
    maturity: f64,
    state: &MarketState,
    sol: &PdSolution,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<PriceEstimate> {
    price_call(&OptionSpec::new(0.0, maturity)?, state, sol, params, mc)
}

/// Prices several contracts on one underlying state with shared paths.
/// Maturities are rounded to whole steps of `mc.dt`.
pub fn price_calls(
    specs: &[OptionSpec],
    state: &MarketState,
    sol: &PdSolution,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<Vec<PriceEstimate>> {
    check_solution(sol, params)?;
    mc.validate()?;
    let mut steps: Vec<usize> = specs.iter().map(|s| steps_for(s.maturity, mc.dt)).collect();
    steps.sort_unstable();
    steps.dedup();
    let streams = StreamFactory::new(mc.seed, "price");
    let g = simulate_growth(sol, params, state.x, &steps, mc.dt, mc.n_paths, mc.antithetic, &streams);
    Ok(specs
        .iter()
        .map(|s| {
            let h = steps.binary_search(&steps_for(s.maturity, mc.dt)).unwrap();
            g.call_price(h, state.price, s.strike, params.r)
        })
        .collect())
}

/// Monte Carlo estimate of `E[e^{-rT} P_T + ∫ e^{-rs} D_s ds] / P_0`,
/// which equals one when prices are consistent with the dividend stream.
pub fn pricing_identity(
    maturity: f64,
    state: &MarketState,
    sol: &PdSolution,
    params: &ModelParams,
    mc: &McConfig,
) -> Result<PriceEstimate> {
    check_solution(sol, params)?;
    mc.validate()?;
    let n = steps_for(maturity, mc.dt);
    let dt = maturity / n as f64;
    let stepper = RnStepper::new(sol, params, dt);
    let streams = StreamFactory::new(mc.seed, "identity");
    let (r, rho, x0) = (params.r, params.rho_dx, state.x);
    let path = |shocks: &mut dyn FnMut() -> CorrelatedShocks| {
        let (mut x, mut lnp) = (x0, 0.0);
        let mut acc = 0.0;
        let mut prev = sol.dividend_yield(x0);
        for k in 0..n {
            stepper.step(&mut x, &mut lnp, shocks());
            let t1 = (k + 1) as f64 * dt;
            let next = lnp.exp() * sol.dividend_yield(x);
            let t0 = k as f64 * dt;
            acc += 0.5 * dt * ((-r * t0).exp() * prev + (-r * t1).exp() * next);
            prev = next;
        }
        (-r * maturity).exp() * lnp.exp() + acc
    };
    let units: Vec<f64> = (0..mc.n_units())
        .into_par_iter()
        .map(|u| {
            let mut rng = streams.stream(u as u64);
            if mc.antithetic {
                let draws: Vec<CorrelatedShocks> =
                    (0..n).map(|_| CorrelatedShocks::draw(&mut rng, rho)).collect();
                let mut i = 0;
                let a = path(&mut || {
                    i += 1;
                    draws[i - 1]
                });
                let mut j = 0;
                let b = path(&mut || {
                    j += 1;
                    draws[j - 1].negated()
                });
                0.5 * (a + b)
            } else {
                path(&mut || CorrelatedShocks::draw(&mut rng, rho))
            }
        })
        .collect();
    Ok(PriceEstimate::from_units(&units, mc.n_paths))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HestonReport {
    /// Price from the general machinery with a constant price-dividend ratio.
    pub full: PriceEstimate,
    /// Price from a direct simulation of `dP = αP dt + xP dB`.
    pub reduced: PriceEstimate,
    pub difference: f64,
    pub combined_std_error: f64,
    /// `|difference| <= 3 · combined_std_error` (or both exactly equal).
    pub agrees: bool,
}

/// Compares the general pricer at `γ = 0` against a stand-alone
/// simulation of the reduced Heston-type pair, with common random numbers.
pub fn heston_reduction_check(
    params: &ModelParams,
    spec: &OptionSpec,
    state: &MarketState,
    mc: &McConfig,
) -> Result<HestonReport> {
    if params.gamma != 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: params.gamma,
            reason: "the reduction check requires gamma = 0",
        });
    }
    params.validate()?;
    mc.validate()?;
    let sol = crate::pd::pd_ratio_constant(*params, &Default::default())?;
    let full = price_call(spec, state, &sol, params, mc)?;

    let n = steps_for(spec.maturity, mc.dt);
    let dt = spec.maturity / n as f64;
    let sqrt_dt = dt.sqrt();
    let decay = (-params.beta_q * dt).exp();
    let sd = params.sigma_x * ((1.0 - (-2.0 * params.beta_q * dt).exp()) / (2.0 * params.beta_q)).sqrt();
    let disc = (-params.r * spec.maturity).exp();
    let streams = StreamFactory::new(mc.seed, "price");
    let (alpha, rho, x0, p0, k) = (params.alpha, params.rho_dx, state.x, state.price, spec.strike);
    let terminal = |draws: &[CorrelatedShocks], sgn: f64| {
        let (mut x, mut lnp) = (x0, p0.ln());
        for s in draws {
            lnp += (alpha - 0.5 * x * x) * dt + x * sqrt_dt * sgn * s.eps_d;
            x = x * decay + sd * sgn * s.eps_x;
        }
        disc * (lnp.exp() - k).max(0.0)
    };
    let units: Vec<f64> = (0..mc.n_units())
        .into_par_iter()
        .map(|u| {
            let mut rng = streams.stream(u as u64);
            let draws: Vec<CorrelatedShocks> =
                (0..n).map(|_| CorrelatedShocks::draw(&mut rng, rho)).collect();
            if mc.antithetic {
                0.5 * (terminal(&draws, 1.0) + terminal(&draws, -1.0))
            } else {
                terminal(&draws, 1.0)
            }
        })
        .collect();
    let reduced = PriceEstimate::from_units(&units, mc.n_paths);
    let difference = full.price - reduced.price;
    let combined_std_error = (full.std_error.powi(2) + reduced.std_error.powi(2)).sqrt();
    Ok(HestonReport {
        full,
        reduced,
        difference,
        combined_std_error,
        agrees: difference.abs() <= 3.0 * combined_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pd::{pd_ratio_constant, solve_pd_ratio, PdGridConfig};

    fn degenerate() -> ModelParams {
        ModelParams {
            r: 0.02,
            alpha: 0.015,
            gamma: 0.0,
            beta: 0.5,
            beta_q: 0.5,
            sigma_x: 0.0,
            rho_dx: -0.5,
        }
    }

    fn fig4(gamma: f64) -> ModelParams {
        ModelParams {
            r: 0.02,
            alpha: 0.015,
            gamma,
            beta: 0.5,
            beta_q: 0.5,
            sigma_x: 0.2,
            rho_dx: -0.5,
        }
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::default().validate().is_ok());
        let odd = McConfig { n_paths: 11, ..McConfig::default() };
        assert!(odd.validate().is_err());
        assert!(McConfig { antithetic: false, ..odd }.validate().is_ok());
        assert!(OptionSpec::new(-1.0, 1.0).is_err());
        assert!(OptionSpec::new(100.0, 0.0).is_err());
    }

    #[test]
    fn estimate_arithmetic() {
        let e = PriceEstimate::from_units(&[1.0, 2.0, 3.0, 4.0], 8);
        assert_eq!(e.price, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.n_effective, 8);
        let d = paired_difference(&[2.0, 3.0], &[1.0, 2.0]);
        assert_eq!((d.price, d.std_error), (1.0, 0.0));
    }

    #[test]
    fn rn_step_drift() {
        let p = degenerate();
        let sol = pd_ratio_constant(p, &PdGridConfig::default()).unwrap();
        let s0 = MarketState::new(0.0, 100.0, 0.5, 0.0).unwrap();
        let s1 = rn_step(&s0, &sol, CorrelatedShocks::zero(), 0.25, &p);
        assert!(((s1.price / 100.0).ln() - 0.015 * 0.25).abs() < 1e-15);

        let p = fig4(2.0);
        let sol = solve_pd_ratio(&p, &PdGridConfig::default()).unwrap();
        let s0 = MarketState { t: 0.0, price: 50.0, dividend: 1.0, x: 0.3 };
        let s1 = rn_step(&s0, &sol, CorrelatedShocks::zero(), 0.01, &p);
        let expected = (p.r - 1.0 / sol.f(0.3) - 0.045) * 0.01;
        assert!(((s1.price / 50.0).ln() - expected).abs() < 1e-14);
        assert!((s1.x - 0.3 * (-0.005f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_forward() {
        let p = degenerate();
        let sol = pd_ratio_constant(p, &PdGridConfig::default()).unwrap();
        let s0 = MarketState::new(0.0, 100.0, 0.5, 0.0).unwrap();
        let mc = McConfig { n_paths: 10, ..McConfig::default() };
        let e = price_call(&OptionSpec::new(100.0, 1.0).unwrap(), &s0, &sol, &p, &mc).unwrap();
        let exact = (-0.02f64).exp() * (100.0 * 0.015f64.exp() - 100.0);
        assert!((e.price / exact - 1.0).abs() < 1e-10);
        assert_eq!(e.std_error, 0.0);
        assert!((exact - 1.4812).abs() < 5e-4);
    }

    #[test]
    fn mismatched_solution_is_rejected() {
        let sol = solve_pd_ratio(&fig4(2.0), &PdGridConfig::default()).unwrap();
        let s0 = MarketState::new(0.0, 100.0, 1.0, 0.2).unwrap();
        let mc = McConfig { n_paths: 10, ..McConfig::default() };
        let spec = OptionSpec::new(100.0, 0.1).unwrap();
        assert!(price_call(&spec, &s0, &sol, &fig4(1.0), &mc).is_err());
        let other_q = ModelParams { beta_q: 0.9, ..fig4(2.0) };
        assert!(price_call(&spec, &s0, &sol, &other_q, &mc).is_ok());
    }

    #[test]
    fn shared_paths_match_single_contract_pricing() {
        let p = fig4(2.0);
        let sol = solve_pd_ratio(&p, &PdGridConfig::default()).unwrap();
        let s0 = MarketState::new(0.0, 100.0, 1.0, 0.2).unwrap();
        let mc = McConfig { n_paths: 200, ..McConfig::default() };
        let specs = [
            OptionSpec::new(95.0, 20.0 / 252.0).unwrap(),
            OptionSpec::new(105.0, 60.0 / 252.0).unwrap(),
        ];
        let many = price_calls(&specs, &s0, &sol, &p, &mc).unwrap();
        for (spec, est) in specs.iter().zip(&many) {
            let one = price_call(spec, &s0, &sol, &p, &mc).unwrap();
            assert!((one.price - est.price).abs() < 1e-9 * one.price.max(1.0));
        }
    }

    #[test]
    fn heston_check_rejects_positive_gamma() {
        let s0 = MarketState::new(0.0, 100.0, 1.0, 0.2).unwrap();
        let spec = OptionSpec::new(100.0, 0.5).unwrap();
        let r = heston_reduction_check(&fig4(1.0), &spec, &s0, &McConfig::default());
        assert!(matches!(r, Err(Error::InvalidParameter { name: "gamma", .. })));
        let bad = ModelParams { alpha: 0.03, ..fig4(0.0) };
        assert!(matches!(
            heston_reduction_check(&bad, &spec, &s0, &McConfig::default()),
            Err(Error::GammaZeroRequiresRGreaterAlpha { .. })
        ));
    }
}

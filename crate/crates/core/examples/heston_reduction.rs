//! With `γ = 0` the model collapses to a Heston-type pair; the general
//! pricer is compared against a stand-alone simulation of that pair and
//! against the lognormal price when volatility is deterministic.
//!
//! ```text
//! cargo run --release --example heston_reduction
//! ```

use statrs::distribution::{ContinuousCDF, Normal};
use volfeedback::pricer::{heston_reduction_check, price_call, McConfig, OptionSpec};
use volfeedback::{pd_ratio_constant, MarketState, ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams { r: 0.02, alpha: 0.015, gamma: 0.0, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx: -0.5 };
    let s0 = MarketState::new(0.0, 100.0, 100.0 * (p.r - p.alpha), 0.2)?;
    let mc = McConfig { n_paths: 20_000, seed: 3, ..McConfig::default() };
    for (k, t) in [(90.0, 0.25), (100.0, 0.5), (110.0, 1.0)] {
        let rep = heston_reduction_check(&p, &OptionSpec::new(k, t)?, &s0, &mc)?;
        println!(
            "K {k:>5} T {t:<4}  general {:.4}  reduced {:.4}  diff {:+.2e}  (3 se {:.2e})  {}",
            rep.full.price,
            rep.reduced.price,
            rep.difference,
            3.0 * rep.combined_std_error,
            if rep.agrees { "agree" } else { "DISAGREE" }
        );
    }

    let q = ModelParams { sigma_x: 0.0, ..p };
    let sol = pd_ratio_constant(q, &PdGridConfig::default())?;
    let (k, t) = (100.0, 1.0);
    let est = price_call(&OptionSpec::new(k, t)?, &s0, &sol, &q, &mc)?;
    let n = (t / mc.dt).round() as usize;
    let dt = t / n as f64;
    let var: f64 = (0..n).map(|i| (0.2 * (-q.beta_q * i as f64 * dt).exp()).powi(2) * dt).sum();
    let sd = var.sqrt();
    let d1 = ((100.0 / k).ln() + q.alpha * t) / sd + 0.5 * sd;
    let nd = Normal::new(0.0, 1.0)?;
    let bs = 100.0 * (-(q.r - q.alpha) * t).exp() * nd.cdf(d1) - k * (-q.r * t).exp() * nd.cdf(d1 - sd);
    println!("deterministic volatility: MC {:.4} ± {:.4}, lognormal {bs:.4}", est.price, est.std_error);
    Ok(())
}

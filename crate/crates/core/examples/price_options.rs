//! Prices a strike/maturity grid of European calls on shared risk-neutral
//! paths, with the model-free bounds and the discounted-gains check.
//!
//! ```text
//! cargo run --release --example price_options -- [paths] [seed]
//! ```

use volfeedback::pricer::{price_calls, price_zero_strike, pricing_identity, McConfig, OptionSpec};
use volfeedback::{solve_pd_ratio, MarketState, ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_paths: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let p = ModelParams { r: 0.02, alpha: 0.015, gamma: 2.0, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx: -0.5 };
    let sol = solve_pd_ratio(&p, &PdGridConfig::default())?;
    let s0 = MarketState::new(0.0, 100.0, 100.0 / sol.f(0.2), 0.2)?;
    let mc = McConfig { n_paths, seed, ..McConfig::default() };

    let strikes = [80.0, 90.0, 100.0, 110.0, 120.0];
    for t in [0.25, 0.5, 1.0] {
        let specs: Vec<_> = strikes.iter().map(|&k| OptionSpec::new(k, t)).collect::<Result<_, _>>()?;
        let est = price_calls(&specs, &s0, &sol, &p, &mc)?;
        let pv_div = 100.0 - price_zero_strike(t, &s0, &sol, &p, &mc)?.price;
        println!("T = {t}  (PV of dividends {pv_div:.3})");
        for (k, e) in strikes.iter().zip(&est) {
            let lower = (100.0 - pv_div - k * (-p.r * t).exp()).max(0.0);
            println!("  K {k:>5}  {:>8.4} ± {:.4}   bound {lower:.4}", e.price, e.std_error);
        }
    }
    let id = pricing_identity(1.0, &s0, &sol, &p, &McConfig { n_paths: n_paths.min(4000), ..mc })?;
    println!("E[discounted gains] / P0 = {:.5} ± {:.5}", id.price, id.std_error);
    Ok(())
}

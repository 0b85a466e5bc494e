//! Simulates a long physical-measure path and prints the volatility
//! feedback statistics.
//!
//! ```text
//! cargo run --release --example simulate_paths -- [steps] [seed]
//! ```

use volfeedback::simulate::{path_statistics, simulate_paths, SimConfig};
use volfeedback::{solve_pd_ratio, ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let params = ModelParams {
        r: 0.02,
        alpha: 0.05,
        gamma: 2.0,
        beta: 0.5,
        beta_q: 0.5,
        sigma_x: 0.2,
        rho_dx: -0.5,
    };
    let sol = solve_pd_ratio(&params, &PdGridConfig::default())?;
    let dt = 1.0 / (24.0 * 252.0);
    let cfg = SimConfig {
        dt,
        horizon: steps as f64 * dt,
        n_paths: 1,
        seed,
        x0: 0.2,
        p0: 100.0,
        direct_dividend: false,
    };
    let paths = simulate_paths(&sol, &cfg)?;
    let stats = path_statistics(&paths, &sol)?;

    println!("steps                      {}", stats.n_steps);
    println!("corr(dx^2, dlnP)           {:.4}", stats.corr_dx2_dlnp);
    println!("corr(dx^2, dlnD)           {:.4}", stats.corr_dx2_dlnd);
    println!("feedback gap               {:.4}", stats.feedback_gap);
    println!("mean x/y                   {:.4}", stats.mean_vol_ratio);
    println!("realized sd ratio          {:.4}", stats.realized_vol_ratio);
    println!("mean rho_rx                {:.4}", stats.mean_rho_rx);
    println!("lag-1 autocorr of r^2      {:.4}", stats.sq_return_autocorr_lag1);
    Ok(())
}

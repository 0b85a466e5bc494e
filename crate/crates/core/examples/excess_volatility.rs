//! Dividend growth volatility against return volatility: the ratio
//! `x / y(x)` and the return/volatility correlation `ρ_rx(x)`.
//!
//! ```text
//! cargo run --release --example excess_volatility -- [gamma]
//! ```

use volfeedback::{solve_pd_ratio, ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3.0);
    let p = ModelParams { r: 0.02, alpha: 0.08, gamma, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx: -0.5 };
    let sol = solve_pd_ratio(&p, &PdGridConfig::default())?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>8}", "x", "y(x)", "x/y", "rho_rx", "x^2>y^2");
    for i in 1..=12 {
        let x = 0.05 * i as f64;
        let y = sol.dividend_vol(x)?;
        println!(
            "{x:>6.2} {y:>10.5} {:>10.2} {:>10.4} {:>8}",
            x / y,
            sol.return_vol_correlation(x)?,
            sol.excess_volatility_holds(x)
        );
    }
    let (peak, at) = sol.mesh()[1..]
        .iter()
        .map(|&x| (x / sol.dividend_vol(x).unwrap_or(f64::NAN), x))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    println!("peak x/y = {peak:.1} at x = {at:.4}");
    Ok(())
}

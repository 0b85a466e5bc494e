//! Solves for the price-dividend ratio over a grid of risk prices and
//! leverage correlations, printing `f(x)` at a few volatility levels.
//!
//! ```text
//! cargo run --release --example solve_pd_ratio
//! ```

use volfeedback::{solve_pd_ratio, ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xs = [0.0, 0.1, 0.2, 0.3, 0.5, 1.0];
    print!("{:>5} {:>5} {:>5} {:>6}", "gamma", "alpha", "rho", "nodes");
    for x in xs {
        print!(" {:>9}", format!("f({x:.1})"));
    }
    println!();
    for (gamma, alpha) in [(1.0, 0.03), (2.0, 0.05), (3.0, 0.08)] {
        for rho_dx in [-0.5, 0.5] {
            let p = ModelParams { r: 0.02, alpha, gamma, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx };
            let sol = solve_pd_ratio(&p, &PdGridConfig::default())?;
            print!("{gamma:>5} {alpha:>5} {rho_dx:>5} {:>6}", sol.mesh().len());
            for x in xs {
                print!(" {:>9.4}", sol.f(x));
            }
            println!();
        }
    }

    let infeasible = ModelParams { r: 0.02, alpha: 0.08, gamma: 1.0, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx: -0.5 };
    match solve_pd_ratio(&infeasible, &PdGridConfig::default()) {
        Ok(s) => println!("gamma=1, alpha=0.08: f(0) = {:.4}", s.f(0.0)),
        Err(e) => println!("gamma=1, alpha=0.08: {}", e.name()),
    }
    Ok(())
}

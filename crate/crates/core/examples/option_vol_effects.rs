//! Option prices against the risk price, the volatility risk premium and
//! the initial volatility, each as common-random-number differences.
//!
//! ```text
//! cargo run --release --example option_vol_effects -- [paths]
//! ```

use volfeedback::pricer::{call_unit_payoffs, paired_difference, McConfig, OptionSpec};
use volfeedback::{solve_pd_ratio, MarketState, ModelParams, PdGridConfig, PdSolution};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn row(label: String, units: &[Vec<f64>]) {
    print!("{label:<28}");
    for u in units {
        print!(" {:>8.4}", mean(u));
    }
    let z: Vec<String> = units
        .windows(2)
        .map(|w| {
            let d = paired_difference(&w[1], &w[0]);
            format!("{:+.1}", d.price / d.std_error)
        })
        .collect();
    println!("   z {}", z.join(" "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_paths: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let mc = McConfig { n_paths, seed: 11, ..McConfig::default() };
    let grid = PdGridConfig::default();
    let base = |gamma: f64, alpha: f64| ModelParams { r: 0.02, alpha, gamma, beta: 0.5, beta_q: 0.5, sigma_x: 0.2, rho_dx: -0.5 };
    let at = |sol: &PdSolution, x0: f64| MarketState::new(0.0, 100.0, 100.0 / sol.f(x0), x0);
    let atm = OptionSpec::new(100.0, 1.0)?;

    let mut units = Vec::new();
    for g in [0.0, 1.0, 2.0, 3.0] {
        let p = base(g, 0.015);
        let s = solve_pd_ratio(&p, &grid)?;
        units.push(call_unit_payoffs(&atm, &at(&s, 0.2)?, &s, &p, &mc)?);
    }
    row("gamma 0, 1, 2, 3".into(), &units);

    let p0 = base(2.0, 0.05);
    let s = solve_pd_ratio(&p0, &grid)?;
    let mut units = Vec::new();
    for lam in [-0.2, 0.0, 0.2, 0.4] {
        let p = ModelParams { beta_q: p0.beta + lam, ..p0 };
        units.push(call_unit_payoffs(&atm, &at(&s, 0.2)?, &s, &p, &mc)?);
    }
    row("lambda_x -0.2 .. 0.4".into(), &units);

    let xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let zero = OptionSpec::new(0.0, 1.0)?;
    let units: Vec<_> = xs.iter().map(|&x| call_unit_payoffs(&zero, &at(&s, x)?, &s, &p0, &mc)).collect::<Result<_, _>>()?;
    row("K=0, P0 fixed, x0 0 .. 0.5".into(), &units);

    let d0 = 100.0 / s.f(0.0);
    for t in [0.1, 1.0] {
        let spec = OptionSpec::new(100.0, t)?;
        let units: Vec<_> = xs
            .iter()
            .map(|&x| call_unit_payoffs(&spec, &MarketState::new(0.0, d0 * s.f(x), d0, x)?, &s, &p0, &mc))
            .collect::<Result<_, _>>()?;
        row(format!("K=100, D0 fixed, T={t}"), &units);
    }
    Ok(())
}

//! Generates a synthetic quote panel at known parameters, then recovers
//! them by simplex minimisation of the pricing RMSE, in the full and the
//! `γ = 0` specification.
//!
//! ```text
//! cargo run --release --example calibrate_synthetic -- [paths] [generation seed]
//! ```

use std::time::Instant;

use volfeedback::calibrate::{
    calibrate, format_table, synthetic_quotes, CalibrationConfig, CalibrationMode, SyntheticPanel,
};
use volfeedback::pricer::McConfig;
use volfeedback::{ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_paths: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4000);
    let truth = ModelParams {
        r: 0.05,
        alpha: 0.03,
        gamma: 1.8,
        beta: 1.25 + 0.34,
        beta_q: 1.25,
        sigma_x: 0.27,
        rho_dx: -0.64,
    };
    let gen_seed: u64 = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let mc = McConfig { n_paths, seed: 7, ..McConfig::default() };
    let grid = PdGridConfig::default();
    let t0 = Instant::now();
    let gen_mc = McConfig { seed: gen_seed, ..mc };
    let quotes = synthetic_quotes(&truth, &SyntheticPanel::default(), &gen_mc, &grid)?;
    println!("{} synthetic quotes in {:.1?}", quotes.len(), t0.elapsed());

    let start = ModelParams {
        gamma: 1.5,
        beta_q: 1.1,
        beta: 1.1 + 0.2,
        sigma_x: 0.3,
        rho_dx: -0.5,
        ..truth
    };
    let optimizer = volfeedback::nelder_mead::NelderMeadOptions {
        x_tol: 1e-6,
        f_tol: 1e-9,
        max_iterations: 3000,
        max_evaluations: 6000,
        ..Default::default()
    };
    let cfg = CalibrationConfig { alpha_bar: truth.alpha, mc, optimizer, ..CalibrationConfig::default() };
    let t0 = Instant::now();
    let full = calibrate(&quotes, &start, &cfg)?;
    println!("full fit: {} evaluations in {:.1?}, rmse {:e}", full.evaluations, t0.elapsed(), full.in_sample_rmse);

    let t0 = Instant::now();
    let cfg0 = CalibrationConfig { mode: CalibrationMode::GammaZero, ..cfg };
    let restricted = calibrate(&quotes, &start, &cfg0)?;
    println!("gamma = 0 fit: {} evaluations in {:.1?}", restricted.evaluations, t0.elapsed());

    println!();
    println!("{:<10}{:>10}{:>10}", "", "truth", "fitted");
    for (name, t, f) in [
        ("beta_q", truth.beta_q, full.params.beta_q),
        ("sigma_x", truth.sigma_x, full.params.sigma_x),
        ("rho_dx", truth.rho_dx, full.params.rho_dx),
        ("lambda_x", truth.lambda_x(), full.params.lambda_x()),
        ("gamma", truth.gamma, full.params.gamma),
    ] {
        println!("{name:<10}{t:>10.4}{f:>10.4}");
    }
    println!();
    print!("{}", format_table(&[("(i) full", &full), ("(ii) gamma=0", &restricted)]));
    Ok(())
}

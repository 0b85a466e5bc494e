//! Writes a synthetic quote file priced at known parameters, plus a few
//! rows that the standard filters reject, for use with
//! `volfeedback calibrate`.
//!
//! ```text
//! cargo run --release --example synthetic_quotes -- [out.csv] [paths]
//! ```

use chrono::NaiveTime;
use volfeedback::calibrate::{synthetic_quotes, SyntheticPanel};
use volfeedback::pricer::McConfig;
use volfeedback::quotes::{add_trading_days, write_quotes, OptionQuote};
use volfeedback::{ModelParams, PdGridConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "synthetic_quotes.csv".into());
    let n_paths: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let truth = ModelParams {
        r: 0.05,
        alpha: 0.03,
        gamma: 1.8,
        beta: 1.59,
        beta_q: 1.25,
        sigma_x: 0.27,
        rho_dx: -0.64,
    };
    let panel = SyntheticPanel { n_dates: 10, ..SyntheticPanel::default() };
    let mc = McConfig { n_paths, seed: 7, ..McConfig::default() };
    let mut quotes = synthetic_quotes(&truth, &panel, &mc, &PdGridConfig::default())?;

    let q = quotes[2].clone();
    quotes.push(OptionQuote { timestamp: NaiveTime::from_hms_opt(15, 30, 0).unwrap(), ..q.clone() });
    quotes.push(OptionQuote { expiry_date: add_trading_days(q.quote_date, 3), ..q.clone() });
    quotes.push(OptionQuote { bid: 0.125, ask: 0.25, strike: q.spot * 1.5, ..q.clone() });
    quotes.push(OptionQuote { ask: q.spot + 1.0, ..q });

    write_quotes(std::fs::File::create(&out)?, &quotes)?;
    println!("wrote {} quotes to {out}", quotes.len());
    Ok(())
}

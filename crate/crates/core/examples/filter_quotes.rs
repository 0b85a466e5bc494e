//! Loads an option quote file, applies the standard filters and prints
//! the rejection counts and the moneyness/maturity summary.
//!
//! ```text
//! cargo run --release --example filter_quotes -- [quotes.csv] [dividend yield]
//! ```

use volfeedback::quotes::{apply_filters, load_quotes, summarize_quotes, DividendSource, FilterConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/synthetic_quotes.csv").into());
    let yield_: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.055);

    let quotes = load_quotes(&path)?;
    let cfg = FilterConfig { dividends: DividendSource::AverageYield(yield_), ..FilterConfig::default() };
    let (kept, report) = apply_filters(&quotes, &cfg);
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!();
    println!("{}", summarize_quotes(&kept));
    Ok(())
}

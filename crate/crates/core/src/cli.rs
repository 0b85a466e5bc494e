//! Batch command-line interface.
//!
//! Exit status is 0 on success, 1 on a domain error (the error name is
//! printed first on standard error) and 2 on a usage error. Every output
//! file is written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{
    calibrate, evaluate_out_of_sample, format_table, CalibrationMode, CalibrationResult,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::params::{MarketState, ModelParams};
use crate::pd::{fmt_num, solve_pd_ratio, PdSolution};
use crate::pricer::{price_call, OptionSpec, PriceEstimate};
use crate::quotes::{
    apply_filters, in_date_range, load_quotes, parse_date_range, summarize_quotes, FilterReport,
};
use crate::simulate::{path_statistics, simulate_paths, write_path_csv};

#[derive(Debug, Parser)]
#[command(name = "volfeedback", version, about = "Volatility feedback: price-dividend ratio, simulation, option pricing and calibration")]
struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Override a configuration value, e.g. `--set gamma=3` or `--set grid.b=7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the price-dividend ratio and write it as CSV.
    SolvePd {
        #[command(flatten)]
        common: Common,
        /// Output CSV (default: <output_dir>/pd_ratio.csv).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate physical-measure paths; writes one CSV per path and a JSON summary.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Price European calls listed in a contracts CSV.
    Price {
        #[command(flatten)]
        common: Common,
        /// CSV with columns spot,strike,maturity_years,rate,x0.
        #[arg(long)]
        contracts: PathBuf,
        /// Output CSV (default: <output_dir>/prices.csv).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fit model parameters to option quotes.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Quote CSV (overrides calibration.quotes).
        #[arg(long)]
        quotes: Option<PathBuf>,
        /// In-sample date range, YYYY-MM-DD..YYYY-MM-DD.
        #[arg(long)]
        in_sample: Option<String>,
        /// Out-of-sample date range, YYYY-MM-DD..YYYY-MM-DD.
        #[arg(long)]
        out_sample: Option<String>,
        /// Also fit the gamma = 0 specification.
        #[arg(long)]
        compare_restricted: bool,
    },
    /// Format calibration results and quote summaries as text tables.
    Table {
        /// Calibration JSON files written by `calibrate`.
        #[arg(long = "results", num_args = 1..)]
        results: Vec<PathBuf>,
        /// Quote CSV to summarise by moneyness and maturity.
        #[arg(long)]
        quotes: Option<PathBuf>,
        /// Write the table here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Runs the tool with `argv` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let outcome = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Error::InvalidConfig(format!("thread pool: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::SolvePd { common, out } => solve_pd(&common, out),
        Command::Simulate { common } => simulate(&common),
        Command::Price { common, contracts, out } => price(&common, &contracts, out),
        Command::Calibrate {
            common,
            quotes,
            in_sample,
            out_sample,
            compare_restricted,
        } => calibrate_cmd(&common, quotes, in_sample, out_sample, compare_restricted),
        Command::Table { results, quotes, out } => table(&results, quotes, out),
    }
}

/// Writes through `body` into a temporary file next to `path`, then
/// renames it into place.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        body(&mut f)?;
        f.flush()?;
        f.get_ref().sync_all()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

fn load(common: &Common) -> Result<RunConfig> {
    RunConfig::load(&common.config, &common.overrides)
}

fn solve_pd(common: &Common, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(common)?;
    let sol = solve_pd_ratio(&cfg.model()?, &cfg.grid)?;
    let path = out.unwrap_or_else(|| cfg.output_dir.join("pd_ratio.csv"));
    write_atomic(&path, |w| sol.write_csv(w))?;
    println!(
        "f(0) = {:.6}  nodes = {}  residual = {:.2e}  -> {}",
        sol.f(0.0),
        sol.mesh().len(),
        sol.residual_norm(),
        path.display()
    );
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let sim = cfg.sim_config()?;
    let sol = solve_pd_ratio(&cfg.model()?, &cfg.grid)?;
    let paths = simulate_paths(&sol, &sim)?;
    let width = (paths.paths.len().max(2) - 1).to_string().len();
    for (i, p) in paths.paths.iter().enumerate() {
        let path = cfg.output_dir.join(format!("path_{i:0width$}.csv"));
        write_atomic(&path, |w| write_path_csv(w, &paths.times, p, &sol))?;
    }
    let stats = path_statistics(&paths, &sol)?;
    let path = cfg.output_dir.join("stats.json");
    write_json(&path, &stats)?;
    println!(
        "corr(dx2, dlnP) = {:.4}  corr(dx2, dlnD) = {:.4}  mean x/y = {:.4}  -> {}",
        stats.corr_dx2_dlnp,
        stats.corr_dx2_dlnd,
        stats.mean_vol_ratio,
        cfg.output_dir.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ContractRow {
    spot: f64,
    strike: f64,
    maturity_years: f64,
    rate: f64,
    x0: f64,
}

fn read_contracts(path: &Path) -> Result<Vec<ContractRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::from)?;
    let header = rdr.headers()?.clone();
    for col in ["spot", "strike", "maturity_years", "rate", "x0"] {
        if !header.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.into()));
        }
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn price(common: &Common, contracts: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(common)?;
    let model = cfg.model()?;
    let mc = cfg.mc_config()?;
    solve_pd_ratio(&model, &cfg.grid)?;
    let rows = read_contracts(contracts)?;

    let mut sols: BTreeMap<u64, PdSolution> = BTreeMap::new();
    for row in &rows {
        if let std::collections::btree_map::Entry::Vacant(e) = sols.entry(row.rate.to_bits()) {
            let p = ModelParams { r: row.rate, ..model };
            e.insert(solve_pd_ratio(&p, &cfg.grid)?);
        }
    }
    let estimates: Vec<PriceEstimate> = rows
        .par_iter()
        .map(|row| {
            let p = ModelParams { r: row.rate, ..model };
            let sol = &sols[&row.rate.to_bits()];
            let spec = OptionSpec::new(row.strike, row.maturity_years)?;
            let state = MarketState::new(0.0, row.spot, row.spot / sol.f(row.x0), row.x0)?;
            price_call(&spec, &state, sol, &p, &mc)
        })
        .collect::<Result<_>>()?;

    let path = out.unwrap_or_else(|| cfg.output_dir.join("prices.csv"));
    write_atomic(&path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["spot", "strike", "maturity_years", "rate", "x0", "price", "std_error"])?;
        for (r, e) in rows.iter().zip(&estimates) {
            wr.write_record(
                [r.spot, r.strike, r.maturity_years, r.rate, r.x0, e.price, e.std_error].map(fmt_num),
            )?;
        }
        wr.flush()?;
        Ok(())
    })?;
    println!("priced {} contracts -> {}", rows.len(), path.display());
    Ok(())
}

/// JSON document written by `calibrate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationOutput {
    pub fits: Vec<LabelledFit>,
    pub filter_report: FilterReport,
    pub in_sample: Option<String>,
    pub out_sample: Option<String>,
    pub in_sample_quotes: usize,
    pub out_sample_quotes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelledFit {
    pub label: String,
    pub result: CalibrationResult,
}

fn calibrate_cmd(
    common: &Common,
    quotes: Option<PathBuf>,
    in_sample: Option<String>,
    out_sample: Option<String>,
    compare_restricted: bool,
) -> Result<()> {
    let cfg = load(common)?;
    let start = cfg.model()?;
    let ccfg = cfg.calibration_config()?;
    let path = quotes
        .or_else(|| cfg.calibration.quotes.clone())
        .ok_or_else(|| Error::InvalidConfig("no quote file given (--quotes or calibration.quotes)".into()))?;
    let all = load_quotes(&path)?;
    let (kept, report) = apply_filters(&all, &cfg.filter_config()?);

    let in_range = in_sample.or_else(|| cfg.calibration.in_sample.clone());
    let out_range = out_sample.or_else(|| cfg.calibration.out_sample.clone());
    let select = |r: &Option<String>| -> Result<Vec<_>> {
        match r {
            Some(s) => {
                let (a, b) = parse_date_range(s)?;
                Ok(in_date_range(&kept, a, b))
            }
            None => Ok(Vec::new()),
        }
    };
    let ins = if in_range.is_some() { select(&in_range)? } else { kept.clone() };
    let outs = select(&out_range)?;

    let mut modes = vec![ccfg.mode];
    if compare_restricted && ccfg.mode != CalibrationMode::GammaZero {
        modes.push(CalibrationMode::GammaZero);
    }
    let mut fits = Vec::new();
    for mode in modes {
        let c = crate::calibrate::CalibrationConfig { mode, ..ccfg.clone() };
        let mut res = calibrate(&ins, &start, &c)?;
        evaluate_out_of_sample(&mut res, &outs, &c)?;
        let label = match mode {
            CalibrationMode::Full => "(i) full",
            CalibrationMode::GammaZero => "(ii) gamma=0",
        };
        fits.push(LabelledFit { label: label.into(), result: res });
    }
    let output = CalibrationOutput {
        fits,
        filter_report: report,
        in_sample: in_range,
        out_sample: out_range,
        in_sample_quotes: ins.len(),
        out_sample_quotes: outs.len(),
    };
    let json = cfg.output_dir.join("calibration.json");
    write_json(&json, &output)?;
    let text = render_fits(&output.fits);
    write_atomic(&cfg.output_dir.join("calibration.txt"), |w| {
        w.write_all(text.as_bytes())?;
        Ok(())
    })?;
    print!("{text}");
    Ok(())
}

fn render_fits(fits: &[LabelledFit]) -> String {
    let cols: Vec<(&str, &CalibrationResult)> =
        fits.iter().map(|f| (f.label.as_str(), &f.result)).collect();
    format_table(&cols)
}

fn table(results: &[PathBuf], quotes: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    if results.is_empty() && quotes.is_none() {
        return Err(Error::InvalidConfig("nothing to tabulate: give --results and/or --quotes".into()));
    }
    let mut text = String::new();
    if let Some(q) = quotes {
        text.push_str(&summarize_quotes(&load_quotes(q)?).to_string());
        text.push_str("\n\n");
    }
    let mut fits = Vec::new();
    for r in results {
        let raw = std::fs::read_to_string(r)?;
        let doc: CalibrationOutput = serde_json::from_str(&raw).map_err(|e| Error::ParseError {
            line: e.line(),
            message: format!("{}: {e}", r.display()),
        })?;
        fits.extend(doc.fits);
    }
    if !fits.is_empty() {
        text.push_str(&render_fits(&fits));
    }
    match out {
        Some(p) => write_atomic(&p, |w| {
            w.write_all(text.as_bytes())?;
            Ok(())
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

//! Option quotes: CSV ingestion, exclusion filters and no-arbitrage
//! screens.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trading days per year used to convert maturities.
pub const TRADING_DAYS: f64 = 252.0;

pub const QUOTE_COLUMNS: [&str; 9] = [
    "quote_date",
    "timestamp",
    "spot",
    "strike",
    "expiry_date",
    "bid",
    "ask",
    "tbill_rate",
    "vol_proxy",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub quote_date: NaiveDate,
    pub timestamp: NaiveTime,
    pub spot: f64,
    pub strike: f64,
    pub expiry_date: NaiveDate,
    pub bid: f64,
    pub ask: f64,
    /// Annualised, continuously compounded.
    pub tbill_rate: f64,
    /// Prior close of the volatility index, as a decimal.
    pub vol_proxy: f64,
}

impl OptionQuote {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    /// Weekdays after the quote date up to and including expiry.
    pub fn maturity_days(&self) -> i64 {
        trading_days_between(self.quote_date, self.expiry_date)
    }

    pub fn maturity_years(&self) -> f64 {
        self.maturity_days() as f64 / TRADING_DAYS
    }
}

/// Weekdays in `(from, to]`; negative when `to < from`.
pub fn trading_days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    if to < from {
        return -trading_days_between(to, from);
    }
    let total = (to - from).num_days();
    let weeks = total / 7;
    let mut days = weeks * 5;
    let mut d = from + chrono::Duration::days(weeks * 7);
    while d < to {
        d = d.succ_opt().expect("date in range");
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            days += 1;
        }
    }
    days
}

/// Adds `n` weekdays to `from`.
pub fn add_trading_days(from: NaiveDate, n: u32) -> NaiveDate {
    let mut d = from;
    let mut left = n;
    while left > 0 {
        d = d.succ_opt().expect("date in range");
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            left -= 1;
        }
    }
    d
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

fn parse_time(s: &str) -> std::result::Result<NaiveTime, String> {
    let s = s.trim();
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|e| format!("bad time {s:?}: {e}"))
}

fn parse_num(s: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("bad number for {name}: {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("{name} must be finite"));
    }
    Ok(v)
}

/// Reads quotes from CSV with the header of [`QUOTE_COLUMNS`] (any column
/// order, extra columns ignored).
pub fn read_quotes<R: Read>(input: R) -> Result<Vec<OptionQuote>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(QUOTE_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let perr = |message: String| Error::ParseError { line, message };
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let q = OptionQuote {
            quote_date: parse_date(field(0)).map_err(perr)?,
            timestamp: parse_time(field(1)).map_err(perr)?,
            spot: parse_num(field(2), "spot").map_err(perr)?,
            strike: parse_num(field(3), "strike").map_err(perr)?,
            expiry_date: parse_date(field(4)).map_err(perr)?,
            bid: parse_num(field(5), "bid").map_err(perr)?,
            ask: parse_num(field(6), "ask").map_err(perr)?,
            tbill_rate: parse_num(field(7), "tbill_rate").map_err(perr)?,
            vol_proxy: parse_num(field(8), "vol_proxy").map_err(perr)?,
        };
        if q.bid > q.ask {
            return Err(perr(format!("bid {} exceeds ask {}", q.bid, q.ask)));
        }
        if !(q.vol_proxy > 0.0) {
            return Err(perr(format!("vol_proxy must be positive, got {}", q.vol_proxy)));
        }
        if !(q.spot > 0.0) || q.strike < 0.0 || q.bid < 0.0 {
            return Err(perr("spot must be positive; strike and bid non-negative".into()));
        }
        if q.expiry_date <= q.quote_date {
            return Err(perr("expiry must be after the quote date".into()));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn load_quotes(path: impl AsRef<Path>) -> Result<Vec<OptionQuote>> {
    read_quotes(std::fs::File::open(path)?)
}

pub fn write_quotes<W: Write>(out: W, quotes: &[OptionQuote]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QUOTE_COLUMNS)?;
    for q in quotes {
        w.write_record([
            q.quote_date.to_string(),
            q.timestamp.format("%H:%M:%S").to_string(),
            q.spot.to_string(),
            q.strike.to_string(),
            q.expiry_date.to_string(),
            q.bid.to_string(),
            q.ask.to_string(),
            q.tbill_rate.to_string(),
            q.vol_proxy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Source of the present value of dividends used by the lower-bound
/// screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DividendSource {
    /// `PVDIV = P (1 - e^{-δ̄ τ})`.
    AverageYield(f64),
    /// Realised cash dividends `(payment date, amount)`, discounted at the
    /// quote's rate.
    Realized(Vec<(NaiveDate, f64)>),
}

impl DividendSource {
    pub fn describe(&self) -> String {
        match self {
            Self::AverageYield(d) => format!("average yield {d}"),
            Self::Realized(v) => format!("realized dividends ({} payments)", v.len()),
        }
    }

    pub fn pv(&self, q: &OptionQuote) -> f64 {
        let tau = q.maturity_years();
        match self {
            Self::AverageYield(d) => q.spot * (1.0 - (-d * tau).exp()),
            Self::Realized(v) => v
                .iter()
                .filter(|(d, _)| *d > q.quote_date && *d <= q.expiry_date)
                .map(|(d, a)| {
                    let t = trading_days_between(q.quote_date, *d) as f64 / TRADING_DAYS;
                    a * (-q.tbill_rate * t).exp()
                })
                .sum(),
        }
    }
}

/// Reads a realised-dividend CSV with columns `date,amount`.
pub fn read_dividends<R: Read>(input: R) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (di, ai) = (col("date")?, col("amount")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let perr = |message: String| Error::ParseError { line, message };
        let d = parse_date(rec.get(di).unwrap_or("")).map_err(perr)?;
        let a = parse_num(rec.get(ai).unwrap_or(""), "amount").map_err(perr)?;
        out.push((d, a));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    LateTimestamp,
    ShortMaturity,
    LowPrice,
    LowerBoundViolation,
    UpperBoundViolation,
}

impl FilterRule {
    pub const ALL: [FilterRule; 5] = [
        FilterRule::LateTimestamp,
        FilterRule::ShortMaturity,
        FilterRule::LowPrice,
        FilterRule::LowerBoundViolation,
        FilterRule::UpperBoundViolation,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub cutoff_time: NaiveTime,
    pub min_maturity_days: i64,
    pub min_price: f64,
    pub dividends: DividendSource,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            cutoff_time: NaiveTime::from_hms_opt(15, 0, 0).unwrap(),
            min_maturity_days: 6,
            min_price: 0.375,
            dividends: DividendSource::AverageYield(0.0),
        }
    }
}

impl FilterConfig {
    /// Whether `q` fails `rule`.
    pub fn fails(&self, rule: FilterRule, q: &OptionQuote) -> bool {
        match rule {
            FilterRule::LateTimestamp => q.timestamp > self.cutoff_time,
            FilterRule::ShortMaturity => q.maturity_days() < self.min_maturity_days,
            FilterRule::LowPrice => q.mid() < self.min_price,
            FilterRule::LowerBoundViolation => {
                let pv = self.dividends.pv(q);
                let lb = q.spot - pv - q.strike * (-q.tbill_rate * q.maturity_years()).exp();
                q.bid < lb
            }
            FilterRule::UpperBoundViolation => q.ask > q.spot,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub late_timestamp: usize,
    pub short_maturity: usize,
    pub low_price: usize,
    pub lower_bound_violation: usize,
    pub upper_bound_violation: usize,
    pub retained: usize,
    pub pvdiv_source: String,
}

impl FilterReport {
    pub fn excluded(&self) -> usize {
        self.late_timestamp
            + self.short_maturity
            + self.low_price
            + self.lower_bound_violation
            + self.upper_bound_violation
    }

    fn count(&mut self, rule: FilterRule) {
        match rule {
            FilterRule::LateTimestamp => self.late_timestamp += 1,
            FilterRule::ShortMaturity => self.short_maturity += 1,
            FilterRule::LowPrice => self.low_price += 1,
            FilterRule::LowerBoundViolation => self.lower_bound_violation += 1,
            FilterRule::UpperBoundViolation => self.upper_bound_violation += 1,
        }
    }
}

/// Applies all rules; an excluded quote is counted under the first rule it
/// fails in the order of [`FilterRule::ALL`].
pub fn apply_filters(quotes: &[OptionQuote], cfg: &FilterConfig) -> (Vec<OptionQuote>, FilterReport) {
    apply_filters_in_order(quotes, cfg, &FilterRule::ALL)
}

/// As [`apply_filters`] with an explicit rule order; the retained set does
/// not depend on the order, only the attribution of exclusions does.
pub fn apply_filters_in_order(
    quotes: &[OptionQuote],
    cfg: &FilterConfig,
    order: &[FilterRule],
) -> (Vec<OptionQuote>, FilterReport) {
    let mut report = FilterReport {
        input: quotes.len(),
        pvdiv_source: cfg.dividends.describe(),
        ..FilterReport::default()
    };
    let mut kept = Vec::with_capacity(quotes.len());
    for q in quotes {
        match order.iter().find(|&&r| cfg.fails(r, q)) {
            Some(&rule) => report.count(rule),
            None => kept.push(*q),
        }
    }
    report.retained = kept.len();
    (kept, report)
}

/// Quotes whose date lies in `[from, to]`.
pub fn in_date_range(quotes: &[OptionQuote], from: NaiveDate, to: NaiveDate) -> Vec<OptionQuote> {
    quotes
        .iter()
        .filter(|q| q.quote_date >= from && q.quote_date <= to)
        .copied()
        .collect()
}

/// Parses `YYYY-MM-DD..YYYY-MM-DD`.
pub fn parse_date_range(s: &str) -> Result<(NaiveDate, NaiveDate)> {
    let bad = |m: String| Error::InvalidConfig(format!("date range {s:?}: {m}"));
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| bad("expected FROM..TO".into()))?;
    let from = parse_date(a).map_err(bad)?;
    let to = parse_date(b).map_err(bad)?;
    if to < from {
        return Err(bad("end precedes start".into()));
    }
    Ok((from, to))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketSummary {
    pub count: usize,
    pub mean_mid: f64,
    pub mean_spread: f64,
}

/// Counts and average prices by moneyness (`spot / strike`) and maturity
/// bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuoteSummary {
    pub moneyness_labels: Vec<String>,
    pub maturity_labels: Vec<String>,
    /// `cells[moneyness][maturity]`.
    pub cells: Vec<Vec<BucketSummary>>,
    pub total: usize,
}

pub fn summarize_quotes(quotes: &[OptionQuote]) -> QuoteSummary {
    let m_edges = [0.97, 1.03];
    let m_labels = ["S/K<0.97 (OTM)", "0.97-1.03 (ATM)", "S/K>1.03 (ITM)"];
    let t_edges = [60, 180];
    let t_labels = ["<60 days", "60-180 days", ">180 days"];
    let mut acc = vec![vec![(0usize, 0.0, 0.0); 3]; 3];
    for q in quotes {
        let m = q.spot / q.strike.max(f64::MIN_POSITIVE);
        let i = m_edges.iter().filter(|&&e| m >= e).count();
        let d = q.maturity_days();
        let j = t_edges.iter().filter(|&&e| d >= e).count();
        let c = &mut acc[i][j];
        c.0 += 1;
        c.1 += q.mid();
        c.2 += q.ask - q.bid;
    }
    let cells = acc
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(n, s, sp)| BucketSummary {
                    count: n,
                    mean_mid: if n > 0 { s / n as f64 } else { f64::NAN },
                    mean_spread: if n > 0 { sp / n as f64 } else { f64::NAN },
                })
                .collect()
        })
        .collect();
    QuoteSummary {
        moneyness_labels: m_labels.iter().map(|s| s.to_string()).collect(),
        maturity_labels: t_labels.iter().map(|s| s.to_string()).collect(),
        cells,
        total: quotes.len(),
    }
}

impl std::fmt::Display for QuoteSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<18}", "")?;
        for l in &self.maturity_labels {
            write!(f, "{l:>16}")?;
        }
        writeln!(f)?;
        for (label, row) in self.moneyness_labels.iter().zip(&self.cells) {
            write!(f, "{label:<18}")?;
            for c in row {
                if c.count == 0 {
                    write!(f, "{:>16}", "-")?;
                } else {
                    write!(f, "{:>16}", format!("{:.3} ({})", c.mean_mid, c.count))?;
                }
            }
            writeln!(f)?;
        }
        write!(f, "total quotes: {}", self.total)
    }
}

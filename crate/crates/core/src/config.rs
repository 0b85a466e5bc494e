//! Run configuration for the command-line tool.
//!
//! A TOML file with optional sections `[model]`, `[grid]`, `[sim]`, `[mc]`
//! and `[calibration]`, plus top-level `seed` and `output_dir`. Model keys
//! may also appear at the top level. `key=value` overrides address
//! `section.key` (bare model keys and `seed`/`output_dir` need no section).

use std::path::{Path, PathBuf};

use chrono::NaiveTime;
use serde::Deserialize;

use crate::calibrate::{CalibrationConfig, CalibrationMode};
use crate::error::{Error, Result};
use crate::nelder_mead::NelderMeadOptions;
use crate::params::{ModelParams, PARAM_KEYS};
use crate::pd::PdGridConfig;
use crate::pricer::McConfig;
use crate::quotes::{read_dividends, DividendSource, FilterConfig};
use crate::simulate::SimConfig;

const SECTIONS: [&str; 5] = ["model", "grid", "sim", "mc", "calibration"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Average dividend growth rate; defaults to `model.alpha`.
    pub alpha_bar: Option<f64>,
    pub mode: CalibrationMode,
    pub quotes: Option<PathBuf>,
    /// Realised dividends (`date,amount`) for the lower-bound screen.
    pub dividends: Option<PathBuf>,
    /// Average dividend yield for the lower-bound screen when no realised
    /// dividends are given.
    pub dividend_yield: f64,
    pub in_sample: Option<String>,
    pub out_sample: Option<String>,
    pub cutoff_time: String,
    pub min_maturity_days: i64,
    pub min_price: f64,
    pub restart: bool,
    pub restart_step: f64,
    pub standard_errors: bool,
    pub strict: bool,
    pub optimizer: NelderMeadOptions,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let c = CalibrationConfig::default();
        Self {
            alpha_bar: None,
            mode: c.mode,
            quotes: None,
            dividends: None,
            dividend_yield: 0.0,
            in_sample: None,
            out_sample: None,
            cutoff_time: "15:00:00".into(),
            min_maturity_days: 6,
            min_price: 0.375,
            restart: c.restart,
            restart_step: c.restart_step,
            standard_errors: c.standard_errors,
            strict: c.strict,
            optimizer: c.optimizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelParams>,
    pub grid: PdGridConfig,
    pub sim: SimConfig,
    pub mc: McConfig,
    pub calibration: CalibrationSection,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| invalid(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    let value = parse_override_value(value.trim());
    let path: Vec<&str> = match key.split_once('.') {
        Some(_) => key.split('.').collect(),
        None if PARAM_KEYS.contains(&key) => vec!["model", key],
        None if key == "seed" || key == "output_dir" => vec![key],
        None => return Err(invalid(format!("unknown override key {key:?}"))),
    };
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| invalid(format!("{key:?}: {part} is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &mut toml::Table, name: &str) -> Result<T> {
    match table.remove(name) {
        None => Ok(T::default()),
        Some(v) => v.try_into().map_err(|e| invalid(format!("[{name}]: {e}"))),
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, overrides)
    }

    pub fn parse(text: &str, base: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| invalid(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }

        // Model keys may sit at the top level.
        let mut top_model = toml::Table::new();
        for k in PARAM_KEYS {
            if let Some(v) = table.remove(k) {
                top_model.insert(k.to_string(), v);
            }
        }
        let model_table = match (table.remove("model"), top_model.is_empty()) {
            (Some(_), false) => return Err(invalid("model keys given both at top level and in [model]")),
            (Some(toml::Value::Table(m)), true) => Some(m),
            (Some(_), true) => return Err(invalid("[model] must be a table")),
            (None, false) => Some(top_model),
            (None, true) => None,
        };
        let model: Option<ModelParams> = model_table
            .map(|m| toml::Value::Table(m).try_into())
            .transpose()
            .map_err(|e| invalid(format!("[model]: {e}")))?;

        let grid: PdGridConfig = section(&mut table, "grid")?;
        let sim: SimConfig = section(&mut table, "sim")?;
        let mc: McConfig = section(&mut table, "mc")?;
        let mut calibration: CalibrationSection = section(&mut table, "calibration")?;
        let seed = match table.remove("seed") {
            None => None,
            Some(toml::Value::Integer(s)) if s >= 0 => Some(s as u64),
            Some(v) => return Err(invalid(format!("seed must be a non-negative integer, got {v}"))),
        };
        let output_dir = match table.remove("output_dir") {
            None => PathBuf::from("."),
            Some(toml::Value::String(s)) => base.join(s),
            Some(v) => return Err(invalid(format!("output_dir must be a string, got {v}"))),
        };
        if let Some(k) = table.keys().next() {
            return Err(invalid(format!(
                "unknown key {k:?} (sections: {})",
                SECTIONS.join(", ")
            )));
        }
        for p in [&mut calibration.quotes, &mut calibration.dividends].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.exists() {
                return Err(invalid(format!("referenced file {} does not exist", p.display())));
            }
        }

        grid.validate()?;
        let cfg = Self {
            model: model.map(|m| m.validate()).transpose()?,
            grid,
            sim,
            mc,
            calibration,
            seed,
            output_dir,
        };
        Ok(cfg)
    }

    pub fn model(&self) -> Result<ModelParams> {
        self.model.ok_or_else(|| invalid("missing [model] section"))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| invalid("a seed is required for stochastic runs"))
    }

    /// Simulation settings with the run seed applied.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let c = SimConfig { seed: self.require_seed()?, ..self.sim };
        c.validate()?;
        Ok(c)
    }

    /// Monte Carlo settings with the run seed applied.
    pub fn mc_config(&self) -> Result<McConfig> {
        let c = McConfig { seed: self.require_seed()?, ..self.mc };
        c.validate()?;
        Ok(c)
    }

    pub fn calibration_config(&self) -> Result<CalibrationConfig> {
        let c = &self.calibration;
        let alpha_bar = match c.alpha_bar {
            Some(a) => a,
            None => self.model()?.alpha,
        };
        Ok(CalibrationConfig {
            mode: c.mode,
            alpha_bar,
            mc: self.mc_config()?,
            grid: self.grid,
            optimizer: c.optimizer,
            restart: c.restart,
            restart_step: c.restart_step,
            standard_errors: c.standard_errors,
            strict: c.strict,
        })
    }

    pub fn filter_config(&self) -> Result<FilterConfig> {
        let c = &self.calibration;
        let cutoff_time = NaiveTime::parse_from_str(&c.cutoff_time, "%H:%M:%S")
            .or_else(|_| NaiveTime::parse_from_str(&c.cutoff_time, "%H:%M"))
            .map_err(|e| invalid(format!("cutoff_time {:?}: {e}", c.cutoff_time)))?;
        let dividends = match &c.dividends {
            Some(p) => DividendSource::Realized(read_dividends(std::fs::File::open(p)?)?),
            None => DividendSource::AverageYield(c.dividend_yield),
        };
        Ok(FilterConfig {
            cutoff_time,
            min_maturity_days: c.min_maturity_days,
            min_price: c.min_price,
            dividends,
        })
    }
}

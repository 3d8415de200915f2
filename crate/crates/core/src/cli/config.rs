//! Run configuration: command-line flags merged over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::model::{calibrate, ModelError, ModelParams, PayoffSpec};
use crate::pwl::PwlParts;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Costs,
    Frictionless,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Costs => "costs",
            Mode::Frictionless => "frictionless",
        }
    }

    pub fn default_block_levels(self) -> usize {
        match self {
            Mode::Costs => 5,
            Mode::Frictionless => 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffKind {
    Put,
    Call,
    Bullspread,
    Custom,
}

impl PayoffKind {
    pub fn name(self) -> &'static str {
        match self {
            PayoffKind::Put => "put",
            PayoffKind::Call => "call",
            PayoffKind::Bullspread => "bullspread",
            PayoffKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Pricing mode.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub payoff: Option<PayoffKind>,
    /// Strike; the lower strike of a bull spread.
    #[arg(long)]
    pub strike: Option<f64>,
    /// Upper strike of a bull spread.
    #[arg(long)]
    pub strike2: Option<f64>,
    /// Initial stock price.
    #[arg(long)]
    pub spot: Option<f64>,
    /// Annual volatility.
    #[arg(long)]
    pub vol: Option<f64>,
    /// Continuously compounded annual interest rate.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Expiry in years.
    #[arg(long)]
    pub expiry: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Proportional transaction cost rate.
    #[arg(long)]
    pub cost_rate: Option<f64>,
    /// Worker threads (default: available hardware parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Maximum tree levels per round (default: 5 with costs, 50 without).
    #[arg(long)]
    pub block_levels: Option<usize>,
    #[arg(long)]
    pub sweep_from: Option<f64>,
    #[arg(long)]
    pub sweep_to: Option<f64>,
    #[arg(long)]
    pub sweep_step: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub cost_rates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub steps_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub threads_list: Option<Vec<usize>>,
    /// Timed runs per benchmark point; the median is reported.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_enum)]
    pub output: Option<Output>,
    /// JSON file with any of the settings above in snake_case.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub payoff: Option<PayoffKind>,
    pub strike: Option<f64>,
    pub strike2: Option<f64>,
    pub s0: Option<f64>,
    pub sigma: Option<f64>,
    pub rate: Option<f64>,
    pub expiry: Option<f64>,
    pub steps: Option<usize>,
    pub cost_rate: Option<f64>,
    pub threads: Option<usize>,
    pub block_levels: Option<usize>,
    pub output: Option<Output>,
    pub sweep_from: Option<f64>,
    pub sweep_to: Option<f64>,
    pub sweep_step: Option<f64>,
    pub cost_rates: Option<Vec<f64>>,
    pub steps_list: Option<Vec<usize>>,
    pub threads_list: Option<Vec<usize>>,
    pub repeats: Option<usize>,
    /// Cash payoff as a piecewise-linear function of the stock price.
    pub custom_payoff: Option<PwlParts>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub payoff_kind: PayoffKind,
    pub payoff: PayoffSpec,
    pub s0: f64,
    pub sigma: f64,
    pub rate: f64,
    pub expiry: f64,
    pub steps: usize,
    pub cost_rate: f64,
    pub threads: usize,
    pub block_levels: usize,
    pub output: Output,
    pub sweep_from: f64,
    pub sweep_to: f64,
    pub sweep_step: f64,
    pub cost_rates: Vec<f64>,
    pub steps_list: Vec<usize>,
    pub threads_list: Vec<usize>,
    pub repeats: usize,
}

pub fn hardware_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    /// Flags win over the file, the file wins over defaults.
    pub fn resolve(flags: &Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Self::merge(flags, file)
    }

    pub fn merge(flags: &Flags, file: ConfigFile) -> Result<Self, ConfigError> {
        macro_rules! pick {
            ($flag:ident, $field:ident, $default:expr) => {
                flags.$flag.clone().or(file.$field.clone()).unwrap_or_else(|| $default)
            };
        }
        let mode = pick!(mode, mode, Mode::Costs);
        let payoff_kind = pick!(payoff, payoff, PayoffKind::Put);
        let strike = pick!(strike, strike, 100.0);
        let payoff = match payoff_kind {
            PayoffKind::Put => PayoffSpec::put(strike),
            PayoffKind::Call => PayoffSpec::call(strike),
            PayoffKind::Bullspread => match flags.strike2.or(file.strike2) {
                Some(upper) => PayoffSpec::bull_spread(strike, upper)?,
                None => return invalid("bullspread needs --strike2"),
            },
            PayoffKind::Custom => match file.custom_payoff.clone() {
                Some(parts) => PayoffSpec::custom(
                    parts
                        .canonicalize()
                        .map_err(|e| ConfigError::Invalid(format!("custom_payoff: {e}")))?,
                ),
                None => return invalid("custom payoff needs custom_payoff in the config file"),
            },
        };
        payoff.validate()?;

        let cfg = RunConfig {
            mode,
            payoff_kind,
            payoff,
            s0: pick!(spot, s0, 100.0),
            sigma: pick!(vol, sigma, 0.2),
            rate: pick!(rate, rate, 0.1),
            expiry: pick!(expiry, expiry, 0.25),
            steps: pick!(steps, steps, 1000),
            cost_rate: pick!(cost_rate, cost_rate, 0.005),
            threads: pick!(threads, threads, hardware_threads()),
            block_levels: pick!(block_levels, block_levels, mode.default_block_levels()),
            output: pick!(output, output, Output::Csv),
            sweep_from: pick!(sweep_from, sweep_from, 90.0),
            sweep_to: pick!(sweep_to, sweep_to, 110.0),
            sweep_step: pick!(sweep_step, sweep_step, 1.0),
            cost_rates: pick!(cost_rates, cost_rates, vec![0.0, 0.0025, 0.005]),
            steps_list: pick!(steps_list, steps_list, vec![1200, 1350, 1500]),
            threads_list: pick!(threads_list, threads_list, vec![1, 2, 4, 8]),
            repeats: pick!(repeats, repeats, 3),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.model()?;
        if self.threads == 0 {
            return invalid("threads must be at least 1");
        }
        if self.block_levels == 0 {
            return invalid("block_levels must be at least 1");
        }
        if !(self.sweep_step > 0.0 && self.sweep_step.is_finite()) {
            return invalid("sweep_step must be positive");
        }
        if !(self.sweep_from.is_finite() && self.sweep_to.is_finite() && self.sweep_from <= self.sweep_to) {
            return invalid("sweep_from must not exceed sweep_to");
        }
        if self.cost_rates.is_empty() || self.steps_list.is_empty() || self.threads_list.is_empty() {
            return invalid("list settings must not be empty");
        }
        if let Some(k) = self.cost_rates.iter().find(|k| !(0.0..1.0).contains(*k)) {
            return invalid(format!("cost rate {k} outside [0, 1)"));
        }
        if self.steps_list.contains(&0) {
            return invalid("steps_list entries must be at least 1");
        }
        if self.threads_list.contains(&0) {
            return invalid("threads_list entries must be at least 1");
        }
        if self.repeats == 0 {
            return invalid("repeats must be at least 1");
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelParams, ModelError> {
        self.model_with(self.s0, self.steps, self.cost_rate)
    }

    pub fn model_with(&self, s0: f64, steps: usize, cost_rate: f64) -> Result<ModelParams, ModelError> {
        calibrate(s0, self.sigma, self.rate, self.expiry, steps, cost_rate)
    }

    /// Initial prices of the sweep, `from + i * step` up to `to`.
    pub fn sweep(&self) -> Vec<f64> {
        let span = (self.sweep_to - self.sweep_from) / self.sweep_step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.sweep_from + i as f64 * self.sweep_step).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> ConfigFile {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn defaults_follow_the_mode() {
        let cfg = RunConfig::merge(&Flags::default(), ConfigFile::default()).unwrap();
        assert_eq!(cfg.block_levels, 5);
        assert_eq!(cfg.payoff, PayoffSpec::put(100.0));
        let flags = Flags {
            mode: Some(Mode::Frictionless),
            ..Flags::default()
        };
        assert_eq!(RunConfig::merge(&flags, ConfigFile::default()).unwrap().block_levels, 50);
    }

    #[test]
    fn flags_win_over_file() {
        let file = parse(r#"{"steps": 40, "s0": 95.0, "cost_rate": 0.01}"#);
        let flags = Flags {
            steps: Some(80),
            ..Flags::default()
        };
        let cfg = RunConfig::merge(&flags, file).unwrap();
        assert_eq!((cfg.steps, cfg.s0, cfg.cost_rate), (80, 95.0, 0.01));
    }

    #[test]
    fn custom_payoff_from_file() {
        let file = parse(
            r#"{"payoff": "custom", "custom_payoff":
                {"anchor_y": 100.0, "anchor_value": 0.0, "breakpoints": [100.0], "slopes": [0.0, 1.0]}}"#,
        );
        let cfg = RunConfig::merge(&Flags::default(), file).unwrap();
        assert_eq!(cfg.payoff.exercise_value(110.0), 10.0);
        assert_eq!(cfg.payoff.exercise_value(90.0), 0.0);
    }

    #[test]
    fn rejects_bad_settings() {
        let unknown: Result<ConfigFile, _> = serde_json::from_str(r#"{"stepz": 3}"#);
        assert!(unknown.is_err());
        let bad = [
            Flags { payoff: Some(PayoffKind::Bullspread), ..Flags::default() },
            Flags { payoff: Some(PayoffKind::Custom), ..Flags::default() },
            Flags { threads: Some(0), ..Flags::default() },
            Flags { sweep_step: Some(0.0), ..Flags::default() },
            Flags { vol: Some(-0.2), ..Flags::default() },
            Flags { cost_rates: Some(vec![]), ..Flags::default() },
            Flags { strike: Some(105.0), strike2: Some(95.0), payoff: Some(PayoffKind::Bullspread), ..Flags::default() },
        ];
        for flags in bad {
            assert!(RunConfig::merge(&flags, ConfigFile::default()).is_err(), "{flags:?}");
        }
    }

    #[test]
    fn sweep_includes_both_ends() {
        let flags = Flags {
            sweep_from: Some(90.0),
            sweep_to: Some(110.0),
            sweep_step: Some(0.1),
            ..Flags::default()
        };
        let s = RunConfig::merge(&flags, ConfigFile::default()).unwrap().sweep();
        assert_eq!(s.len(), 201);
        assert_eq!(s[0], 90.0);
        assert!((s[200] - 110.0).abs() < 1e-9);
    }
}

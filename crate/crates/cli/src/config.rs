//! Flat `key=value` run configuration shared by flags and config files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Generate,
    Weyl,
    Discrepancy,
    Covariance,
    Wcud,
    Degenerate,
    Gamma,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Generate,
        Command::Weyl,
        Command::Discrepancy,
        Command::Covariance,
        Command::Wcud,
        Command::Degenerate,
        Command::Gamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Weyl => "weyl",
            Command::Discrepancy => "discrepancy",
            Command::Covariance => "covariance",
            Command::Wcud => "wcud",
            Command::Degenerate => "degenerate",
            Command::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command {s:?}")))
    }
}

/// Every recognised key with its help text. Flags use the same spelling
/// with a `--` prefix.
pub const KEYS: &[(&str, &str)] = &[
    ("family", "generator family: weyl, multiplicative, factorial, self-power, linear, koksma"),
    ("p", "exponent of the Weyl-power family"),
    ("M", "base of the multiplicative family"),
    ("hi", "upper end of the Koksma seed interval (1, hi), integer or a/b [default: 2]"),
    ("coefficients", "comma-separated coefficients a_k of the linear family"),
    ("coefficients-file", "file with one coefficient per line for the linear family"),
    ("permutation", "reindexing: comma-separated indices, or START:STRIDE"),
    ("d", "dimension of the points [default: 1]"),
    ("h", "sliding window step [default: 1]"),
    ("o", "offset into the stream [default: 0]"),
    ("construction", "sliding or interleaved [default: sliding]"),
    ("N", "number of points (largest checkpoint)"),
    ("m-radius", "scan all m with sup norm up to this radius [default: 2]"),
    ("H", "truncation of the Erdos-Turan-Koksma bound [default: 4]"),
    ("n-seeds", "Monte Carlo seeds [default: 256]"),
    ("seed-bits", "bit length of the random prime denominators [default: 256]"),
    ("rng-seed", "master rng seed [default: 0]"),
    ("seed", "explicit seed(s) p/q, comma-separated"),
    ("m", "frequency vector, comma-separated integers"),
    ("test", "covariance test: certificate, moment, lemma2, lemma3, del"),
    ("k", "first index of a moment"),
    ("l", "second index of a cross moment"),
    ("lags", "comma-separated lags for the decay fit [default: 1,2,4,8,16,32]"),
    ("k-plus-l", "fixed k + l for the decay fit"),
    ("max-lag", "largest lag searched for c(m) [default: 50]"),
    ("pairs", "number of far pairs sampled [default: 32]"),
    ("count", "number of uniforms [default: 8]"),
    ("bits", "bits per uniform, at most 53 [default: 32]"),
    ("bit-file", "raw bytes used as the bit source, most significant bit first"),
    ("flag-threshold", "flag m whose final |W_N| reaches this value [default: 0.5]"),
    ("precision-cap", "largest fixed-point precision in bits [default: 20096]"),
    ("threads", "worker threads [default: available parallelism]"),
    ("output", "report path, or - for stdout"),
    ("save-config", "also write the effective configuration to this file"),
    ("format", "json or csv [default: json]"),
];

/// A command plus its parameters as text. Values are parsed and validated
/// later, per command, so the representation round-trips exactly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub values: BTreeMap<String, String>,
}

fn check_key(key: &str) -> CliResult<()> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown key {key:?}")))
    }
}

fn check_value(key: &str, value: &str) -> CliResult<()> {
    if value.is_empty() || value.trim() != value || value.contains(['\n', '\r']) {
        return Err(CliError::Config(format!(
            "{key}: value {value:?} must be non-empty, single-line and unpadded"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if key == "command" {
            self.command = Some(value.parse()?);
            return Ok(());
        }
        check_key(key)?;
        check_value(key, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {line:?}", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    /// Canonical file form: `command` first, then keys in sorted order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if let Some(c) = self.command {
            out.push_str(&format!("command={c}\n"));
        }
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// `self` with every key of `overrides` replacing ours.
    pub fn merged(mut self, overrides: RunConfig) -> CliResult<Self> {
        match (self.command, overrides.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!(
                    "config file is for command {a:?} but {b} was requested",
                    a = a.as_str()
                )))
            }
            (_, Some(b)) => self.command = Some(b),
            _ => {}
        }
        self.values.extend(overrides.values);
        Ok(self)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.iter().any(|(k, _)| *k == key), "undeclared key {key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("--{key} is required for this command")))
    }

    fn parse_as<T: FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("--{key}: expected {what}, got {v:?}")))
            })
            .transpose()
    }

    /// Integer `>= 1`.
    pub fn positive(&self, key: &str, default: u64) -> CliResult<u64> {
        let v = self.parse_as::<u64>(key, "a positive integer")?.unwrap_or(default);
        if v == 0 {
            return Err(CliError::Config(format!("--{key} must be positive, got 0")));
        }
        Ok(v)
    }

    pub fn positive_usize(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.positive(key, default as u64)? as usize)
    }

    /// Integer `>= 0`.
    pub fn non_negative(&self, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.parse_as::<u64>(key, "a non-negative integer")?.unwrap_or(default))
    }

    pub fn positive_f64(&self, key: &str, default: f64) -> CliResult<f64> {
        let v = self.parse_as::<f64>(key, "a positive number")?.unwrap_or(default);
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Config(format!("--{key} must be a positive number, got {v}")));
        }
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str, what: &str) -> CliResult<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<T>().map_err(|_| {
                            CliError::Config(format!("--{key}: expected a comma-separated list of {what}, got {v:?}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

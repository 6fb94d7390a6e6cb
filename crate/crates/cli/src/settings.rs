//! Merging of config-file and command-line values, and typed access that
//! records the canonical form of every value it reads.

use std::collections::BTreeMap;

use crate::config::{format_list, parse_list, Entry};
use crate::error::{CliError, Result};
use crate::output::num;

/// Where a raw value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Flag,
    File { path: String, line: usize },
}

impl Origin {
    fn describe(&self, key: &str) -> String {
        match self {
            Origin::Flag => format!("--{key}"),
            Origin::File { path, line } => format!("`{key}` ({path}, line {line})"),
        }
    }
}

/// Raw values of one run, consumed by the typed getters.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Origin)>,
    canonical: Vec<(&'static str, String)>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds entries read from a file; later calls to [`Settings::set_flag`]
    /// override them.
    pub fn add_file_entries(&mut self, path: &str, entries: Vec<Entry>) {
        for e in entries {
            self.values.insert(e.key, (e.value, Origin::File { path: path.to_string(), line: e.line }));
        }
    }

    /// Sets a value given on the command line. `--eta` and `--delta` replace
    /// each other so that a flag can override the other one from a file.
    pub fn set_flag(&mut self, key: &str, value: String) {
        match key {
            "eta" => {
                self.values.remove("delta");
            }
            "delta" => {
                self.values.remove("eta");
            }
            _ => {}
        }
        self.values.insert(key.to_string(), (value, Origin::Flag));
    }

    /// Removes a value that is not part of the recorded configuration.
    pub fn take_raw(&mut self, key: &str) -> Option<(String, Origin)> {
        self.values.remove(key)
    }

    fn take(&mut self, key: &'static str) -> Option<(String, Origin)> {
        self.values.remove(key)
    }

    fn record(&mut self, key: &'static str, value: String) {
        self.canonical.push((key, value));
    }

    fn parse_f64(key: &str, text: &str, origin: &Origin) -> Result<f64> {
        match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::usage(format!("{} must be a finite number, got `{text}`", origin.describe(key)))),
        }
    }

    pub fn f64_opt(&mut self, key: &'static str) -> Result<Option<f64>> {
        let Some((text, origin)) = self.take(key) else {
            return Ok(None);
        };
        let v = Self::parse_f64(key, &text, &origin)?;
        self.record(key, num(v));
        Ok(Some(v))
    }

    pub fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        match self.f64_opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, num(default));
                Ok(default)
            }
        }
    }

    /// A number that must satisfy `check`; `rule` names the constraint.
    pub fn f64_checked(&mut self, key: &'static str, default: f64, rule: &str, check: impl Fn(f64) -> bool) -> Result<f64> {
        let v = self.f64(key, default)?;
        if !check(v) {
            return Err(CliError::usage(format!("{key} {rule}, got {v}")));
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.f64_checked(key, default, "must be positive", |v| v > 0.0)
    }

    pub fn list(&mut self, key: &'static str, default: &str) -> Result<Vec<f64>> {
        let (text, origin) = self.take(key).unwrap_or((default.to_string(), Origin::Flag));
        let values =
            parse_list(&text).map_err(|e| CliError::usage(format!("{}: {e}", origin.describe(key))))?;
        self.record(key, format_list(&values));
        Ok(values)
    }

    pub fn count(&mut self, key: &'static str, default: usize) -> Result<usize> {
        let (text, origin) = self.take(key).unwrap_or((default.to_string(), Origin::Flag));
        let v: usize = text
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{} must be a non-negative integer, got `{text}`", origin.describe(key))))?;
        self.record(key, v.to_string());
        Ok(v)
    }

    /// The run seed; stochastic commands cannot run without one.
    pub fn seed(&mut self, command: &str) -> Result<u64> {
        let (text, origin) =
            self.take("seed").ok_or_else(|| CliError::usage(format!("{command} needs --seed")))?;
        let v: u64 = text
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{} must be an unsigned integer, got `{text}`", origin.describe("seed"))))?;
        self.record("seed", v.to_string());
        Ok(v)
    }

    pub fn choice(&mut self, key: &'static str, default: &'static str, options: &[&'static str]) -> Result<&'static str> {
        let (text, origin) = self.take(key).unwrap_or((default.to_string(), Origin::Flag));
        let value = options.iter().copied().find(|o| *o == text.trim()).ok_or_else(|| {
            CliError::usage(format!("{} must be one of {}, got `{text}`", origin.describe(key), options.join(", ")))
        })?;
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn flag(&mut self, key: &'static str) -> Result<bool> {
        let on = self.choice(key, "false", &["true", "false"])? == "true";
        Ok(on)
    }

    fn efficiency_raw(&mut self) -> Result<Option<(&'static str, String, Origin)>> {
        match (self.take("eta"), self.take("delta")) {
            (Some((_, a)), Some((_, b))) => Err(CliError::usage(format!(
                "{} and {} are mutually exclusive",
                a.describe("eta"),
                b.describe("delta")
            ))),
            (Some((t, o)), None) => Ok(Some(("eta", t, o))),
            (None, Some((t, o))) => Ok(Some(("delta", t, o))),
            (None, None) => Ok(None),
        }
    }

    /// Values of `eta` or `delta`, whichever was given, with a flag that is
    /// set for `eta`. Defaults to `delta = 0`.
    fn efficiency_values(&mut self) -> Result<(bool, Vec<f64>)> {
        let Some((key, text, origin)) = self.efficiency_raw()? else {
            self.record("delta", "0".into());
            return Ok((false, vec![0.0]));
        };
        let values = parse_list(&text).map_err(|e| CliError::usage(format!("{}: {e}", origin.describe(key))))?;
        let is_eta = key == "eta";
        let valid = |v: f64| if is_eta { v > 0.0 && v <= 1.0 } else { (0.0..1.0).contains(&v) };
        if let Some(bad) = values.iter().find(|&&v| !valid(v)) {
            let range = if is_eta { "(0, 1]" } else { "[0, 1)" };
            return Err(CliError::usage(format!("{key} must lie in {range}, got {bad}")));
        }
        self.record(key, format_list(&values));
        Ok((is_eta, values))
    }

    /// Detector inefficiencies `δ`, given either as `delta` or as `eta`
    /// with `δ = 1 − η`.
    pub fn inefficiencies(&mut self) -> Result<Vec<f64>> {
        let (is_eta, values) = self.efficiency_values()?;
        Ok(if is_eta { values.into_iter().map(|v| 1.0 - v).collect() } else { values })
    }

    /// A single detector efficiency, returned as `(η, δ)`.
    pub fn efficiency(&mut self) -> Result<(f64, f64)> {
        match self.efficiency_values()? {
            (true, v) if v.len() == 1 => Ok((v[0], 1.0 - v[0])),
            (false, v) if v.len() == 1 => Ok((1.0 - v[0], v[0])),
            (_, v) => Err(CliError::usage(format!("expected a single eta or delta, got {} values", v.len()))),
        }
    }

    /// Fails on any value no getter consumed, then returns the canonical
    /// configuration in reading order.
    pub fn finish(self, command: &str) -> Result<Vec<(&'static str, String)>> {
        if let Some((key, (_, origin))) = self.values.iter().next() {
            return Err(CliError::usage(format!("unknown key {} for {command}", origin.describe(key))));
        }
        Ok(self.canonical)
    }
}

//! Plain-text `key = value` configuration files and flag/file merging.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys use the long flag spelling without dashes prefix
/// (`delta-lambda`, `u-max`, ...). Underscores are accepted as dashes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value, got {line:?}",
                lineno + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Resolves parameters flag-first, then config file, then default, and
/// remembers every resolved value for the output header.
pub struct Resolver<'a> {
    file: &'a BTreeMap<String, String>,
    pub resolved: Vec<(String, String)>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a BTreeMap<String, String>) -> Self {
        Self {
            file,
            resolved: Vec::new(),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s
                    .parse()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))?,
                None => default.ok_or_else(|| {
                    CliError::Usage(format!("missing required parameter --{key}"))
                })?,
            },
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Like [`Resolver::get`] for an `f64` that must be finite.
    pub fn finite(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Result<f64, CliError> {
        let v = self.get(key, flag, default)?;
        if !v.is_finite() {
            return Err(CliError::Usage(format!("--{key} must be finite")));
        }
        Ok(v)
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        if flag.is_none() && !self.file.contains_key(key) {
            return Ok(None);
        }
        self.get(key, flag, None).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let m = parse_config("# header\n\ndelta_lambda = 0.3\n nbar=1.5 \n").unwrap();
        assert_eq!(m["delta-lambda"], "0.3");
        assert_eq!(m["nbar"], "1.5");
        assert!(parse_config("oops").is_err());
    }

    #[test]
    fn flags_override_file() {
        let m = parse_config("nbar = 2\nu-max = 10").unwrap();
        let mut r = Resolver::new(&m);
        assert_eq!(r.get::<f64>("nbar", Some(3.0), None).unwrap(), 3.0);
        assert_eq!(r.get::<f64>("u-max", None, Some(40.0)).unwrap(), 10.0);
        assert_eq!(r.get::<usize>("u-points", None, Some(400)).unwrap(), 400);
        assert!(r.get::<f64>("delta-lambda", None, None).is_err());
        assert_eq!(r.resolved.len(), 3);
    }
}

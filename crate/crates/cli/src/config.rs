use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::failure::{usage, Failure};

/// Long-flag names that may also appear as keys in a config file.
pub const KEYS: &[&str] = &[
    "d", "c", "a", "eps", "beta", "n", "burn-in", "trunc", "seed", "replicates", "trim", "threads", "out", "case",
    "input", "free", "max-lag", "points",
];

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(usage(format!("config line {}: unknown key `{k}`", i + 1)));
        }
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Merges command-line values over config-file values and records every
/// value actually used.
pub struct Resolver {
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(flags: BTreeMap<String, String>, file: BTreeMap<String, String>) -> Self {
        Self {
            flags,
            file,
            used: BTreeMap::new(),
        }
    }

    fn raw(&self, key: &str) -> Option<&String> {
        self.flags.get(key).or_else(|| self.file.get(key))
    }

    fn parse<T: FromStr>(key: &str, s: &str) -> Result<T, Failure> {
        s.trim()
            .parse()
            .map_err(|_| usage(format!("--{key}: cannot parse `{s}`")))
    }

    pub fn opt<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, Failure> {
        match self.raw(key).cloned() {
            Some(s) => {
                let v: T = Self::parse(key, &s)?;
                self.used.insert(key.to_string(), v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, Failure> {
        match self.opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.used.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn list<T: FromStr + Display + Clone>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, Failure> {
        let values: Vec<T> = match self.raw(key).cloned() {
            Some(s) => s
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| Self::parse(key, p))
                .collect::<Result<_, _>>()?,
            None => default.to_vec(),
        };
        if values.is_empty() {
            return Err(usage(format!("--{key}: empty list")));
        }
        let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
        self.used.insert(key.to_string(), joined.join(","));
        Ok(values)
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.used.insert(key.to_string(), value.to_string());
    }

    pub fn used(&self) -> &BTreeMap<String, String> {
        &self.used
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let m = parse_config("# run\nd = 0.2\n\n  seed=7  \n").unwrap();
        assert_eq!(m["d"], "0.2");
        assert_eq!(m["seed"], "7");
        assert_eq!(parse_config("bogus = 1").unwrap_err().code, 1);
        assert_eq!(parse_config("d 0.2").unwrap_err().code, 1);
    }

    #[test]
    fn flags_override_file() {
        let flags = BTreeMap::from([("d".to_string(), "0.3".to_string())]);
        let file = parse_config("d = 0.1\nc = 0.2\n").unwrap();
        let mut r = Resolver::new(flags, file);
        assert_eq!(r.get("d", 0.0).unwrap(), 0.3);
        assert_eq!(r.get("c", 0.0).unwrap(), 0.2);
        assert_eq!(r.get("a", 1.5).unwrap(), 1.5);
        assert_eq!(r.used()["a"], "1.5");
        assert!(r.get::<f64>("n", 1.0).is_ok());
    }

    #[test]
    fn lists_and_bad_values() {
        let flags = BTreeMap::from([
            ("eps".to_string(), "0.01, 0.001,0".to_string()),
            ("n".to_string(), "ten".to_string()),
        ]);
        let mut r = Resolver::new(flags, BTreeMap::new());
        assert_eq!(r.list("eps", &[1.0]).unwrap(), vec![0.01, 0.001, 0.0]);
        assert_eq!(r.get::<usize>("n", 3).unwrap_err().code, 1);
        assert_eq!(r.list::<usize>("replicates", &[4]).unwrap(), vec![4]);
    }
}

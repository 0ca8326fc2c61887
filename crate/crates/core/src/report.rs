//! Plain `key = value` text reports.
//!
//! One entry per line; keys contain no `=`; floats use Rust's shortest
//! round-trip formatting. Lines starting with `#` and blank lines are ignored
//! on parse.

use std::fmt::{self, Display};
use std::fs;
use std::path::Path;

use crate::analysis::{BoundReport, DRipReport, RipReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvReport {
    entries: Vec<(String, String)>,
}

impl KvReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let key = key.into();
        debug_assert!(!key.contains('='), "report keys cannot contain '='");
        self.entries.push((key, value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected `key = value`", i + 1)))?;
            out.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

impl Display for KvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl From<&RipReport> for KvReport {
    fn from(r: &RipReport) -> Self {
        let mut kv = KvReport::new();
        kv.push("k", r.k)
            .push("delta", r.delta)
            .push("enumerated_supports", r.enumerated_supports)
            .push("sampled", r.sampled);
        kv
    }
}

impl From<&DRipReport> for KvReport {
    fn from(r: &DRipReport) -> Self {
        let mut kv = KvReport::new();
        kv.push("k", r.k)
            .push("delta_bar", r.delta_bar)
            .push("enumerated_supports", r.enumerated_supports)
            .push("sampled", r.sampled);
        kv
    }
}

impl From<&BoundReport> for KvReport {
    fn from(r: &BoundReport) -> Self {
        let mut kv = KvReport::new();
        kv.push("condition_met", r.condition_met)
            .push("threshold", r.threshold)
            .push("psi_spectral_norm", r.psi_spectral_norm);
        for (name, v) in &r.constants {
            kv.push(name.as_str(), v);
        }
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let mut kv = KvReport::new();
        kv.push("delta", 0.1 + 0.2).push("name", "fig2");
        let back = KvReport::parse(&kv.to_string()).unwrap();
        assert_eq!(back, kv);
        assert_eq!(back.get("delta").unwrap().parse::<f64>().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(KvReport::parse("no separator").is_err());
        assert!(KvReport::parse("# comment\n\nx = 1").is_ok());
    }
}

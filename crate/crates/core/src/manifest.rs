//! Plain-text run manifests.
//!
//! ```text
//! tool = sis-hubs
//! version = 0.1.0
//! subcommand = exp accuracy
//! wall_clock_seconds = 3.21
//! seed.base_seed = 17
//! artifact.trials = trials.csv
//! config.mode = accuracy
//! config.hub_degree = 100
//! ```
//!
//! `config.*` holds the fully resolved configuration (every seed explicit),
//! which is enough to repeat the run bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL: &str = "sis-hubs";
pub const FILE_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: Vec<(String, String)>,
    pub seeds: Vec<(String, u64)>,
    pub artifacts: Vec<(String, String)>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: Vec::new(),
            seeds: Vec::new(),
            artifacts: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tool = {TOOL}").unwrap();
        writeln!(out, "version = {}", self.version).unwrap();
        writeln!(out, "subcommand = {}", self.subcommand).unwrap();
        writeln!(out, "wall_clock_seconds = {:.3}", self.wall_clock_seconds).unwrap();
        for (k, v) in &self.seeds {
            writeln!(out, "seed.{k} = {v}").unwrap();
        }
        for (k, v) in &self.artifacts {
            writeln!(out, "artifact.{k} = {v}").unwrap();
        }
        for (k, v) in &self.config {
            writeln!(out, "config.{k} = {v}").unwrap();
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut m = RunManifest::new("");
        let mut saw_tool = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::format(origin, idx + 1, msg);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim().to_string());
            if let Some(rest) = k.strip_prefix("config.") {
                m.config.push((rest.to_string(), v));
            } else if let Some(rest) = k.strip_prefix("artifact.") {
                m.artifacts.push((rest.to_string(), v));
            } else if let Some(rest) = k.strip_prefix("seed.") {
                let s = v.parse().map_err(|_| bad(format!("bad seed {v:?}")))?;
                m.seeds.push((rest.to_string(), s));
            } else {
                match k {
                    "tool" => {
                        if v != TOOL {
                            return Err(bad(format!("manifest written by {v:?}, not {TOOL}")));
                        }
                        saw_tool = true;
                    }
                    "version" => m.version = v,
                    "subcommand" => m.subcommand = v,
                    "wall_clock_seconds" => {
                        m.wall_clock_seconds =
                            v.parse().map_err(|_| bad(format!("bad duration {v:?}")))?
                    }
                    other => return Err(bad(format!("unknown manifest key {other:?}"))),
                }
            }
        }
        if !saw_tool || m.subcommand.is_empty() {
            return Err(Error::format(origin, 0, "missing tool or subcommand line"));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = RunManifest::new("exp accuracy");
        m.config.push(("mode".into(), "accuracy".into()));
        m.config.push(("t_grid".into(), "0.5,1,1.5".into()));
        m.seeds.push(("base_seed".into(), u64::MAX));
        m.artifacts.push(("trials".into(), "trials.csv".into()));
        m.wall_clock_seconds = 1.5;
        assert_eq!(RunManifest::parse(&m.to_text(), "m").unwrap(), m);
        assert_eq!(m.config_value("mode"), Some("accuracy"));
    }

    #[test]
    fn foreign_or_broken_manifests_rejected() {
        assert!(RunManifest::parse("tool = other\nsubcommand = x\n", "m").is_err());
        assert!(RunManifest::parse("subcommand = x\n", "m").is_err());
        assert!(RunManifest::parse("tool = sis-hubs\nsubcommand = x\nbogus = 1\n", "m").is_err());
    }
}

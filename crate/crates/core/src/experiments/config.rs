//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # accuracy sweep for hub degree 100
//! mode = accuracy
//! hub_degree = 100
//! t_grid = 0.5:20:0.5
//! k_list = 1
//! trials = 50
//! base_seed = 1
//! ```
//!
//! Unlisted keys take the benchmark defaults (1000-vertex 4-regular base,
//! 10 hubs, `beta = 1`, `gamma = 0.5`, half the vertices plus every hub
//! infected at time 0, top-10 ranking). `t_grid` accepts either a comma
//! list or `start:stop:step`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::Rule;
use crate::graph::GraphSpec;
use crate::seeds::derive_seed;
use crate::sim::{EpidemicParams, InitialCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Accuracy,
    Intervention,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Accuracy => "accuracy",
            Mode::Intervention => "intervention",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub n_low: usize,
    pub d: usize,
    pub hubs: usize,
    pub hub_degree: usize,
    /// Fixed graph seed shared by all trials. `None` draws a fresh graph per
    /// trial from the trial seed.
    pub graph_seed: Option<u64>,
    pub params: EpidemicParams,
    pub init_fraction: f64,
    pub force_hubs: bool,
    pub t_grid: Vec<f64>,
    pub k_list: Vec<usize>,
    pub rule: Rule,
    pub trials: usize,
    pub base_seed: u64,
    pub post_window: f64,
    pub removal_budget: usize,
}

impl ExperimentSpec {
    /// Benchmark defaults for the given mode; 50 trials for accuracy sweeps
    /// and 40 for interventions.
    pub fn benchmark(mode: Mode, hub_degree: usize, base_seed: u64) -> Self {
        ExperimentSpec {
            mode,
            n_low: 1000,
            d: 4,
            hubs: 10,
            hub_degree,
            graph_seed: None,
            params: EpidemicParams::new(1.0, 0.5).expect("valid"),
            init_fraction: 0.5,
            force_hubs: true,
            t_grid: (1..=40).map(|i| f64::from(i) * 0.5).collect(),
            k_list: vec![1],
            rule: Rule::TopM(10),
            trials: match mode {
                Mode::Accuracy => 50,
                Mode::Intervention => 40,
            },
            base_seed,
            post_window: 5.0,
            removal_budget: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph_spec(0).validate()?;
        if self.t_grid.is_empty() {
            return Err(Error::param("t_grid is empty"));
        }
        if self.t_grid[0] < 0.0 || !self.t_grid.iter().all(|t| t.is_finite()) {
            return Err(Error::param("t_grid values must be finite and non-negative"));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("t_grid must be strictly increasing"));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::param("k_list must be non-empty with every K >= 1"));
        }
        match self.rule {
            Rule::TopM(0) => return Err(Error::param("m must be at least 1")),
            Rule::Threshold(h) if !(h > 0.0) => {
                return Err(Error::param(format!("threshold h must be positive, got {h}")))
            }
            _ => {}
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.init_fraction) {
            return Err(Error::param("init_fraction must lie in [0, 1]"));
        }
        if self.mode == Mode::Intervention {
            if !(self.post_window >= 0.0 && self.post_window.is_finite()) {
                return Err(Error::param("post_window must be finite and non-negative"));
            }
            if self.removal_budget > self.n_low + self.hubs {
                return Err(Error::param(format!(
                    "removal budget {} exceeds vertex count {}",
                    self.removal_budget,
                    self.n_low + self.hubs
                )));
            }
        }
        if self.hubs == 0 {
            return Err(Error::param("accuracy needs at least one planted hub"));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    pub fn graph_spec(&self, trial_seed: u64) -> GraphSpec {
        GraphSpec {
            n_low: self.n_low,
            d: self.d,
            m: self.hubs,
            hub_degree: self.hub_degree,
            seed: self
                .graph_seed
                .unwrap_or_else(|| derive_seed(trial_seed, "graph")),
        }
    }

    pub fn initial_condition(&self, trial_seed: u64) -> InitialCondition {
        InitialCondition::RandomFraction {
            fraction: self.init_fraction,
            force_hubs: self.force_hubs,
            seed: derive_seed(trial_seed, "init"),
        }
    }

    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().expect("validated non-empty")
    }

    /// Ranking size used by the baseline and the random removal arm.
    pub fn ranking_size(&self) -> usize {
        match self.rule {
            Rule::TopM(m) => m,
            Rule::Threshold(_) => self.hubs,
        }
    }

    /// Canonical text form; [`ExperimentSpec::parse`] reads it back exactly.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// Key/value pairs in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("mode", self.mode.as_str().to_string()),
            ("n_low", self.n_low.to_string()),
            ("d", self.d.to_string()),
            ("hubs", self.hubs.to_string()),
            ("hub_degree", self.hub_degree.to_string()),
        ];
        if let Some(s) = self.graph_seed {
            e.push(("graph_seed", s.to_string()));
        }
        e.extend([
            ("beta", self.params.beta().to_string()),
            ("gamma", self.params.gamma().to_string()),
            ("init_fraction", self.init_fraction.to_string()),
            ("force_hubs", self.force_hubs.to_string()),
            (
                "t_grid",
                self.t_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            ),
            (
                "k_list",
                self.k_list.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            ),
        ]);
        match self.rule {
            Rule::TopM(m) => {
                e.push(("rule", "top-m".into()));
                e.push(("m", m.to_string()));
            }
            Rule::Threshold(h) => {
                e.push(("rule", "threshold".into()));
                e.push(("h", h.to_string()));
            }
        }
        e.extend([
            ("trials", self.trials.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("post_window", self.post_window.to_string()),
            ("removal_budget", self.removal_budget.to_string()),
        ]);
        e
    }

    /// Parses a config. A missing `base_seed` is filled from `fallback_seed`.
    pub fn parse(text: &str, origin: &str, fallback_seed: impl FnOnce() -> u64) -> Result<Self> {
        let pairs = parse_pairs(text, origin)?;
        Self::from_pairs(&pairs, origin, fallback_seed)
    }

    pub fn load(path: impl AsRef<Path>, fallback_seed: impl FnOnce() -> u64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), fallback_seed)
    }

    pub(crate) fn from_pairs(
        pairs: &[(String, String, usize)],
        origin: &str,
        fallback_seed: impl FnOnce() -> u64,
    ) -> Result<Self> {
        let get = |key: &str| pairs.iter().rev().find(|(k, _, _)| k == key);
        let mode = match get("mode") {
            None => Mode::Accuracy,
            Some((_, v, line)) => match v.as_str() {
                "accuracy" => Mode::Accuracy,
                "intervention" | "intervene" => Mode::Intervention,
                other => return Err(Error::format(origin, *line, format!("unknown mode {other:?}"))),
            },
        };
        let mut spec = ExperimentSpec::benchmark(mode, 100, 0);
        let mut beta = spec.params.beta();
        let mut gamma = spec.params.gamma();
        let mut rule_name = "top-m".to_string();
        let mut m = spec.ranking_size();
        let mut h: Option<f64> = None;
        let mut seed_given = false;

        for (key, value, line) in pairs {
            let line = *line;
            let bad = |what: &str| Error::format(origin, line, format!("bad {what} value {value:?}"));
            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|_| bad(key))?
                };
            }
            match key.as_str() {
                "mode" => {}
                "n_low" => spec.n_low = num!(usize),
                "d" => spec.d = num!(usize),
                "hubs" => spec.hubs = num!(usize),
                "hub_degree" | "D" => spec.hub_degree = num!(usize),
                "graph_seed" => spec.graph_seed = Some(num!(u64)),
                "beta" => beta = num!(f64),
                "gamma" => gamma = num!(f64),
                "init_fraction" => spec.init_fraction = num!(f64),
                "force_hubs" => spec.force_hubs = num!(bool),
                "t_grid" => spec.t_grid = parse_grid(value).ok_or_else(|| bad(key))?,
                "k_list" => {
                    spec.k_list = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(key))?
                }
                "rule" => rule_name = value.clone(),
                "m" => m = num!(usize),
                "h" => h = Some(num!(f64)),
                "trials" => spec.trials = num!(usize),
                "base_seed" => {
                    spec.base_seed = num!(u64);
                    seed_given = true;
                }
                "post_window" => spec.post_window = num!(f64),
                "removal_budget" => spec.removal_budget = num!(usize),
                other => {
                    return Err(Error::format(origin, line, format!("unknown key {other:?}")))
                }
            }
        }
        spec.params = EpidemicParams::new(beta, gamma)?;
        spec.rule = match rule_name.as_str() {
            "top-m" | "top_m" => Rule::TopM(m),
            "threshold" => Rule::Threshold(
                h.ok_or_else(|| Error::param("rule = threshold needs an h value"))?,
            ),
            other => return Err(Error::param(format!("unknown rule {other:?}"))),
        };
        if !seed_given {
            spec.base_seed = fallback_seed();
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// `key = value` lines; `#` starts a comment line.
pub(crate) fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::format(origin, idx + 1, format!("expected key = value, got {line:?}")));
        };
        out.push((k.trim().to_string(), v.trim().to_string(), idx + 1));
    }
    Ok(out)
}

fn parse_grid(value: &str) -> Option<Vec<f64>> {
    if let Some((start, rest)) = value.split_once(':') {
        let (stop, step) = rest.split_once(':')?;
        let start: f64 = start.trim().parse().ok()?;
        let stop: f64 = stop.trim().parse().ok()?;
        let step: f64 = step.trim().parse().ok()?;
        if !(step > 0.0) || stop < start {
            return None;
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Some((0..=count).map(|i| start + i as f64 * step).collect());
    }
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_benchmark() {
        let spec = ExperimentSpec::parse("mode = accuracy\nbase_seed = 3\n", "cfg", || 0).unwrap();
        assert_eq!(spec, ExperimentSpec::benchmark(Mode::Accuracy, 100, 3));
        assert_eq!(spec.t_grid.len(), 40);
        assert_eq!(spec.t_grid[0], 0.5);
        assert_eq!(spec.t_max(), 20.0);
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut spec = ExperimentSpec::benchmark(Mode::Intervention, 25, 99);
        spec.graph_seed = Some(4);
        spec.k_list = vec![1, 3, 5];
        spec.rule = Rule::Threshold(0.1);
        spec.t_grid = vec![0.0, 0.1 + 0.2, 2.5];
        let text = spec.to_config_text();
        assert_eq!(ExperimentSpec::parse(&text, "cfg", || unreachable!()).unwrap(), spec);
    }

    #[test]
    fn grid_range_syntax() {
        assert_eq!(parse_grid("0:2:0.5").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_grid("1:0:1").is_none());
        assert!(parse_grid("a,b").is_none());
    }

    #[test]
    fn missing_seed_uses_fallback() {
        let spec = ExperimentSpec::parse("trials = 2\n", "cfg", || 1234).unwrap();
        assert_eq!(spec.base_seed, 1234);
    }

    #[test]
    fn bad_configs_rejected() {
        let unknown = ExperimentSpec::parse("foo = 1\n", "cfg", || 0).unwrap_err();
        assert!(matches!(unknown, Error::Format { line: 1, .. }));
        let bad_num = ExperimentSpec::parse("\ntrials = many\n", "cfg", || 0).unwrap_err();
        assert!(matches!(bad_num, Error::Format { line: 2, .. }));
        assert!(ExperimentSpec::parse("t_grid = 2,1\n", "cfg", || 0).is_err());
        assert!(ExperimentSpec::parse("trials = 0\n", "cfg", || 0).is_err());
        assert!(ExperimentSpec::parse("rule = threshold\n", "cfg", || 0).is_err());
        assert!(ExperimentSpec::parse("d = 3\nn_low = 7\n", "cfg", || 0).is_err());
        assert!(ExperimentSpec::parse("no equals sign\n", "cfg", || 0).is_err());
    }
}

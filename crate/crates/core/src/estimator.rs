//! Re-infection-time detection of high-degree vertices.
//!
//! A vertex adjacent to many others is re-infected almost as soon as it
//! recovers, because a large part of its neighbourhood is still infected at
//! that moment. For each vertex with more than `K` observed infections the
//! statistic
//!
//! ```text
//! R_K(v) = max_{1 <= k <= K} ( I_{k+1}(v) - S_k(v) )
//! ```
//!
//! is the longest of its first `K` re-infection gaps. Vertices are flagged
//! either when `R_K(v) <= h` (threshold rule) or by taking the `m` smallest
//! values (top-m rule).

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::sim::EventLog;

/// Infection times `I_1 < I_2 < ...` and recovery times `S_1 < S_2 < ...`
/// of one vertex. An initially infected vertex has `I_1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTimeline {
    pub vertex: Vertex,
    pub infections: Vec<f64>,
    pub recoveries: Vec<f64>,
    pub initially_infected: bool,
}

impl NodeTimeline {
    pub fn susceptible(vertex: Vertex) -> Self {
        NodeTimeline {
            vertex,
            infections: Vec::new(),
            recoveries: Vec::new(),
            initially_infected: false,
        }
    }

    pub fn initially_infected(vertex: Vertex) -> Self {
        NodeTimeline {
            vertex,
            infections: vec![0.0],
            recoveries: Vec::new(),
            initially_infected: true,
        }
    }

    /// Checks `I_k <= S_k <= I_{k+1}` and that there is at most one more
    /// infection than recoveries.
    pub fn validate(&self) -> Result<()> {
        let (ni, ns) = (self.infections.len(), self.recoveries.len());
        if ns > ni || ni > ns + 1 {
            return Err(Error::Data(format!(
                "vertex {}: {ni} infections but {ns} recoveries",
                self.vertex
            )));
        }
        if self.initially_infected && self.infections.first() != Some(&0.0) {
            return Err(Error::Data(format!(
                "vertex {} is initially infected but I_1 != 0",
                self.vertex
            )));
        }
        let mut last = f64::NEG_INFINITY;
        for k in 0..ni {
            let i = self.infections[k];
            if !(i >= last) {
                return Err(Error::Data(format!(
                    "vertex {}: infection {} at {i} precedes {last}",
                    self.vertex,
                    k + 1
                )));
            }
            last = i;
            if let Some(&s) = self.recoveries.get(k) {
                if !(s >= last) {
                    return Err(Error::Data(format!(
                        "vertex {}: recovery {} at {s} precedes {last}",
                        self.vertex,
                        k + 1
                    )));
                }
                last = s;
            }
        }
        Ok(())
    }

    /// Number of infections observed, counting `I_1 = 0` for an initially
    /// infected vertex.
    pub fn infection_count(&self) -> usize {
        self.infections.len()
    }

    /// Total time spent infected in `[0, horizon]`; an infection still open
    /// is clipped at `horizon`.
    pub fn cumulative_infection_time(&self, horizon: f64) -> f64 {
        self.infections
            .iter()
            .enumerate()
            .map(|(k, &start)| {
                let end = self.recoveries.get(k).copied().unwrap_or(f64::INFINITY);
                (end.min(horizon) - start.min(horizon)).max(0.0)
            })
            .sum()
    }
}

/// The gaps `I_{k+1} - S_k` for every `k` where both times are present.
pub fn reinfection_gaps(tl: &NodeTimeline) -> Result<Vec<f64>> {
    tl.validate()?;
    Ok(gaps_unchecked(tl).collect())
}

fn gaps_unchecked(tl: &NodeTimeline) -> impl Iterator<Item = f64> + '_ {
    tl.recoveries
        .iter()
        .zip(tl.infections.iter().skip(1))
        .map(|(&s, &i)| i - s)
}

/// `R_K`: the largest of the first `k` re-infection gaps, or `None` when
/// fewer than `k` gaps were observed (or `k == 0`).
pub fn r_k(tl: &NodeTimeline, k: usize) -> Option<f64> {
    if k == 0 {
        return None;
    }
    let mut count = 0;
    let max = gaps_unchecked(tl)
        .take(k)
        .inspect(|_| count += 1)
        .fold(f64::NEG_INFINITY, f64::max);
    (count == k).then_some(max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// Select every eligible vertex with `R_K <= h`.
    Threshold(f64),
    /// Select the `m` eligible vertices with the smallest `R_K`.
    TopM(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub k: usize,
    pub rule: Rule,
    /// Degree exponent: hubs have degree at least `n^alpha`.
    pub alpha: Option<f64>,
}

impl EstimatorConfig {
    pub fn top_m(k: usize, m: usize) -> Result<Self> {
        let cfg = EstimatorConfig { k, rule: Rule::TopM(m), alpha: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn threshold(k: usize, h: f64) -> Result<Self> {
        let cfg = EstimatorConfig { k, rule: Rule::Threshold(h), alpha: None };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Threshold rule with `K = ⌈3/α⌉` and `h = n^(-α/2)`, the choice that
    /// separates hubs of degree `n^α` from bounded-degree vertices.
    pub fn from_alpha(n: usize, alpha: f64) -> Result<Self> {
        Ok(EstimatorConfig {
            k: theorem_k(alpha)?,
            rule: Rule::Threshold(theorem_h(n, alpha)?),
            alpha: Some(alpha),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("re-infection count K must be at least 1"));
        }
        match self.rule {
            Rule::Threshold(h) if !(h > 0.0) => {
                Err(Error::param(format!("threshold h must be positive, got {h}")))
            }
            Rule::TopM(0) => Err(Error::param("ranking size m must be at least 1")),
            _ => Ok(()),
        }?;
        if let Some(a) = self.alpha {
            check_alpha(a)?;
        }
        Ok(())
    }

    pub fn estimate(&self, log: &EventLog) -> Result<Estimate> {
        self.validate()?;
        let timelines = log.timelines();
        Ok(match self.rule {
            Rule::Threshold(h) => threshold_from_timelines(&timelines, self.k, h),
            Rule::TopM(m) => top_m_from_timelines(&timelines, self.k, m),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Flagged vertices, sorted by id.
    pub selected: Vec<Vertex>,
    /// Score of every eligible vertex, in vertex order.
    pub scores: Vec<(Vertex, f64)>,
    /// Vertices the rule could consider, sorted by id.
    pub eligible: Vec<Vertex>,
}

impl Estimate {
    pub fn score_of(&self, v: Vertex) -> Option<f64> {
        self.scores
            .binary_search_by_key(&v, |&(u, _)| u)
            .ok()
            .map(|i| self.scores[i].1)
    }

    /// Selected vertices ordered by rank (best first). For the threshold and
    /// top-m rules that is ascending `R_K`; for the cumulative baseline,
    /// descending cumulative time.
    pub fn ranked(&self, descending: bool) -> Vec<Vertex> {
        let mut picked: Vec<(Vertex, f64)> = self
            .selected
            .iter()
            .map(|&v| (v, self.score_of(v).unwrap_or(f64::NAN)))
            .collect();
        picked.sort_by(|a, b| rank_order(a, b, descending));
        picked.into_iter().map(|(v, _)| v).collect()
    }
}

fn rank_order(a: &(Vertex, f64), b: &(Vertex, f64), descending: bool) -> Ordering {
    let by_score = a.1.total_cmp(&b.1);
    let by_score = if descending { by_score.reverse() } else { by_score };
    by_score.then(a.0.cmp(&b.0))
}

/// `R_K` of every vertex in `V_K(T)`, the vertices with more than `k`
/// infections, in vertex order.
pub fn eligible_scores(timelines: &[NodeTimeline], k: usize) -> Vec<(Vertex, f64)> {
    timelines
        .iter()
        .filter_map(|tl| r_k(tl, k).map(|r| (tl.vertex, r)))
        .collect()
}

fn finish(scores: Vec<(Vertex, f64)>, mut selected: Vec<Vertex>) -> Estimate {
    selected.sort_unstable();
    Estimate {
        eligible: scores.iter().map(|&(v, _)| v).collect(),
        scores,
        selected,
    }
}

pub fn threshold_from_timelines(timelines: &[NodeTimeline], k: usize, h: f64) -> Estimate {
    let scores = eligible_scores(timelines, k);
    let selected = scores.iter().filter(|&&(_, r)| r <= h).map(|&(v, _)| v).collect();
    finish(scores, selected)
}

/// Ties in `R_K` go to the smaller vertex id.
pub fn top_m_from_timelines(timelines: &[NodeTimeline], k: usize, m: usize) -> Estimate {
    let scores = eligible_scores(timelines, k);
    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| rank_order(a, b, false));
    let selected = ranked.into_iter().take(m).map(|(v, _)| v).collect();
    finish(scores, selected)
}

/// Threshold rule: `{v in V_K(T) : R_K(v) <= h}`. `h` may be infinite.
pub fn estimate_threshold(log: &EventLog, k: usize, h: f64) -> Result<Estimate> {
    EstimatorConfig::threshold(k, h)?.estimate(log)
}

/// Top-m rule: the `m` vertices of `V_K(T)` with the smallest `R_K`.
pub fn estimate_top_m(log: &EventLog, k: usize, m: usize) -> Result<Estimate> {
    EstimatorConfig::top_m(k, m)?.estimate(log)
}

/// Baseline: the `m` vertices with the longest cumulative infection time in
/// `[0, horizon]`. Every vertex is eligible; ties go to the smaller id.
pub fn baseline_cumulative(log: &EventLog, m: usize, horizon: f64) -> Result<Estimate> {
    if m == 0 {
        return Err(Error::param("ranking size m must be at least 1"));
    }
    if !(horizon >= 0.0 && horizon <= log.horizon()) {
        return Err(Error::param(format!(
            "baseline horizon {horizon} outside [0, {}]",
            log.horizon()
        )));
    }
    Ok(baseline_from_timelines(&log.timelines(), m, horizon))
}

pub fn baseline_from_timelines(timelines: &[NodeTimeline], m: usize, horizon: f64) -> Estimate {
    let scores: Vec<(Vertex, f64)> = timelines
        .iter()
        .map(|tl| (tl.vertex, tl.cumulative_infection_time(horizon)))
        .collect();
    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| rank_order(a, b, true));
    let selected = ranked.into_iter().take(m).map(|(v, _)| v).collect();
    finish(scores, selected)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Re-infection count `⌈3/α⌉`.
pub fn theorem_k(alpha: f64) -> Result<usize> {
    check_alpha(alpha)?;
    Ok((3.0 / alpha).ceil() as usize)
}

/// Threshold `n^(-α/2)`.
pub fn theorem_h(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::param("vertex count must be at least 1"));
    }
    Ok((n as f64).powf(-alpha / 2.0))
}

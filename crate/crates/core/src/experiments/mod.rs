//! Seeded replication of the accuracy and intervention experiments.
//!
//! Every trial draws one trajectory up to the largest observation time and
//! evaluates all smaller times on prefixes of it. Trials run in parallel;
//! records are folded in trial order, so output does not depend on the
//! thread count.

mod config;
mod report;

use std::path::{Path, PathBuf};

use rand::seq::index;
use rayon::prelude::*;

pub use config::{ExperimentSpec, Mode};
pub use report::{
    aggregate, mean_stderr, parse_summary_csv, parse_trials_csv, summary_csv, trials_csv,
    SummaryRow, TrialRecord, SUMMARY_HEADER, TRIALS_HEADER,
};

use crate::error::{Error, Result};
use crate::estimator::{
    baseline_from_timelines, threshold_from_timelines, top_m_from_timelines, Estimate, Rule,
};
use crate::graph::{Graph, Vertex};
use crate::seeds::{derive_seed, derive_seed_indexed, rng_from_seed};
use crate::sim::{resume, simulate, EpidemicParams, EventLog};

pub const METHOD_REINFECTION: &str = "reinfection";
pub const METHOD_CUMULATIVE: &str = "cumulative";
pub const ARM_TARGETED: &str = "targeted";
pub const ARM_RANDOM: &str = "random";
pub const ARM_NONE: &str = "none";
pub const METHOD_REDUCTION: &str = "reduction";

pub const METRIC_ACCURACY: &str = "accuracy";
pub const METRIC_EVENTS: &str = "infection_events";
pub const METRIC_PREVALENCE: &str = "infected_at_end";

/// Fraction of `truth` contained in `estimate`.
pub fn accuracy(estimate: &[Vertex], truth: &[Vertex]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::param("accuracy needs a non-empty ground-truth set"));
    }
    let hits = truth.iter().filter(|v| estimate.contains(v)).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for trials; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    fn from_trials(spec: ExperimentSpec, trials: Vec<TrialResult>) -> Self {
        let all: Vec<TrialRecord> = trials.iter().flat_map(|t| t.records.iter().cloned()).collect();
        let summary = aggregate(&all);
        ExperimentReport { spec, trials, summary }
    }

    pub fn records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().flat_map(|t| t.records.iter())
    }

    pub fn trials_csv(&self) -> String {
        trials_csv(&self.records().cloned().collect::<Vec<_>>())
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.summary)
    }

    /// Summary row for one `(method, k, t, metric)` cell.
    pub fn cell(&self, method: &str, k: Option<usize>, t: f64, metric: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.method == method && r.k == k && r.t == t && r.metric == metric)
    }

    /// Per-trial values of one cell, in trial order.
    pub fn values(&self, method: &str, k: Option<usize>, t: f64, metric: &str) -> Vec<f64> {
        self.records()
            .filter(|r| r.method == method && r.k == k && r.t == t && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    /// Writes `trials.csv` and `summary.csv` into `dir`, returning their paths.
    pub fn write_csvs(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let trials = dir.join("trials.csv");
        let summary = dir.join("summary.csv");
        report::write_file(&trials, &self.trials_csv())?;
        report::write_file(&summary, &self.summary_csv())?;
        Ok((trials, summary))
    }
}

fn run_trials<F>(spec: &ExperimentSpec, options: RunOptions, trial: F) -> Result<Vec<TrialResult>>
where
    F: Fn(usize) -> Result<TrialResult> + Sync + Send,
{
    let work = || (0..spec.trials).into_par_iter().map(&trial).collect::<Result<Vec<_>>>();
    match options.threads {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
    }
}

/// One trial's graph and full trajectory on `[0, max T]`.
pub fn trial_trajectory(spec: &ExperimentSpec, trial_seed: u64) -> Result<(Graph, EventLog)> {
    let graph = spec.graph_spec(trial_seed).build()?;
    let init = spec.initial_condition(trial_seed);
    let log = simulate(
        &graph,
        spec.params,
        &init,
        spec.t_max(),
        derive_seed(trial_seed, "sim"),
    )?;
    Ok((graph, log))
}

fn apply_rule(rule: Rule, timelines: &[crate::estimator::NodeTimeline], k: usize) -> Estimate {
    match rule {
        Rule::TopM(m) => top_m_from_timelines(timelines, k, m),
        Rule::Threshold(h) => threshold_from_timelines(timelines, k, h),
    }
}

/// Accuracy of the re-infection estimator (every `K`) and of the cumulative
/// infection-time baseline at every observation time.
pub fn run_accuracy_sweep(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    if spec.mode != Mode::Accuracy {
        return Err(Error::param("run_accuracy_sweep needs mode = accuracy"));
    }
    let trials = run_trials(spec, options, |trial| {
        let seed = spec.trial_seed(trial);
        let (graph, log) = trial_trajectory(spec, seed)?;
        let truth = graph.hub_labels();
        let mut records = Vec::new();
        let mut push = |method: &str, k: Option<usize>, t: f64, value: f64| {
            records.push(TrialRecord {
                trial,
                seed,
                hub_degree: spec.hub_degree,
                method: method.into(),
                k,
                t,
                metric: METRIC_ACCURACY.into(),
                value,
            })
        };
        for &t in &spec.t_grid {
            let timelines = log.truncate(t)?.timelines();
            for &k in &spec.k_list {
                let est = apply_rule(spec.rule, &timelines, k);
                push(METHOD_REINFECTION, Some(k), t, accuracy(&est.selected, truth)?);
            }
            let base = baseline_from_timelines(&timelines, spec.ranking_size(), t);
            push(METHOD_CUMULATIVE, None, t, accuracy(&base.selected, truth)?);
        }
        Ok(TrialResult { trial, seed, records })
    })?;
    Ok(ExperimentReport::from_trials(spec.clone(), trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmOutcome {
    /// Infection events during the post-intervention window.
    pub infection_events: usize,
    /// Infected vertices when the window closes.
    pub infected_at_end: usize,
}

/// Removes `removed` from `graph`, drops them from the infected set, and
/// runs the epidemic for `window` more time units.
pub fn run_arm(
    graph: &Graph,
    infected: &[Vertex],
    removed: &[Vertex],
    params: EpidemicParams,
    window: f64,
    seed: u64,
) -> Result<ArmOutcome> {
    let pruned = graph.remove_vertices(removed)?;
    let survivors: Vec<Vertex> = infected
        .iter()
        .copied()
        .filter(|&v| pruned.is_active(v))
        .collect();
    let log = resume(&pruned, &survivors, params, window, seed)?;
    Ok(ArmOutcome {
        infection_events: log.infection_count(),
        infected_at_end: log.final_infected().len(),
    })
}

/// Targeted versus random removal. For each observation time `T` the shared
/// trajectory is cut at `T`; the estimated hub set, a uniformly random set of
/// `removal_budget` vertices, and nothing are removed in three arms, each
/// run for `post_window` more time. Comparative reduction is the random
/// arm's count minus the targeted arm's.
pub fn run_intervention(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    if spec.mode != Mode::Intervention {
        return Err(Error::param("run_intervention needs mode = intervention"));
    }
    let rule = match spec.rule {
        Rule::TopM(_) => Rule::TopM(spec.removal_budget.max(1)),
        r @ Rule::Threshold(_) => r,
    };
    let trials = run_trials(spec, options, |trial| {
        let seed = spec.trial_seed(trial);
        let (graph, log) = trial_trajectory(spec, seed)?;
        let truth = graph.hub_labels();
        let n = graph.n();
        let mut records = Vec::new();
        let mut push = |method: &str, k: Option<usize>, t: f64, metric: &str, value: f64| {
            records.push(TrialRecord {
                trial,
                seed,
                hub_degree: spec.hub_degree,
                method: method.into(),
                k,
                t,
                metric: metric.into(),
                value,
            })
        };

        for (j, &t) in spec.t_grid.iter().enumerate() {
            let j = j as u64;
            let infected = log.infected_at(t)?;
            let timelines = log.truncate(t)?.timelines();
            let arm = |removed: &[Vertex], tag: &str| {
                run_arm(
                    &graph,
                    &infected,
                    removed,
                    spec.params,
                    spec.post_window,
                    derive_seed_indexed(seed, tag, j),
                )
            };

            let mut set_rng = rng_from_seed(derive_seed_indexed(seed, "random-set", j));
            let random_set: Vec<Vertex> = index::sample(&mut set_rng, n, spec.removal_budget)
                .into_iter()
                .map(|v| v as Vertex)
                .collect();
            let random = arm(&random_set, ARM_RANDOM)?;
            let none = arm(&[], ARM_NONE)?;
            for (name, out) in [(ARM_RANDOM, random), (ARM_NONE, none)] {
                push(name, None, t, METRIC_EVENTS, out.infection_events as f64);
                push(name, None, t, METRIC_PREVALENCE, out.infected_at_end as f64);
            }

            for &k in &spec.k_list {
                let est = apply_rule(rule, &timelines, k);
                let targeted = arm(&est.selected, &format!("{ARM_TARGETED}-k{k}"))?;
                push(ARM_TARGETED, Some(k), t, METRIC_ACCURACY, accuracy(&est.selected, truth)?);
                push(ARM_TARGETED, Some(k), t, METRIC_EVENTS, targeted.infection_events as f64);
                push(ARM_TARGETED, Some(k), t, METRIC_PREVALENCE, targeted.infected_at_end as f64);
                push(
                    METHOD_REDUCTION,
                    Some(k),
                    t,
                    METRIC_EVENTS,
                    random.infection_events as f64 - targeted.infection_events as f64,
                );
                push(
                    METHOD_REDUCTION,
                    Some(k),
                    t,
                    METRIC_PREVALENCE,
                    random.infected_at_end as f64 - targeted.infected_at_end as f64,
                );
            }
        }
        Ok(TrialResult { trial, seed, records })
    })?;
    Ok(ExperimentReport::from_trials(spec.clone(), trials))
}

/// Runs whichever experiment `spec.mode` names.
pub fn run(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentReport> {
    match spec.mode {
        Mode::Accuracy => run_accuracy_sweep(spec, options),
        Mode::Intervention => run_intervention(spec, options),
    }
}

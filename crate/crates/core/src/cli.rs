//! The `sis-hubs` command line.
//!
//! Exit status is 0 on success, 2 for usage, input and parameter errors,
//! and 1 for internal invariant failures. Errors are reported as a single
//! `error: ...` line on stderr.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, Rule};
use crate::experiments::{self, ExperimentSpec, Mode, RunOptions};
use crate::graph::{Graph, GraphSpec, Vertex};
use crate::manifest::{self, RunManifest};
use crate::oracle::{self, Method};
use crate::seeds::derive_seed;
use crate::sim::{self, EpidemicParams, EventLog, InitialCondition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sis-hubs", version, about = "SIS epidemic simulation and super-spreader detection")]
pub struct Cli {
    /// Cap on concurrently running trials (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contact-network generation.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Epidemic simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Flag likely hubs from an event log.
    Estimate(EstimateArgs),
    /// Exact per-vertex infection probabilities on a tiny graph.
    Oracle(OracleArgs),
    /// Replicated experiments.
    #[command(subcommand)]
    Exp(ExpCommand),
    /// Repeat an experiment from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Random d-regular graph plus planted hubs.
    Gen(GraphGenArgs),
}

#[derive(Debug, Args)]
pub struct GraphGenArgs {
    /// Low-degree vertex count.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub hubs: usize,
    #[arg(long, default_value_t = 0)]
    pub hub_degree: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a run manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Simulate on [0, T] and write the event log.
    Run(SimRunArgs),
}

#[derive(Debug, Args)]
pub struct SimRunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Observation horizon.
    #[arg(long = "T")]
    pub horizon: f64,
    /// Fraction of vertices infected at random at time 0.
    #[arg(long, conflicts_with = "init")]
    pub init_frac: Option<f64>,
    /// Also infect every labelled hub at time 0.
    #[arg(long)]
    pub force_hubs: bool,
    /// Explicit comma-separated initial infected set.
    #[arg(long)]
    pub init: Option<String>,
    /// Seeds the epidemic; the random initial set uses a stream derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    TopM,
    Threshold,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long = "K", default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = RuleName::TopM)]
    pub rule: RuleName,
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long)]
    pub h: Option<f64>,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMethod {
    Uniformization,
    Series,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Comma-separated initially infected vertices.
    #[arg(long, default_value = "")]
    pub init: String,
    #[arg(long)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = OracleMethod::Uniformization)]
    pub method: OracleMethod,
}

#[derive(Debug, Subcommand)]
pub enum ExpCommand {
    /// Estimator and baseline accuracy over observation times.
    Accuracy(ExpArgs),
    /// Targeted versus random removal.
    Intervene(ExpArgs),
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            if e.is_internal() {
                EXIT_INTERNAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Graph(GraphCommand::Gen(a)) => graph_gen(a),
        Command::Sim(SimCommand::Run(a)) => sim_run(a),
        Command::Estimate(a) => estimate(a),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Exp(ExpCommand::Accuracy(a)) => exp_from_config(a, Mode::Accuracy, cli.threads),
        Command::Exp(ExpCommand::Intervene(a)) => {
            exp_from_config(a, Mode::Intervention, cli.threads)
        }
        Command::Replay(a) => replay(a, cli.threads),
    }
}

fn entropy_seed() -> u64 {
    rand::random()
}

fn parse_vertex_list(s: &str) -> Result<Vec<Vertex>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<Vertex>()
                .map_err(|_| Error::param(format!("bad vertex {t:?} in list")))
        })
        .collect()
}

fn graph_gen(a: &GraphGenArgs) -> Result<()> {
    let start = Instant::now();
    let seed = a.seed.unwrap_or_else(entropy_seed);
    let spec = GraphSpec {
        n_low: a.n,
        d: a.d,
        m: a.hubs,
        hub_degree: a.hub_degree,
        seed,
    };
    let graph = spec.build()?;
    graph.save(&a.out)?;
    if let Some(path) = &a.manifest {
        let mut m = RunManifest::new("graph gen");
        m.seeds.push(("seed".into(), seed));
        m.artifacts.push(("graph".into(), a.out.display().to_string()));
        m.config = vec![
            ("n".into(), a.n.to_string()),
            ("d".into(), a.d.to_string()),
            ("hubs".into(), a.hubs.to_string()),
            ("hub-degree".into(), a.hub_degree.to_string()),
            ("seed".into(), seed.to_string()),
        ];
        m.wall_clock_seconds = start.elapsed().as_secs_f64();
        m.save(path)?;
    } else if a.seed.is_none() {
        eprintln!("seed: {seed}");
    }
    Ok(())
}

fn sim_run(a: &SimRunArgs) -> Result<()> {
    let start = Instant::now();
    let graph = Graph::load(&a.graph)?;
    let params = EpidemicParams::new(a.beta, a.gamma)?;
    let seed = a.seed.unwrap_or_else(entropy_seed);
    let init = match (&a.init, a.init_frac) {
        (Some(list), _) => {
            let mut set = parse_vertex_list(list)?;
            if a.force_hubs {
                set.extend_from_slice(graph.hub_labels());
            }
            InitialCondition::Explicit(set)
        }
        (None, frac) => InitialCondition::RandomFraction {
            fraction: frac.unwrap_or(0.0),
            force_hubs: a.force_hubs,
            seed: derive_seed(seed, "init"),
        },
    };
    let log = sim::simulate(&graph, params, &init, a.horizon, seed)?;
    log.save(&a.out)?;
    if let Some(path) = &a.manifest {
        let mut m = RunManifest::new("sim run");
        m.seeds.push(("seed".into(), seed));
        m.artifacts.push(("log".into(), a.out.display().to_string()));
        m.config = vec![
            ("graph".into(), a.graph.display().to_string()),
            ("beta".into(), a.beta.to_string()),
            ("gamma".into(), a.gamma.to_string()),
            ("T".into(), a.horizon.to_string()),
            ("force-hubs".into(), a.force_hubs.to_string()),
            ("seed".into(), seed.to_string()),
        ];
        match (&a.init, a.init_frac) {
            (Some(list), _) => m.config.push(("init".into(), list.clone())),
            (None, f) => m.config.push(("init-frac".into(), f.unwrap_or(0.0).to_string())),
        }
        m.wall_clock_seconds = start.elapsed().as_secs_f64();
        m.save(path)?;
    } else if a.seed.is_none() {
        eprintln!("seed: {seed}");
    }
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let log = EventLog::load(&a.log)?;
    let config = match a.rule {
        RuleName::TopM => EstimatorConfig::top_m(a.k, a.m)?,
        RuleName::Threshold => {
            let h = a
                .h
                .ok_or_else(|| Error::param("--rule threshold needs --h"))?;
            EstimatorConfig::threshold(a.k, h)?
        }
    };
    let est = config.estimate(&log)?;
    let record = serde_json::json!({
        "k": a.k,
        "rule": match config.rule { Rule::TopM(_) => "top-m", Rule::Threshold(_) => "threshold" },
        "selected": est.selected,
        "scores": est.scores.iter().map(|&(v, r)| serde_json::json!({"vertex": v, "r_k": r})).collect::<Vec<_>>(),
        "eligible_count": est.eligible.len(),
    });
    let line = format!("{record}\n");
    match &a.out {
        Some(path) => std::fs::write(path, line).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(line.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn oracle_cmd(a: &OracleArgs) -> Result<()> {
    let graph = Graph::load(&a.graph)?;
    let params = EpidemicParams::new(a.beta, a.gamma)?;
    let gen = oracle::build_generator(&graph, params)?;
    let init = parse_vertex_list(&a.init)?;
    if let Some(&v) = init.iter().find(|&&v| v as usize >= graph.n()) {
        return Err(Error::param(format!("initial vertex {v} out of range")));
    }
    let method = match a.method {
        OracleMethod::Uniformization => Method::Uniformization,
        OracleMethod::Series => Method::Series,
    };
    let probs = oracle::marginals(&gen, oracle::state_of(&init), a.t, method)?;
    let mut out = String::from("vertex probability\n");
    for (v, p) in probs.iter().enumerate() {
        out.push_str(&format!("{v} {p:.12}\n"));
    }
    std::io::stdout()
        .write_all(out.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn exp_from_config(a: &ExpArgs, mode: Mode, threads: Option<usize>) -> Result<()> {
    let spec = ExperimentSpec::load(&a.config, entropy_seed)?;
    if spec.mode != mode {
        return Err(Error::param(format!(
            "{} declares mode = {}, but `exp {}` was requested",
            a.config.display(),
            spec.mode.as_str(),
            match mode {
                Mode::Accuracy => "accuracy",
                Mode::Intervention => "intervene",
            }
        )));
    }
    run_experiment(&spec, &a.out_dir, threads)
}

/// Runs `spec`, writing `trials.csv`, `summary.csv` and the manifest into
/// `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, threads: Option<usize>) -> Result<()> {
    let start = Instant::now();
    let report = experiments::run(spec, RunOptions { threads })?;
    let (trials, summary) = report.write_csvs(out_dir)?;
    let mut m = RunManifest::new(match spec.mode {
        Mode::Accuracy => "exp accuracy",
        Mode::Intervention => "exp intervene",
    });
    m.seeds.push(("base_seed".into(), spec.base_seed));
    if let Some(s) = spec.graph_seed {
        m.seeds.push(("graph_seed".into(), s));
    }
    for (key, path) in [("trials", trials), ("summary", summary)] {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned());
        m.artifacts.push((key.into(), name.unwrap_or_default()));
    }
    m.config = spec
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    m.save(out_dir.join(manifest::FILE_NAME))
}

fn replay(a: &ReplayArgs, threads: Option<usize>) -> Result<()> {
    let m = RunManifest::load(&a.manifest)?;
    match m.subcommand.as_str() {
        "exp accuracy" | "exp intervene" => {
            let pairs: Vec<(String, String, usize)> = m
                .config
                .iter()
                .enumerate()
                .map(|(i, (k, v))| (k.clone(), v.clone(), i + 1))
                .collect();
            let origin = a.manifest.display().to_string();
            if m.config_value("base_seed").is_none() {
                return Err(Error::format(origin, 0, "manifest lacks config.base_seed"));
            }
            let spec = ExperimentSpec::from_pairs(&pairs, &origin, || 0)?;
            run_experiment(&spec, &a.out_dir, threads)
        }
        other => Err(Error::param(format!(
            "replay supports experiment manifests only, got subcommand {other:?}"
        ))),
    }
}

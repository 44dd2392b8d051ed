//! Exact simulation of the continuous-time SIS process.
//!
//! An infected vertex recovers at rate `gamma`; a susceptible vertex `v` is
//! infected at rate `beta * |N(v) ∩ I(t)|`. The sampler is statistically
//! exact (no time discretisation) and deterministic for a given seed.

mod engine;
mod log;

use rand::seq::index;

pub use engine::SimOptions;
pub use log::{Event, EventKind, EventLog};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::seeds::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    beta: f64,
    gamma: f64,
}

impl EpidemicParams {
    /// `beta` is the per-infected-neighbour infection rate, `gamma` the
    /// recovery rate. Both must be positive and finite.
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param(format!("beta must be positive, got {beta}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be positive, got {gamma}")));
        }
        Ok(EpidemicParams { beta, gamma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// How the infected set at time 0 is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Explicit(Vec<Vertex>),
    /// `⌊fraction · n_active⌋` active vertices drawn without replacement,
    /// plus every active hub when `force_hubs` is set.
    RandomFraction {
        fraction: f64,
        force_hubs: bool,
        seed: u64,
    },
}

impl InitialCondition {
    /// The concrete infected set on `graph`, sorted and duplicate-free.
    pub fn resolve(&self, graph: &Graph) -> Result<Vec<Vertex>> {
        match self {
            InitialCondition::Explicit(set) => {
                let mut set = set.clone();
                set.sort_unstable();
                set.dedup();
                for &v in &set {
                    if v as usize >= graph.n() {
                        return Err(Error::param(format!(
                            "initial vertex {v} out of range for n={}",
                            graph.n()
                        )));
                    }
                    if !graph.is_active(v) {
                        return Err(Error::State(format!("initial vertex {v} is inactive")));
                    }
                }
                Ok(set)
            }
            &InitialCondition::RandomFraction {
                fraction,
                force_hubs,
                seed,
            } => {
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::param(format!(
                        "initial fraction {fraction} outside [0, 1]"
                    )));
                }
                let active: Vec<Vertex> = graph.active_vertices().collect();
                let k = (fraction * active.len() as f64).floor() as usize;
                let mut rng = rng_from_seed(seed);
                let mut set: Vec<Vertex> = index::sample(&mut rng, active.len(), k)
                    .into_iter()
                    .map(|i| active[i])
                    .collect();
                if force_hubs {
                    set.extend(graph.hub_labels().iter().filter(|&&h| graph.is_active(h)));
                }
                set.sort_unstable();
                set.dedup();
                Ok(set)
            }
        }
    }
}

/// Samples one trajectory on `[0, horizon]`. `horizon` may be infinite, in
/// which case the run stops only once the epidemic dies out.
pub fn simulate(
    graph: &Graph,
    params: EpidemicParams,
    init: &InitialCondition,
    horizon: f64,
    seed: u64,
) -> Result<EventLog> {
    simulate_with(graph, params, init, horizon, seed, &SimOptions::default())
}

pub fn simulate_with(
    graph: &Graph,
    params: EpidemicParams,
    init: &InitialCondition,
    horizon: f64,
    seed: u64,
    options: &SimOptions,
) -> Result<EventLog> {
    if !(horizon >= 0.0) {
        return Err(Error::param(format!("horizon must be non-negative, got {horizon}")));
    }
    let initial = init.resolve(graph)?;
    engine::run(graph, params, &initial, horizon, seed, options)
}

/// Continues the process for `extra` time units from a given infected set,
/// typically on a graph with vertices removed. Event times in the returned
/// log are offsets from the restart.
pub fn resume(
    graph: &Graph,
    infected: &[Vertex],
    params: EpidemicParams,
    extra: f64,
    seed: u64,
) -> Result<EventLog> {
    simulate(
        graph,
        params,
        &InitialCondition::Explicit(infected.to_vec()),
        extra,
        seed,
    )
}

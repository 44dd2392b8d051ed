//! Direct-method (Gillespie) sampler for the SIS process.
//!
//! Two event classes compete: recoveries at rate `gamma` per recoverable
//! infected vertex, and infections at rate `beta * c(v)` per susceptible
//! vertex `v` with `c(v)` infected neighbours. Infected vertices sit in a
//! swap-remove list for O(1) uniform choice; the integer pressures `c(v)`
//! of susceptible vertices sit in a Fenwick tree for O(log n) weighted
//! choice. Integer weights keep the running totals exact however long the
//! trajectory runs.

use rand::Rng;
use rand_distr::Exp1;

use super::log::{Event, EventKind, EventLog};
use super::EpidemicParams;
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::seeds::rng_from_seed;

/// Knobs beyond the plain SIS process.
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Infected vertices that never recover: permanent infection sources.
    /// Each must be in the initial infected set.
    pub pinned: Vec<Vertex>,
    /// Recount every vertex's infected-neighbour count from scratch after
    /// each event and fail on any mismatch with the cached counts.
    pub verify_counts: bool,
    /// Stop after this many events even if the horizon is not reached.
    pub max_events: Option<usize>,
}

#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
    total: u64,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
            total: 0,
        }
    }

    fn add(&mut self, idx: usize, delta: i64) {
        self.total = self.total.wrapping_add_signed(delta);
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

struct State<'g> {
    graph: &'g Graph,
    infected: Vec<bool>,
    pinned: Vec<bool>,
    /// Infected neighbours of every vertex.
    pressure: Vec<u32>,
    /// Infection weights: `pressure` for susceptible vertices, 0 otherwise.
    weights: Fenwick,
    recoverable: Vec<Vertex>,
    slot: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl<'g> State<'g> {
    fn new(graph: &'g Graph, initial: &[Vertex], pinned: &[Vertex]) -> Result<Self> {
        let n = graph.n();
        let mut state = State {
            graph,
            infected: vec![false; n],
            pinned: vec![false; n],
            pressure: vec![0; n],
            weights: Fenwick::new(n),
            recoverable: Vec::new(),
            slot: vec![NO_SLOT; n],
        };
        for &v in pinned {
            state.pinned[v as usize] = true;
        }
        for &v in initial {
            state.infected[v as usize] = true;
            if !state.pinned[v as usize] {
                state.slot[v as usize] = state.recoverable.len() as u32;
                state.recoverable.push(v);
            }
            for &u in graph.neighbors(v) {
                state.pressure[u as usize] += 1;
            }
        }
        for v in 0..n {
            if !state.infected[v] && state.pressure[v] > 0 {
                state.weights.add(v, i64::from(state.pressure[v]));
            }
        }
        Ok(state)
    }

    fn infect(&mut self, v: Vertex) {
        let vi = v as usize;
        debug_assert!(!self.infected[vi]);
        self.infected[vi] = true;
        self.weights.add(vi, -i64::from(self.pressure[vi]));
        if !self.pinned[vi] {
            self.slot[vi] = self.recoverable.len() as u32;
            self.recoverable.push(v);
        }
        for &u in self.graph.neighbors(v) {
            let ui = u as usize;
            self.pressure[ui] += 1;
            if !self.infected[ui] {
                self.weights.add(ui, 1);
            }
        }
    }

    fn recover(&mut self, v: Vertex) {
        let vi = v as usize;
        debug_assert!(self.infected[vi] && !self.pinned[vi]);
        self.infected[vi] = false;
        let s = self.slot[vi] as usize;
        self.recoverable.swap_remove(s);
        if let Some(&moved) = self.recoverable.get(s) {
            self.slot[moved as usize] = s as u32;
        }
        self.slot[vi] = NO_SLOT;
        self.weights.add(vi, i64::from(self.pressure[vi]));
        for &u in self.graph.neighbors(v) {
            let ui = u as usize;
            self.pressure[ui] -= 1;
            if !self.infected[ui] {
                self.weights.add(ui, -1);
            }
        }
    }

    fn verify(&self) -> Result<()> {
        let mut total = 0u64;
        for v in 0..self.graph.n() {
            let count = self
                .graph
                .neighbors(v as Vertex)
                .iter()
                .filter(|&&u| self.infected[u as usize])
                .count() as u32;
            if count != self.pressure[v] {
                return Err(Error::Internal(format!(
                    "vertex {v}: cached infected-neighbour count {} but recount {count}",
                    self.pressure[v]
                )));
            }
            if !self.infected[v] {
                total += u64::from(count);
            }
        }
        if total != self.weights.total {
            return Err(Error::Internal(format!(
                "infection weight total {} but recount {total}",
                self.weights.total
            )));
        }
        let recoverable = (0..self.graph.n())
            .filter(|&v| self.infected[v] && !self.pinned[v])
            .count();
        if recoverable != self.recoverable.len() {
            return Err(Error::Internal("recoverable list out of sync".into()));
        }
        Ok(())
    }
}

/// Samples the process from an already-resolved initial infected set.
///
/// `initial` must be sorted, duplicate-free, in range and active; the
/// public entry points in [`crate::sim`] enforce this.
pub(crate) fn run(
    graph: &Graph,
    params: EpidemicParams,
    initial: &[Vertex],
    horizon: f64,
    seed: u64,
    options: &SimOptions,
) -> Result<EventLog> {
    for &v in &options.pinned {
        if initial.binary_search(&v).is_err() {
            return Err(Error::State(format!(
                "pinned vertex {v} is not initially infected"
            )));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut state = State::new(graph, initial, &options.pinned)?;
    if options.verify_counts {
        state.verify()?;
    }
    let mut events = Vec::new();
    let mut t = 0.0f64;
    let beta = params.beta();
    let gamma = params.gamma();

    loop {
        if options.max_events.is_some_and(|cap| events.len() >= cap) {
            break;
        }
        let recovery_rate = gamma * state.recoverable.len() as f64;
        let infection_rate = beta * state.weights.total as f64;
        let total = recovery_rate + infection_rate;
        if total <= 0.0 {
            break;
        }
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        let next = t + dt;
        if next > horizon {
            break;
        }
        if next <= t {
            return Err(Error::Internal(format!(
                "event time tie at t={t} (rate {total})"
            )));
        }
        t = next;

        let event = if rng.random::<f64>() * total < recovery_rate {
            let v = state.recoverable[rng.random_range(0..state.recoverable.len())];
            state.recover(v);
            Event { time: t, vertex: v, kind: EventKind::Recovery }
        } else {
            let target = rng.random_range(0..state.weights.total);
            let v = state.weights.find(target) as Vertex;
            if state.infected[v as usize] {
                return Err(Error::Internal(format!("selected infected vertex {v} for infection")));
            }
            state.infect(v);
            Event { time: t, vertex: v, kind: EventKind::Infection }
        };
        events.push(event);
        if options.verify_counts {
            state.verify()?;
        }
    }

    Ok(EventLog::from_parts_unchecked(horizon, graph.n(), initial.to_vec(), events))
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::NodeTimeline;
use crate::graph::Vertex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Infection,
    Recovery,
}

impl EventKind {
    fn tag(self) -> char {
        match self {
            EventKind::Infection => 'I',
            EventKind::Recovery => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub vertex: Vertex,
    pub kind: EventKind,
}

/// Every infection and recovery observed on `[0, horizon]`, in time order,
/// together with the infected set at time 0.
///
/// Infection intervals are half-open: a vertex is infected at its infection
/// timestamp and susceptible at its recovery timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    horizon: f64,
    n: usize,
    initial: Vec<Vertex>,
    events: Vec<Event>,
}

impl EventLog {
    /// Assembles a log, checking ordering, ranges and per-vertex alternation.
    pub fn new(horizon: f64, n: usize, initial: Vec<Vertex>, events: Vec<Event>) -> Result<Self> {
        let log = EventLog::from_parts_unchecked(horizon, n, initial, events);
        log.validate()?;
        Ok(log)
    }

    pub(crate) fn from_parts_unchecked(
        horizon: f64,
        n: usize,
        mut initial: Vec<Vertex>,
        events: Vec<Event>,
    ) -> Self {
        initial.sort_unstable();
        initial.dedup();
        EventLog {
            horizon,
            n,
            initial,
            events,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0) {
            return Err(Error::Data(format!("horizon {} is negative", self.horizon)));
        }
        let mut infected = vec![false; self.n];
        for &v in &self.initial {
            let slot = infected
                .get_mut(v as usize)
                .ok_or_else(|| Error::Data(format!("initial vertex {v} out of range")))?;
            *slot = true;
        }
        let mut last = 0.0f64;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time > 0.0 && e.time <= self.horizon) {
                return Err(Error::Data(format!(
                    "event {i} at time {} outside (0, {}]",
                    e.time, self.horizon
                )));
            }
            if i > 0 && e.time <= last {
                return Err(Error::Data(format!(
                    "event {i} at time {} does not follow {last}",
                    e.time
                )));
            }
            last = e.time;
            let state = infected
                .get_mut(e.vertex as usize)
                .ok_or_else(|| Error::Data(format!("event vertex {} out of range", e.vertex)))?;
            match (e.kind, *state) {
                (EventKind::Infection, false) => *state = true,
                (EventKind::Recovery, true) => *state = false,
                (kind, _) => {
                    return Err(Error::Data(format!(
                        "vertex {} has {kind:?} at {} out of alternation",
                        e.vertex, e.time
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Vertices infected at time 0, sorted.
    pub fn initial_infected(&self) -> &[Vertex] {
        &self.initial
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn infection_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Infection)
            .count()
    }

    /// The log restricted to `[0, t]`. Because the observation of `[0, t]`
    /// does not depend on what happens later, this equals the log of the
    /// same trajectory stopped at `t`.
    pub fn truncate(&self, t: f64) -> Result<EventLog> {
        self.check_time(t)?;
        let end = self.events.partition_point(|e| e.time <= t);
        Ok(EventLog {
            horizon: t,
            n: self.n,
            initial: self.initial.clone(),
            events: self.events[..end].to_vec(),
        })
    }

    /// Infected set at time `t`, sorted.
    pub fn infected_at(&self, t: f64) -> Result<Vec<Vertex>> {
        self.check_time(t)?;
        let mut infected = vec![false; self.n];
        for &v in &self.initial {
            infected[v as usize] = true;
        }
        for e in self.events.iter().take_while(|e| e.time <= t) {
            infected[e.vertex as usize] = e.kind == EventKind::Infection;
        }
        Ok(infected
            .iter()
            .enumerate()
            .filter_map(|(v, &inf)| inf.then_some(v as Vertex))
            .collect())
    }

    /// Infected set at the end of the window.
    pub fn final_infected(&self) -> Vec<Vertex> {
        self.infected_at(self.horizon).expect("horizon is in range")
    }

    /// Per-vertex infection and recovery times. Initially infected vertices
    /// get a first infection time of 0.
    pub fn timelines(&self) -> Vec<NodeTimeline> {
        let mut out: Vec<NodeTimeline> = (0..self.n as Vertex).map(NodeTimeline::susceptible).collect();
        for &v in &self.initial {
            out[v as usize] = NodeTimeline::initially_infected(v);
        }
        for e in &self.events {
            let tl = &mut out[e.vertex as usize];
            match e.kind {
                EventKind::Infection => tl.infections.push(e.time),
                EventKind::Recovery => tl.recoveries.push(e.time),
            }
        }
        out
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(Error::param(format!(
                "time {t} outside observation window [0, {}]",
                self.horizon
            )))
        }
    }

    /// Text form:
    ///
    /// ```text
    /// T=<horizon> n=<vertices>
    /// #init v1 v2 ...
    /// <time> <vertex> <I|R>
    /// ```
    ///
    /// Times carry 17 significant digits so the text round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 * (self.events.len() + 2));
        writeln!(out, "T={} n={}", fmt_time(self.horizon), self.n).unwrap();
        out.push_str("#init");
        for v in &self.initial {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
        for e in &self.events {
            writeln!(out, "{} {} {}", fmt_time(e.time), e.vertex, e.kind.tag()).unwrap();
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<EventLog> {
        let mut lines = text.lines().enumerate();
        let (horizon, n) = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::format(origin, 1, "missing \"T=<horizon> n=<vertices>\" header"));
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            break parse_header(line).map_err(|m| Error::format(origin, idx + 1, m))?;
        };

        let mut initial = Vec::new();
        let mut events = Vec::new();
        for (idx, raw) in lines {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::format(origin, lineno, msg);
            if let Some(rest) = line.strip_prefix("#init") {
                for tok in rest.split_whitespace() {
                    let v: Vertex = tok.parse().map_err(|_| bad(format!("bad vertex {tok:?}")))?;
                    if v as usize >= n {
                        return Err(bad(format!("vertex {v} out of range for n={n}")));
                    }
                    initial.push(v);
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(t), Some(v), Some(k), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(format!("expected \"<time> <vertex> <I|R>\", got {line:?}")));
            };
            let time: f64 = t.parse().map_err(|_| bad(format!("bad time {t:?}")))?;
            let vertex: Vertex = v.parse().map_err(|_| bad(format!("bad vertex {v:?}")))?;
            if vertex as usize >= n {
                return Err(bad(format!("vertex {vertex} out of range for n={n}")));
            }
            let kind = match k {
                "I" => EventKind::Infection,
                "R" => EventKind::Recovery,
                other => return Err(bad(format!("bad event kind {other:?}"))),
            };
            events.push(Event { time, vertex, kind });
        }
        let log = EventLog::from_parts_unchecked(horizon, n, initial, events);
        log.validate().map_err(|e| match e {
            Error::Data(msg) => Error::format(origin, 0, msg),
            other => other,
        })?;
        Ok(log)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EventLog> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EventLog::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn fmt_time(t: f64) -> String {
    if t.is_finite() {
        format!("{t:.16e}")
    } else {
        "inf".to_string()
    }
}

fn parse_header(line: &str) -> std::result::Result<(f64, usize), String> {
    let mut horizon = None;
    let mut n = None;
    for tok in line.split_whitespace() {
        if let Some(v) = tok.strip_prefix("T=") {
            horizon = Some(v.parse::<f64>().map_err(|_| format!("bad horizon {v:?}"))?);
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|_| format!("bad vertex count {v:?}"))?);
        } else {
            return Err(format!("unexpected header token {tok:?}"));
        }
    }
    match (horizon, n) {
        (Some(h), Some(n)) if h >= 0.0 => Ok((h, n)),
        _ => Err(format!("expected \"T=<horizon> n=<vertices>\", got {line:?}")),
    }
}

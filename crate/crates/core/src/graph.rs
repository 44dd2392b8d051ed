//! Undirected simple contact networks.
//!
//! Vertices are dense `0..n` ids. Removing vertices masks them as inactive
//! instead of re-indexing, so event logs recorded before and after an
//! intervention refer to the same ids.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

pub type Vertex = u32;

/// Restart budget for the configuration model before giving up.
const MAX_PAIRING_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    hubs: Vec<Vertex>,
    active: Vec<bool>,
}

/// Parameters of the planted-hub benchmark: a random `d`-regular graph on
/// `n_low` vertices plus `m` hubs of degree `hub_degree` attached to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSpec {
    pub n_low: usize,
    pub d: usize,
    pub m: usize,
    pub hub_degree: usize,
    pub seed: u64,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        check_regular_params(self.n_low, self.d)?;
        if self.m > 0 && (self.hub_degree == 0 || self.hub_degree > self.n_low) {
            return Err(Error::param(format!(
                "hub degree {} must lie in 1..={}",
                self.hub_degree, self.n_low
            )));
        }
        Ok(())
    }

    /// Builds the benchmark graph. The regular base and the hub attachment
    /// use independent streams derived from `seed`.
    pub fn build(&self) -> Result<Graph> {
        self.validate()?;
        let base = generate_regular(
            self.n_low,
            self.d,
            crate::seeds::derive_seed(self.seed, "regular"),
        )?;
        add_hubs(
            &base,
            self.m,
            self.hub_degree,
            crate::seeds::derive_seed(self.seed, "hubs"),
        )
    }

    pub fn n(&self) -> usize {
        self.n_low + self.m
    }
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity and ranges.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
        hubs: impl IntoIterator<Item = Vertex>,
    ) -> Result<Graph> {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            check_edge(n, u, v)?;
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for (v, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::param(format!("duplicate edge at vertex {v}")));
            }
        }
        let hubs: BTreeSet<Vertex> = hubs.into_iter().collect();
        if let Some(&h) = hubs.iter().find(|&&h| h as usize >= n) {
            return Err(Error::param(format!("hub label {h} out of range for n={n}")));
        }
        Ok(Graph {
            adjacency,
            hubs: hubs.into_iter().collect(),
            active: vec![true; n],
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency
            .get(u as usize)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            let u = u as Vertex;
            list.iter().filter(move |&&v| v > u).map(move |&v| (u, v))
        })
    }

    /// Ground-truth high-degree vertices, sorted. Empty for loaded graphs
    /// that carry no `#hub` lines.
    pub fn hub_labels(&self) -> &[Vertex] {
        &self.hubs
    }

    pub fn is_active(&self, v: Vertex) -> bool {
        self.active[v as usize]
    }

    pub fn active_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n() as Vertex).filter(|&v| self.is_active(v))
    }

    pub fn inactive_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n() as Vertex).filter(|&v| !self.is_active(v))
    }

    /// Checks every structural invariant. Used by tests and after loading.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for (v, list) in self.adjacency.iter().enumerate() {
            let v = v as Vertex;
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Internal(format!("adjacency of {v} not strictly sorted")));
            }
            for &u in list {
                if u == v || u as usize >= n {
                    return Err(Error::Internal(format!("bad neighbor {u} of {v}")));
                }
                if !self.has_edge(u, v) {
                    return Err(Error::Internal(format!("edge {v}-{u} not symmetric")));
                }
                if !self.is_active(u) || !self.is_active(v) {
                    return Err(Error::Internal(format!("edge {v}-{u} touches inactive vertex")));
                }
            }
        }
        if self.hubs.iter().any(|&h| h as usize >= n) {
            return Err(Error::Internal("hub label out of range".into()));
        }
        Ok(())
    }

    /// Induced subgraph on the complement of `removed`. Removed vertices keep
    /// their ids, lose all edges and are marked inactive.
    pub fn remove_vertices(&self, removed: &[Vertex]) -> Result<Graph> {
        let n = self.n();
        let mut mask = vec![false; n];
        for &v in removed {
            if v as usize >= n {
                return Err(Error::param(format!("vertex {v} out of range for n={n}")));
            }
            mask[v as usize] = true;
        }
        let adjacency = self
            .adjacency
            .iter()
            .enumerate()
            .map(|(v, list)| {
                if mask[v] {
                    Vec::new()
                } else {
                    list.iter().copied().filter(|&u| !mask[u as usize]).collect()
                }
            })
            .collect();
        let active = self
            .active
            .iter()
            .zip(&mask)
            .map(|(&a, &gone)| a && !gone)
            .collect();
        Ok(Graph {
            adjacency,
            hubs: self.hubs.clone(),
            active,
        })
    }

    /// Serialises to the edge-list text format read by [`Graph::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n={}", self.n()).unwrap();
        for h in &self.hubs {
            writeln!(out, "#hub {h}").unwrap();
        }
        for v in self.inactive_vertices() {
            writeln!(out, "#inactive {v}").unwrap();
        }
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Parses the edge-list format:
    ///
    /// ```text
    /// n=<vertex count>
    /// #hub <v>          (zero or more)
    /// #inactive <v>     (zero or more)
    /// <u> <v>           (one undirected edge per line)
    /// ```
    ///
    /// Blank lines and lines starting with `# ` or `//` are ignored. Without
    /// an `n=` header the vertex count is one more than the largest id seen.
    /// `origin` only labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Graph> {
        let mut declared_n: Option<usize> = None;
        let mut edges: Vec<(Vertex, Vertex, usize)> = Vec::new();
        let mut hubs: Vec<(Vertex, usize)> = Vec::new();
        let mut inactive: Vec<(Vertex, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("# ") || line == "#" || line.starts_with("//") {
                continue;
            }
            let bad = |msg: String| Error::format(origin, lineno, msg);
            if let Some(rest) = line.strip_prefix("n=") {
                if declared_n.is_some() {
                    return Err(bad("repeated n= header".into()));
                }
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| bad(format!("bad vertex count {rest:?}")))?;
                if n > Vertex::MAX as usize {
                    return Err(bad(format!("vertex count {n} too large")));
                }
                declared_n = Some(n);
            } else if let Some(rest) = line.strip_prefix("#hub") {
                let v = parse_vertex(rest.trim()).map_err(bad)?;
                hubs.push((v, lineno));
            } else if let Some(rest) = line.strip_prefix("#inactive") {
                let v = parse_vertex(rest.trim()).map_err(bad)?;
                inactive.push((v, lineno));
            } else if line.starts_with('#') {
                return Err(bad(format!("unknown directive {line:?}")));
            } else {
                let mut parts = line.split_whitespace();
                let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(bad(format!("expected \"u v\", got {line:?}")));
                };
                let u = parse_vertex(a).map_err(bad)?;
                let v = parse_vertex(b).map_err(bad)?;
                if u == v {
                    return Err(bad(format!("self-loop at vertex {u}")));
                }
                edges.push((u, v, lineno));
            }
        }

        let max_id = edges
            .iter()
            .flat_map(|&(u, v, _)| [u, v])
            .chain(hubs.iter().map(|&(h, _)| h))
            .chain(inactive.iter().map(|&(h, _)| h))
            .max();
        let n = match declared_n {
            Some(n) => n,
            None => max_id.map_or(0, |m| m as usize + 1),
        };

        let mut adjacency: Vec<Vec<Vertex>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v, lineno) in &edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::format(
                        origin,
                        lineno,
                        format!("vertex {w} out of range for n={n}"),
                    ));
                }
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::format(origin, lineno, format!("duplicate edge {u} {v}")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut hub_set = BTreeSet::new();
        for &(h, lineno) in &hubs {
            if h as usize >= n {
                return Err(Error::format(origin, lineno, format!("hub {h} out of range for n={n}")));
            }
            hub_set.insert(h);
        }
        let mut active = vec![true; n];
        for &(v, lineno) in &inactive {
            if v as usize >= n {
                return Err(Error::format(origin, lineno, format!("vertex {v} out of range for n={n}")));
            }
            if !adjacency[v as usize].is_empty() {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("inactive vertex {v} has edges"),
                ));
            }
            active[v as usize] = false;
        }

        Ok(Graph {
            adjacency,
            hubs: hub_set.into_iter().collect(),
            active,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }
}

fn parse_vertex(s: &str) -> std::result::Result<Vertex, String> {
    s.parse::<Vertex>().map_err(|_| format!("bad vertex id {s:?}"))
}

fn check_edge(n: usize, u: Vertex, v: Vertex) -> Result<()> {
    if u as usize >= n || v as usize >= n {
        return Err(Error::param(format!("edge {u}-{v} out of range for n={n}")));
    }
    if u == v {
        return Err(Error::param(format!("self-loop at vertex {u}")));
    }
    Ok(())
}

fn check_regular_params(n_low: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::param("regular degree must be at least 1"));
    }
    if d >= n_low {
        return Err(Error::param(format!(
            "regular degree {d} must be below vertex count {n_low}"
        )));
    }
    if (n_low * d) % 2 != 0 {
        return Err(Error::param(format!(
            "n_low * d = {} is odd; no {d}-regular graph exists",
            n_low * d
        )));
    }
    if n_low > Vertex::MAX as usize {
        return Err(Error::param(format!("vertex count {n_low} too large")));
    }
    Ok(())
}

/// Random simple `d`-regular graph on `n_low` vertices.
///
/// Configuration model: shuffle `n_low * d` stubs, pair them consecutively,
/// and restart from scratch whenever a self-loop or multi-edge appears, so
/// the result is uniform over simple `d`-regular graphs.
pub fn generate_regular(n_low: usize, d: usize, seed: u64) -> Result<Graph> {
    check_regular_params(n_low, d)?;
    let mut rng = rng_from_seed(seed);
    let mut stubs: Vec<Vertex> = (0..n_low)
        .flat_map(|v| std::iter::repeat_n(v as Vertex, d))
        .collect();
    let mut adjacency: Vec<Vec<Vertex>> = vec![Vec::with_capacity(d); n_low];

    'attempt: for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        adjacency.iter_mut().for_each(Vec::clear);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adjacency[u as usize].contains(&v) {
                continue 'attempt;
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        return Ok(Graph {
            adjacency,
            hubs: Vec::new(),
            active: vec![true; n_low],
        });
    }
    Err(Error::param(format!(
        "no simple {d}-regular pairing on {n_low} vertices after {MAX_PAIRING_ATTEMPTS} attempts"
    )))
}

/// Appends `m` hubs, each joined to `hub_degree` distinct base vertices drawn
/// uniformly without replacement. Hubs never connect to each other. The new
/// vertices become the graph's hub labels.
pub fn add_hubs(base: &Graph, m: usize, hub_degree: usize, seed: u64) -> Result<Graph> {
    let base_n = base.n();
    if m == 0 {
        return Ok(base.clone());
    }
    if hub_degree > base_n {
        return Err(Error::param(format!(
            "hub degree {hub_degree} exceeds base vertex count {base_n}"
        )));
    }
    if base_n + m > Vertex::MAX as usize {
        return Err(Error::param("vertex count too large"));
    }
    let mut rng = rng_from_seed(seed);
    let mut adjacency = base.adjacency.clone();
    adjacency.resize(base_n + m, Vec::new());
    let mut active = base.active.clone();
    active.resize(base_n + m, true);

    for i in 0..m {
        let hub = (base_n + i) as Vertex;
        let mut picked: Vec<Vertex> = index::sample(&mut rng, base_n, hub_degree)
            .into_iter()
            .map(|v| v as Vertex)
            .collect();
        picked.sort_unstable();
        for &v in &picked {
            if !active[v as usize] {
                return Err(Error::param(format!("cannot attach hub to inactive vertex {v}")));
            }
            adjacency[v as usize].push(hub);
        }
        adjacency[hub as usize] = picked;
    }
    // Hub ids exceed every base id, so pushing kept base lists sorted.
    Ok(Graph {
        adjacency,
        hubs: (base_n..base_n + m).map(|v| v as Vertex).collect(),
        active,
    })
}

/// Small fixed graphs used by tests and the oracle tooling.
pub mod named {
    use super::{Graph, Vertex};

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n as Vertex).map(|v| (v - 1, v)), []).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let n32 = n as Vertex;
        Graph::from_edges(n, (0..n32).map(|v| (v, (v + 1) % n32)), []).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let n32 = n as Vertex;
        let edges = (0..n32).flat_map(|u| (u + 1..n32).map(move |v| (u, v)));
        Graph::from_edges(n, edges, []).unwrap()
    }

    /// Star with centre 0 and `leaves` leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves as Vertex).map(|v| (0, v)), []).unwrap()
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_edges(n, [], []).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn benchmark_base_is_four_regular() {
        let g = generate_regular(1000, 4, 7).unwrap();
        assert_eq!(g.n(), 1000);
        assert!(g.degrees().iter().all(|&k| k == 4));
        g.validate().unwrap();
    }

    #[test]
    fn two_vertex_one_regular_is_an_edge() {
        let g = generate_regular(2, 1, 0).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn four_vertex_two_regular_is_c4() {
        for seed in 0..20 {
            let g = generate_regular(4, 2, seed).unwrap();
            assert_eq!(g.edge_count(), 4);
            assert!(g.degrees().iter().all(|&k| k == 2));
            // C4: every vertex misses exactly one other vertex.
            for v in 0..4 {
                let non_nbrs = (0..4).filter(|&u| u != v && !g.has_edge(v, u)).count();
                assert_eq!(non_nbrs, 1);
            }
        }
    }

    #[test]
    fn infeasible_regular_params_rejected() {
        assert!(matches!(generate_regular(5, 3, 0), Err(Error::Parameter(_))));
        assert!(matches!(generate_regular(4, 4, 0), Err(Error::Parameter(_))));
        assert!(matches!(generate_regular(4, 0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn hubs_on_benchmark() {
        let base = generate_regular(1000, 4, 7).unwrap();
        let g = add_hubs(&base, 10, 100, 3).unwrap();
        assert_eq!(g.n(), 1010);
        assert_eq!(g.hub_labels(), (1000..1010).collect::<Vec<_>>().as_slice());
        for h in g.hub_labels() {
            assert_eq!(g.degree(*h), 100);
            assert!(g.neighbors(*h).iter().all(|&u| u < 1000));
        }
        for v in 0..1000 {
            let k = g.degree(v);
            assert!((4..=14).contains(&k), "vertex {v} has degree {k}");
            let from_hubs = g.neighbors(v).iter().filter(|&&u| u >= 1000).count();
            assert_eq!(k, base.degree(v) + from_hubs);
        }
        for (u, v) in base.edges() {
            assert!(g.has_edge(u, v));
        }
        g.validate().unwrap();
    }

    #[test]
    fn zero_hubs_is_identity() {
        let base = named::cycle(6);
        assert_eq!(add_hubs(&base, 0, 5, 0).unwrap(), base);
    }

    #[test]
    fn hub_on_single_edge_makes_triangle() {
        let g = add_hubs(&named::path(2), 1, 2, 0).unwrap();
        assert_eq!(g, Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)], [2]).unwrap());
    }

    #[test]
    fn hub_degree_above_base_rejected() {
        assert!(matches!(
            add_hubs(&named::path(3), 1, 4, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn remove_from_triangle() {
        let g = named::complete(3).remove_vertices(&[2]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(!g.is_active(2));
        assert_eq!(g.n(), 3);
        g.validate().unwrap();
    }

    #[test]
    fn remove_nothing_is_identity() {
        let g = named::cycle(5);
        assert_eq!(g.remove_vertices(&[]).unwrap(), g);
    }

    #[test]
    fn remove_star_center() {
        let g = named::star(4).remove_vertices(&[0]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.active_vertices().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn self_loop_line_is_format_error() {
        let err = Graph::parse("n=3\n0 1\n0 0\n", "g.txt").unwrap_err();
        match err {
            Error::Format { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("self-loop"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_out_of_range_edges_rejected() {
        let dup = Graph::parse("n=3\n0 1\n1 0\n", "g").unwrap_err();
        assert!(matches!(dup, Error::Format { line: 3, .. }));
        let oob = Graph::parse("n=3\n0 3\n", "g").unwrap_err();
        assert!(matches!(oob, Error::Format { line: 2, .. }));
        let junk = Graph::parse("n=3\n0 1 2\n", "g").unwrap_err();
        assert!(matches!(junk, Error::Format { line: 2, .. }));
    }

    #[test]
    fn header_only_file_is_edgeless() {
        let g = Graph::parse("n=3\n", "g").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn benchmark_round_trips_through_file() {
        let spec = GraphSpec { n_low: 1000, d: 4, m: 10, hub_degree: 100, seed: 11 };
        let g = spec.build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.save(&path).unwrap();
        assert_eq!(Graph::load(&path).unwrap(), g);

        let masked = g.remove_vertices(&[3, 1005]).unwrap();
        assert_eq!(Graph::parse(&masked.to_edge_list(), "m").unwrap(), masked);
    }

    #[test]
    fn spec_build_is_deterministic() {
        let spec = GraphSpec { n_low: 200, d: 4, m: 3, hub_degree: 20, seed: 5 };
        assert_eq!(spec.build().unwrap(), spec.build().unwrap());
        let other = GraphSpec { seed: 6, ..spec };
        assert_ne!(spec.build().unwrap(), other.build().unwrap());
    }

    proptest! {
        #[test]
        fn generated_graphs_satisfy_invariants(
            half_n in 3usize..60,
            d in 1usize..5,
            m in 0usize..4,
            seed in any::<u64>(),
        ) {
            let n_low = half_n * 2;
            prop_assume!(d < n_low);
            let hub_degree = 1 + (seed as usize % n_low);
            let spec = GraphSpec { n_low, d, m, hub_degree, seed };
            let g = spec.build().unwrap();
            g.validate().unwrap();
            prop_assert_eq!(g.n(), n_low + m);
            for h in g.hub_labels() {
                prop_assert_eq!(g.degree(*h), hub_degree);
            }
            let removed: Vec<Vertex> = (0..g.n() as Vertex).filter(|v| v % 3 == 0).collect();
            let r = g.remove_vertices(&removed).unwrap();
            r.validate().unwrap();
            for v in r.active_vertices() {
                prop_assert!(r.neighbors(v).iter().all(|u| u % 3 != 0));
            }
        }
    }
}

//! Exact transient analysis of the SIS chain on tiny graphs.
//!
//! States are subsets of infected vertices, encoded as bitmasks (bit `v` set
//! means `v` is infected), so a graph on `n` vertices has `2^n` states. The
//! transient law `p(t) = p(0) exp(tQ)` is computed two independent ways:
//! uniformization (Poisson-weighted powers of a stochastic matrix) and a
//! plain Taylor series in `Q` over short sub-steps. Both are accurate to
//! well below `1e-9` for the graphs this is meant for.

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::sim::EpidemicParams;

pub const MAX_VERTICES: usize = 12;

/// Truncation tolerance for each uniformization or series sub-step.
const STEP_TOL: f64 = 1e-15;

/// Sparse generator of the SIS chain. Each state has at most `n`
/// transitions: one recovery per infected vertex and one infection per
/// susceptible vertex with an infected neighbour.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    n: usize,
    transitions: Vec<Vec<(u32, f64)>>,
    exit: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniformization,
    Series,
}

pub fn state_of(vertices: &[Vertex]) -> u32 {
    vertices.iter().fold(0, |s, &v| s | (1 << v))
}

pub fn build_generator(graph: &Graph, params: EpidemicParams) -> Result<GeneratorMatrix> {
    let n = graph.n();
    if n > MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "oracle supports at most {MAX_VERTICES} vertices, graph has {n}"
        )));
    }
    let neighbor_masks: Vec<u32> = (0..n as Vertex)
        .map(|v| state_of(graph.neighbors(v)))
        .collect();
    let dim = 1usize << n;
    let mut transitions = Vec::with_capacity(dim);
    let mut exit = Vec::with_capacity(dim);
    for state in 0..dim as u32 {
        let mut row = Vec::new();
        for (v, &mask) in neighbor_masks.iter().enumerate() {
            let bit = 1u32 << v;
            if state & bit != 0 {
                row.push((state & !bit, params.gamma()));
            } else {
                let pressure = (mask & state).count_ones();
                if pressure > 0 {
                    row.push((state | bit, params.beta() * f64::from(pressure)));
                }
            }
        }
        exit.push(row.iter().map(|&(_, r)| r).sum());
        transitions.push(row);
    }
    Ok(GeneratorMatrix { n, transitions, exit })
}

impl GeneratorMatrix {
    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.transitions.len()
    }

    /// Entry `Q[from][to]`.
    pub fn rate(&self, from: u32, to: u32) -> f64 {
        if from == to {
            return -self.exit[from as usize];
        }
        self.transitions[from as usize]
            .iter()
            .find(|&&(s, _)| s == to)
            .map_or(0.0, |&(_, r)| r)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut out = vec![vec![0.0; dim]; dim];
        for (i, row) in self.transitions.iter().enumerate() {
            out[i][i] = -self.exit[i];
            for &(j, r) in row {
                out[i][j as usize] = r;
            }
        }
        out
    }

    fn max_exit(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// `out = p Q` for a row vector `p`.
    fn apply(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.transitions.iter().enumerate() {
            let mass = p[i];
            if mass == 0.0 {
                continue;
            }
            out[i] -= mass * self.exit[i];
            for &(j, r) in row {
                out[j as usize] += mass * r;
            }
        }
    }

    /// Distribution over states at time `t` starting from `p0`.
    pub fn transient(&self, p0: &[f64], t: f64, method: Method) -> Result<Vec<f64>> {
        if p0.len() != self.dim() {
            return Err(Error::param(format!(
                "initial distribution has {} entries, expected {}",
                p0.len(),
                self.dim()
            )));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param(format!("time must be finite and non-negative, got {t}")));
        }
        let rate = self.max_exit();
        if t == 0.0 || rate == 0.0 {
            return Ok(p0.to_vec());
        }
        Ok(match method {
            Method::Uniformization => self.uniformize(p0, t, rate),
            Method::Series => self.series(p0, t, rate),
        })
    }

    fn uniformize(&self, p0: &[f64], t: f64, rate: f64) -> Vec<f64> {
        // Keep the Poisson mean per sub-step small enough that its weights
        // never underflow.
        let steps = (rate * t / 8.0).ceil().max(1.0) as usize;
        let lambda_dt = rate * t / steps as f64;
        let mut p = p0.to_vec();
        let mut term = vec![0.0; p.len()];
        let mut scratch = vec![0.0; p.len()];
        for _ in 0..steps {
            // P = I + Q / rate is stochastic; accumulate sum_k w_k p P^k.
            term.copy_from_slice(&p);
            let mut weight = (-lambda_dt).exp();
            let mut covered = weight;
            let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
            let mut k = 0u32;
            while 1.0 - covered > STEP_TOL && k < 10_000 {
                k += 1;
                self.apply(&term, &mut scratch);
                for (x, dq) in term.iter_mut().zip(&scratch) {
                    *x += dq / rate;
                }
                weight *= lambda_dt / f64::from(k);
                covered += weight;
                for (a, x) in acc.iter_mut().zip(&term) {
                    *a += weight * x;
                }
            }
            p = acc;
        }
        p
    }

    fn series(&self, p0: &[f64], t: f64, rate: f64) -> Vec<f64> {
        let steps = (rate * t / 0.5).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut p = p0.to_vec();
        let mut term = vec![0.0; p.len()];
        let mut scratch = vec![0.0; p.len()];
        for _ in 0..steps {
            term.copy_from_slice(&p);
            let mut sum = p.clone();
            for k in 1..200u32 {
                self.apply(&term, &mut scratch);
                let scale = dt / f64::from(k);
                for (x, dq) in term.iter_mut().zip(&scratch) {
                    *x = dq * scale;
                }
                for (s, x) in sum.iter_mut().zip(&term) {
                    *s += x;
                }
                if term.iter().map(|x| x.abs()).sum::<f64>() < STEP_TOL {
                    break;
                }
            }
            p = sum;
        }
        p
    }
}

/// Point mass on `state`.
pub fn point_mass(dim: usize, state: u32) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    p[state as usize] = 1.0;
    p
}

/// `P(v ∈ I(t))` for each vertex, given the chain starts in `init`.
pub fn marginals(gen: &GeneratorMatrix, init: u32, t: f64, method: Method) -> Result<Vec<f64>> {
    if (init as usize) >= gen.dim() {
        return Err(Error::param(format!("initial state {init:#b} out of range")));
    }
    let p = gen.transient(&point_mass(gen.dim(), init), t, method)?;
    Ok((0..gen.vertices())
        .map(|v| {
            p.iter()
                .enumerate()
                .filter(|&(s, _)| s & (1 << v) != 0)
                .map(|(_, &x)| x)
                .sum()
        })
        .collect())
}

/// `P(v ∈ I(t))` by uniformization.
pub fn marginal_infection_prob(gen: &GeneratorMatrix, init: u32, t: f64, v: Vertex) -> Result<f64> {
    if v as usize >= gen.vertices() {
        return Err(Error::param(format!("vertex {v} out of range")));
    }
    Ok(marginals(gen, init, t, Method::Uniformization)?[v as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;
    use approx::assert_abs_diff_eq;

    fn params() -> EpidemicParams {
        EpidemicParams::new(1.0, 0.5).unwrap()
    }

    #[test]
    fn single_vertex_generator() {
        let gen = build_generator(&named::empty(1), params()).unwrap();
        assert_eq!(gen.to_dense(), vec![vec![0.0, 0.0], vec![0.5, -0.5]]);
    }

    #[test]
    fn edge_and_triangle_rates() {
        let edge = build_generator(&named::path(2), params()).unwrap();
        assert_eq!(edge.rate(0b01, 0b11), 1.0);
        assert_eq!(edge.rate(0b01, 0b00), 0.5);
        assert_eq!(edge.rate(0b01, 0b10), 0.0);

        let tri = build_generator(&named::complete(3), params()).unwrap();
        assert_eq!(tri.rate(0b011, 0b111), 2.0);
        assert_eq!(tri.rate(0b011, 0b001), 0.5);
        assert_eq!(tri.rate(0b011, 0b010), 0.5);
        assert_eq!(tri.rate(0b011, 0b011), -3.0);
    }

    #[test]
    fn generator_invariants_hold() {
        for g in [named::path(5), named::star(4), named::complete(4), named::cycle(6)] {
            let dense = build_generator(&g, EpidemicParams::new(0.7, 1.3).unwrap())
                .unwrap()
                .to_dense();
            for (i, row) in dense.iter().enumerate() {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
                for (j, &q) in row.iter().enumerate() {
                    if i != j {
                        assert!(q >= 0.0);
                        if q > 0.0 {
                            assert_eq!((i ^ j).count_ones(), 1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn too_many_vertices_is_capacity_error() {
        let err = build_generator(&named::path(13), params()).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn isolated_vertex_decays_exponentially() {
        let gen = build_generator(&named::empty(1), params()).unwrap();
        let p = marginal_infection_prob(&gen, 1, 2.0, 0).unwrap();
        assert_abs_diff_eq!(p, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.367_879, epsilon = 1e-6);
    }

    #[test]
    fn time_zero_is_indicator() {
        let gen = build_generator(&named::path(3), params()).unwrap();
        assert_eq!(marginals(&gen, 0b101, 0.0, Method::Uniformization).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn two_methods_agree() {
        let graphs = [named::path(2), named::path(3), named::complete(4), named::star(4), named::path(5)];
        for g in graphs {
            let gen = build_generator(&g, params()).unwrap();
            for init in 1..gen.dim() as u32 {
                for t in [0.5, 1.0, 2.0, 7.5] {
                    let a = marginals(&gen, init, t, Method::Uniformization).unwrap();
                    let b = marginals(&gen, init, t, Method::Series).unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        assert_abs_diff_eq!(x, y, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn edge_value_frozen() {
        // Edge, beta=1, gamma=0.5, vertex 0 infected, t=1. Expected values
        // from scipy.linalg.expm on the hand-written 4x4 generator.
        let gen = build_generator(&named::path(2), params()).unwrap();
        let u = marginal_infection_prob(&gen, 0b01, 1.0, 1).unwrap();
        let s = marginals(&gen, 0b01, 1.0, Method::Series).unwrap();
        assert_abs_diff_eq!(u, 0.412_275_620_553_116_8, epsilon = 1e-9);
        assert_abs_diff_eq!(s[1], 0.412_275_620_553_116_8, epsilon = 1e-9);
        assert_abs_diff_eq!(s[0], 0.635_405_780_701_546_7, epsilon = 1e-9);
    }

    #[test]
    fn probability_is_conserved() {
        let gen = build_generator(&named::complete(5), params()).unwrap();
        for t in [0.1, 1.0, 10.0, 40.0] {
            for m in [Method::Uniformization, Method::Series] {
                let p = gen.transient(&point_mass(gen.dim(), 0b10011), t, m).unwrap();
                assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
                assert!(p.iter().all(|&x| x > -1e-12));
            }
        }
    }

    #[test]
    fn empty_state_is_absorbing() {
        let gen = build_generator(&named::cycle(4), params()).unwrap();
        let p = gen.transient(&point_mass(gen.dim(), 0), 5.0, Method::Uniformization).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_vertices_have_equal_marginals() {
        let cycle = build_generator(&named::cycle(5), params()).unwrap();
        let all = (1u32 << 5) - 1;
        let m = marginals(&cycle, all, 1.7, Method::Uniformization).unwrap();
        for x in &m {
            assert_abs_diff_eq!(*x, m[0], epsilon = 1e-9);
        }
        let k4 = build_generator(&named::complete(4), params()).unwrap();
        // Vertex 0 infected: vertices 1, 2, 3 are interchangeable.
        let m = marginals(&k4, 0b0001, 2.0, Method::Series).unwrap();
        assert_abs_diff_eq!(m[1], m[2], epsilon = 1e-9);
        assert_abs_diff_eq!(m[2], m[3], epsilon = 1e-9);
    }
}

//! Seeded generators for the three synthetic graph families used in the
//! accuracy experiments.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, which is
//! platform independent, so a `(model, n, m, seed)` tuple always yields the
//! same graph. None of the models produce self-loops.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Duplicates, Edge, Graph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Model {
    /// Uniformly random sparse digraph.
    #[serde(rename = "SP1")]
    Sp1,
    /// Sparse digraph whose extra edges favour targets with high in-degree.
    #[serde(rename = "SP2")]
    Sp2,
    /// Complete digraph with uniform random weights.
    #[serde(rename = "DEN")]
    Den,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Sp1 => "SP1",
            Model::Sp2 => "SP2",
            Model::Den => "DEN",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp1" => Ok(Model::Sp1),
            "sp2" => Ok(Model::Sp2),
            "den" => Ok(Model::Den),
            other => Err(Error::validation(format!("unknown graph model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub model: Model,
    pub n: usize,
    /// Edge count; ignored for [`Model::Den`].
    pub m: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(model: Model, n: usize, m: usize, seed: u64) -> Self {
        GenSpec { model, n, m, seed }
    }

    pub fn dense(n: usize, seed: u64) -> Self {
        GenSpec::new(Model::Den, n, n.saturating_mul(n.saturating_sub(1)), seed)
    }

    /// Number of edges the generated graph will have.
    pub fn edge_count(&self) -> usize {
        match self.model {
            Model::Den => self.n * (self.n - 1),
            _ => self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation(format!(
                "{} needs at least 2 vertices, got {}",
                self.model, self.n
            )));
        }
        if self.n > VertexId::MAX as usize {
            return Err(Error::validation("vertex count too large"));
        }
        if self.model == Model::Den {
            return Ok(());
        }
        // Phase 1 may produce up to 2n distinct edges, so smaller m cannot be
        // hit exactly.
        let max = self.n * (self.n - 1);
        if self.m < 2 * self.n || self.m > max {
            return Err(Error::validation(format!(
                "{} with n={} needs {} <= m <= {max}, got m={}",
                self.model,
                self.n,
                2 * self.n,
                self.m
            )));
        }
        Ok(())
    }
}

pub fn generate(spec: &GenSpec) -> Result<Graph> {
    match spec.model {
        Model::Sp1 => gen_sp1(spec),
        Model::Sp2 => gen_sp2(spec),
        Model::Den => gen_den(spec),
    }
}

/// Uniform vertex other than `exclude`.
fn other_vertex(rng: &mut ChaCha8Rng, n: usize, exclude: usize) -> usize {
    let v = rng.random_range(0..n - 1);
    if v >= exclude {
        v + 1
    } else {
        v
    }
}

/// One in-edge and one out-edge per vertex, with partners drawn uniformly
/// from the other vertices. Repeated pairs collapse.
fn seed_edges(rng: &mut ChaCha8Rng, n: usize) -> (Vec<(usize, usize)>, HashSet<(usize, usize)>) {
    let mut edges = Vec::with_capacity(2 * n);
    let mut present = HashSet::with_capacity(2 * n);
    for v in 0..n {
        let u = other_vertex(rng, n, v);
        if present.insert((u, v)) {
            edges.push((u, v));
        }
        let w = other_vertex(rng, n, v);
        if present.insert((v, w)) {
            edges.push((v, w));
        }
    }
    (edges, present)
}

fn unit_graph(n: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
    Graph::new(
        n,
        edges
            .into_iter()
            .map(|(s, d)| Edge::new(s as VertexId, d as VertexId, 1.0))
            .collect(),
        Duplicates::Reject,
    )
}

pub fn gen_sp1(spec: &GenSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut edges, mut present) = seed_edges(&mut rng, n);
    while edges.len() < spec.m {
        let src = rng.random_range(0..n);
        let dst = rng.random_range(0..n);
        if src != dst && present.insert((src, dst)) {
            edges.push((src, dst));
        }
    }
    unit_graph(n, edges)
}

pub fn gen_sp2(spec: &GenSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut edges, mut present) = seed_edges(&mut rng, n);
    // One urn entry per edge target: a uniform draw from the urn picks a
    // vertex with probability proportional to its in-degree.
    let mut urn: Vec<usize> = edges.iter().map(|&(_, d)| d).collect();
    while edges.len() < spec.m {
        let dst = urn[rng.random_range(0..urn.len())];
        let src = other_vertex(&mut rng, n, dst);
        if present.insert((src, dst)) {
            edges.push((src, dst));
            urn.push(dst);
        }
    }
    unit_graph(n, edges)
}

pub fn gen_den(spec: &GenSpec) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::with_capacity(n * (n - 1));
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let mut w: f64 = rng.random();
            while w == 0.0 {
                w = rng.random();
            }
            edges.push(Edge::new(u as VertexId, v as VertexId, w));
        }
    }
    Graph::new(n, edges, Duplicates::Reject)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::{DanglingPolicy, TransitionMatrix};

    fn check_sparse(g: &Graph, m: usize) {
        assert_eq!(g.edge_count(), m);
        assert!(g.edges().iter().all(|e| e.src != e.dst && e.weight == 1.0));
        assert!(g.in_degrees().iter().all(|&d| d >= 1));
        assert!(g.out_degrees().iter().all(|&d| d >= 1));
        TransitionMatrix::from_graph(g, DanglingPolicy::Reject).unwrap();
    }

    #[test]
    fn sp1_small() {
        for seed in 0..20 {
            check_sparse(
                &gen_sp1(&GenSpec::new(Model::Sp1, 10, 20, seed)).unwrap(),
                20,
            );
        }
    }

    #[test]
    fn sp2_degrees() {
        for seed in 0..5 {
            check_sparse(
                &gen_sp2(&GenSpec::new(Model::Sp2, 100, 1000, seed)).unwrap(),
                1000,
            );
        }
    }

    #[test]
    fn infeasible_specs() {
        assert!(gen_sp1(&GenSpec::new(Model::Sp1, 10, 5, 0)).is_err());
        assert!(gen_sp2(&GenSpec::new(Model::Sp2, 10, 91, 0)).is_err());
        assert!(gen_den(&GenSpec::dense(1, 0)).is_err());
    }

    #[test]
    fn dense_graphs() {
        let g = gen_den(&GenSpec::dense(10, 4)).unwrap();
        assert_eq!(g.edge_count(), 90);
        assert!(g.edges().iter().all(|e| e.weight > 0.0 && e.weight < 1.0));
        let g = gen_den(&GenSpec::dense(2, 4)).unwrap();
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn deterministic_per_seed() {
        for model in [Model::Sp1, Model::Sp2, Model::Den] {
            let spec = GenSpec::new(model, 30, 100, 99);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
            let other = GenSpec { seed: 100, ..spec };
            assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
        }
    }

    #[test]
    fn complete_sparse_graph_is_reachable() {
        let g = gen_sp1(&GenSpec::new(Model::Sp1, 5, 20, 1)).unwrap();
        assert_eq!(g.edge_count(), 20);
        let g = gen_sp2(&GenSpec::new(Model::Sp2, 5, 20, 1)).unwrap();
        assert_eq!(g.edge_count(), 20);
    }

    #[test]
    fn model_names_parse() {
        assert_eq!("sp2".parse::<Model>().unwrap(), Model::Sp2);
        assert_eq!("DEN".parse::<Model>().unwrap(), Model::Den);
        assert!("er".parse::<Model>().is_err());
    }
}

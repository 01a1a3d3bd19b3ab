//! Deterministic random-instance generation for sweeps, property tests and
//! benchmarks.
//!
//! Instance `i` of a corpus is generated from `seed + i`, so a corpus is
//! reproducible regardless of how the downstream analysis is parallelized.
//! The generator mixes dense and coordinate-aligned structure: decoupled
//! plant blocks, blind nodes, and single-coordinate measurements are common
//! enough that nontrivial undetectable subspaces, multi-reach graphs and
//! every theorem branch show up with healthy frequency.

use crate::digraph::Digraph;
use crate::lti::{MeasurementChannel, Plant};
use crate::network::{CommScheme, ObserverNetwork};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct CorpusParams {
    pub instances: usize,
    pub max_state_dim: usize,
    pub max_nodes: usize,
    pub seed: u64,
    /// Fraction of instances that use per-node communication matrices.
    pub per_node_comm_share: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            instances: 200,
            max_state_dim: 5,
            max_nodes: 5,
            seed: 0x5eed,
            per_node_comm_share: 0.0,
        }
    }
}

/// Generates the corpus; instance `i` depends only on `params.seed + i`.
pub fn generate(params: &CorpusParams) -> Vec<ObserverNetwork> {
    (0..params.instances)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(i as u64));
            let per_node = rng.random_bool(params.per_node_comm_share.clamp(0.0, 1.0));
            random_network(&mut rng, params.max_state_dim, params.max_nodes, per_node)
        })
        .collect()
}

/// One random observer network with a weakly connected graph.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    max_state_dim: usize,
    max_nodes: usize,
    per_node_comm: bool,
) -> ObserverNetwork {
    let n = rng.random_range(1..=max_state_dim.max(1));
    let num_nodes = rng.random_range(1..=max_nodes.max(1));
    let a = random_plant_matrix(rng, n);
    let channels = (0..num_nodes)
        .map(|_| {
            let rows = rng.random_range(1..=2);
            MeasurementChannel::new(random_output(rng, rows, n, 0.3)).unwrap()
        })
        .collect();
    let comms = if per_node_comm {
        CommScheme::PerNode(
            (0..num_nodes)
                .map(|_| {
                    let rows = rng.random_range(1..=n);
                    random_output(rng, rows, n, 0.1)
                })
                .collect(),
        )
    } else {
        let rows = rng.random_range(1..=n);
        CommScheme::Shared(random_output(rng, rows, n, 0.1))
    };
    let graph = random_weakly_connected_digraph(rng, num_nodes);
    ObserverNetwork::new(Plant::new(a).unwrap(), channels, comms, graph).unwrap()
}

fn random_plant_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    if n >= 2 && rng.random_bool(0.5) {
        // decouple two coordinate blocks so unobservable directions align
        // with coordinates
        let split = rng.random_range(1..n);
        for i in 0..split {
            for j in split..n {
                a[(i, j)] = 0.0;
                a[(j, i)] = 0.0;
            }
        }
    }
    match rng.random_range(0..3) {
        0 => a - DMatrix::identity(n, n) * 1.5,
        1 => a + DMatrix::identity(n, n) * 0.8,
        _ => a,
    }
}

fn random_output(rng: &mut ChaCha8Rng, rows: usize, n: usize, blind_prob: f64) -> DMatrix<f64> {
    if rng.random_bool(blind_prob) {
        return DMatrix::zeros(rows, n);
    }
    if rng.random_bool(0.45) {
        // single-coordinate rows
        let mut m = DMatrix::zeros(rows, n);
        for i in 0..rows {
            let k = rng.random_range(0..n);
            m[(i, k)] = rng.random_range(0.5..1.5);
        }
        m
    } else {
        DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0))
    }
}

/// A random digraph, possibly disconnected; used for Laplacian-structure
/// sweeps.
pub fn random_digraph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Digraph {
    let n = rng.random_range(1..=max_nodes.max(1));
    let density = rng.random_range(0.1..0.6);
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random_bool(density) {
                edges.push((from, to));
            }
        }
    }
    Digraph::new(n, edges).unwrap()
}

/// A random weakly connected digraph over exactly `n` vertices.
pub fn random_weakly_connected_digraph(rng: &mut ChaCha8Rng, n: usize) -> Digraph {
    let g = match rng.random_range(0..5) {
        // directed ring: strongly connected
        0 if n >= 2 => Digraph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap(),
        // broadcast star
        1 => Digraph::new(n, (1..n).map(|i| (0usize, i))).unwrap(),
        // funnel: two halves feeding a shared sink, typically two reaches
        2 if n >= 3 => {
            let mut edges = vec![(0, n - 1), (1, n - 1)];
            for v in 2..n - 1 {
                let src = rng.random_range(0..2usize);
                edges.push((src, v));
                edges.push((v, n - 1));
            }
            Digraph::new(n, edges).unwrap()
        }
        _ => random_digraph_exact(rng, n),
    };
    weakly_connect(rng, g)
}

fn random_digraph_exact(rng: &mut ChaCha8Rng, n: usize) -> Digraph {
    let density = rng.random_range(0.15..0.7);
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random_bool(density) {
                edges.push((from, to));
            }
        }
    }
    Digraph::new(n, edges).unwrap()
}

fn weakly_connect(rng: &mut ChaCha8Rng, g: Digraph) -> Digraph {
    let n = g.n_vertices();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    loop {
        let current = Digraph::new(n, edges.clone()).unwrap();
        let comps = current.weakly_connected_components();
        if comps.len() <= 1 {
            return current;
        }
        let a = comps[0][rng.random_range(0..comps[0].len())];
        let b = comps[1][rng.random_range(0..comps[1].len())];
        if rng.random_bool(0.5) {
            edges.push((a, b));
        } else {
            edges.push((b, a));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let params = CorpusParams {
            instances: 10,
            ..CorpusParams::default()
        };
        let a = generate(&params);
        let b = generate(&params);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.plant().a(), y.plant().a());
            assert_eq!(x.num_nodes(), y.num_nodes());
            assert_eq!(
                x.graph().edges().collect::<Vec<_>>(),
                y.graph().edges().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn corpus_networks_are_weakly_connected() {
        let params = CorpusParams {
            instances: 40,
            ..CorpusParams::default()
        };
        for net in generate(&params) {
            assert_eq!(net.graph().weakly_connected_components().len(), 1);
        }
    }

    #[test]
    fn corpus_has_variety() {
        let params = CorpusParams {
            instances: 120,
            ..CorpusParams::default()
        };
        let nets = generate(&params);
        let multi_reach = nets
            .iter()
            .filter(|n| n.graph().n_vertices() > 1 && !n.graph().has_spanning_tree())
            .count();
        let spanning = nets.iter().filter(|n| n.graph().has_spanning_tree()).count();
        assert!(multi_reach >= 10, "multi-reach instances: {multi_reach}");
        assert!(spanning >= 40, "spanning-tree instances: {spanning}");
    }
}

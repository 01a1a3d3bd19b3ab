//! Directed communication graphs: Laplacian, reach decomposition, and the
//! structured kernel basis of the Laplacian.
//!
//! Vertices are indexed `0..n`. An edge `(j, i)` points from `j` to `i`,
//! i.e. node `i` receives information from node `j`. Graphs are unweighted
//! and never carry self-loops.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from == to {
                return Err(Error::InvalidInput(format!(
                    "self-loop at vertex {from} is not allowed"
                )));
            }
            if from >= n || to >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({from}, {to}) is out of range for {n} vertices"
                )));
            }
            set.insert((from, to));
        }
        Ok(Self { n, edges: set })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Adjacency matrix: `a[(i, j)] = 1` when `(j, i)` is an edge.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(from, to) in &self.edges {
            a[(to, from)] = 1.0;
        }
        a
    }

    /// Number of incoming edges per vertex.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(_, to) in &self.edges {
            deg[to] += 1;
        }
        deg
    }

    /// Graph Laplacian `diag(in-degrees) - adjacency`; every row sums to 0.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency();
        for (i, d) in self.in_degrees().iter().enumerate() {
            l[(i, i)] += *d as f64;
        }
        l
    }

    /// All vertices reachable from `v`, including `v` itself.
    pub fn reachable_from(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if seen.insert(u) {
                for &(from, to) in &self.edges {
                    if from == u && !seen.contains(&to) {
                        stack.push(to);
                    }
                }
            }
        }
        seen
    }

    /// Vertices from which the whole graph is reachable.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|v| self.reachable_from(*v).len() == self.n)
            .collect()
    }

    fn maximal_reach_sets(&self) -> Vec<BTreeSet<usize>> {
        let all: Vec<BTreeSet<usize>> = (0..self.n).map(|v| self.reachable_from(v)).collect();
        let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
        for cand in &all {
            if all.iter().any(|other| other != cand && cand.is_subset(other)) {
                continue;
            }
            if !maximal.contains(cand) {
                maximal.push(cand.clone());
            }
        }
        maximal
    }

    /// True when some vertex reaches every other vertex, equivalently when
    /// the reach decomposition has exactly one reach.
    pub fn has_spanning_tree(&self) -> bool {
        self.maximal_reach_sets().len() == 1
    }

    /// Weakly connected components, each sorted, ordered by smallest vertex.
    pub fn weakly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(from, to) in &self.edges {
                    if from == u && !seen[to] {
                        seen[to] = true;
                        stack.push(to);
                    }
                    if to == u && !seen[from] {
                        seen[from] = true;
                        stack.push(from);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Algebraic multiplicity of the zero eigenvalue of the Laplacian.
    pub fn zero_eigenvalue_multiplicity(&self, eps: f64) -> usize {
        self.laplacian()
            .complex_eigenvalues()
            .iter()
            .filter(|c| c.norm() <= eps)
            .count()
    }

    /// Subgraph induced by `vertices` (which must be sorted and unique),
    /// with vertices renumbered by their position in the slice.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Digraph> {
        let pos = |v: usize| vertices.iter().position(|&w| w == v);
        let mut edges = Vec::new();
        for &(from, to) in &self.edges {
            if let (Some(f), Some(t)) = (pos(from), pos(to)) {
                edges.push((f, t));
            }
        }
        Digraph::new(vertices.len(), edges)
    }

    /// Full reach decomposition with the structured kernel basis of the
    /// Laplacian and the permutation exposing its block-triangular form.
    pub fn reaches(&self) -> Result<ReachDecomposition> {
        let sets = self.maximal_reach_sets();
        let k = sets.len();

        // exclusive part: vertices in no other reach
        let mut reaches: Vec<Reach> = sets
            .iter()
            .enumerate()
            .map(|(s, set)| {
                let exclusive: Vec<usize> = set
                    .iter()
                    .copied()
                    .filter(|v| {
                        sets.iter()
                            .enumerate()
                            .all(|(r, other)| r == s || !other.contains(v))
                    })
                    .collect();
                let common: Vec<usize> = set
                    .iter()
                    .copied()
                    .filter(|v| !exclusive.contains(v))
                    .collect();
                Reach {
                    vertices: set.iter().copied().collect(),
                    exclusive,
                    common,
                }
            })
            .collect();
        reaches.sort_by_key(|r| r.exclusive.first().copied().unwrap_or(usize::MAX));
        if reaches.iter().any(|r| r.exclusive.is_empty()) {
            return Err(Error::Numerical(
                "reach decomposition produced a reach without exclusive part".into(),
            ));
        }

        // permutation: exclusive parts first, shared vertices last
        let mut permutation: Vec<usize> = Vec::with_capacity(self.n);
        for r in &reaches {
            permutation.extend(&r.exclusive);
        }
        let shared: Vec<usize> = {
            let in_exclusive: BTreeSet<usize> = permutation.iter().copied().collect();
            (0..self.n).filter(|v| !in_exclusive.contains(v)).collect()
        };
        permutation.extend(&shared);

        let lap = self.laplacian();
        let perm_lap = DMatrix::from_fn(self.n, self.n, |i, j| lap[(permutation[i], permutation[j])]);

        let exclusive_sizes: Vec<usize> = reaches.iter().map(|r| r.exclusive.len()).collect();
        let common_size = shared.len();

        // kernel vectors: ones on the exclusive part, f = -R^{-1} F 1 on
        // the shared block, zero elsewhere
        let mut kernel_basis = Vec::with_capacity(k);
        let offset: Vec<usize> = exclusive_sizes
            .iter()
            .scan(0usize, |acc, sz| {
                let start = *acc;
                *acc += sz;
                Some(start)
            })
            .collect();
        let shared_start: usize = exclusive_sizes.iter().sum();
        let f_block = if common_size > 0 {
            let r_block = perm_lap
                .view((shared_start, shared_start), (common_size, common_size))
                .into_owned();
            let sigma_min = r_block
                .clone()
                .svd(false, false)
                .singular_values
                .min();
            if sigma_min <= 1e-10 {
                return Err(Error::Numerical(format!(
                    "shared block of the permuted Laplacian is numerically singular (sigma_min {sigma_min:.3e})"
                )));
            }
            Some((r_block.full_piv_lu(), shared_start))
        } else {
            None
        };
        for (s, reach) in reaches.iter().enumerate() {
            let mut b = DVector::zeros(self.n);
            for &v in &reach.exclusive {
                b[v] = 1.0;
            }
            if let Some((lu, start)) = &f_block {
                let f_cols = perm_lap
                    .view((*start, offset[s]), (common_size, exclusive_sizes[s]))
                    .into_owned();
                let rhs = -f_cols * DVector::from_element(exclusive_sizes[s], 1.0);
                let f = lu.solve(&rhs).ok_or_else(|| {
                    Error::Numerical("failed to solve for the shared-part kernel entries".into())
                })?;
                for (pos, &v) in shared.iter().enumerate() {
                    if reach.vertices.contains(&v) {
                        b[v] = f[pos];
                    }
                }
            }
            let resid = (&lap * &b).norm();
            if resid > 1e-10 {
                return Err(Error::Numerical(format!(
                    "kernel vector for reach {s} has Laplacian residual {resid:.3e}"
                )));
            }
            kernel_basis.push(b);
        }

        let components = self.weakly_connected_components();
        let decoupled = components.len() > 1;
        Ok(ReachDecomposition {
            reaches,
            permutation,
            kernel_basis,
            exclusive_sizes,
            common_size,
            components,
            decoupled,
        })
    }
}

/// One maximal reachable subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reach {
    /// All vertices of the reach, sorted.
    pub vertices: Vec<usize>,
    /// Vertices belonging to no other reach, sorted.
    pub exclusive: Vec<usize>,
    /// Vertices shared with other reaches, sorted.
    pub common: Vec<usize>,
}

/// Reach decomposition of a digraph, ordered by the smallest vertex of each
/// exclusive part.
#[derive(Clone, Debug)]
pub struct ReachDecomposition {
    pub reaches: Vec<Reach>,
    /// `permutation[k]` is the original vertex placed at position `k`; the
    /// permuted Laplacian is block triangular with the exclusive blocks
    /// leading and the shared block last.
    pub permutation: Vec<usize>,
    /// Kernel vectors of the Laplacian, one per reach, in original vertex
    /// order: exactly 1 on the exclusive part, in (0, 1) on the common
    /// part, 0 outside the reach; they sum to the all-ones vector.
    pub kernel_basis: Vec<DVector<f64>>,
    pub exclusive_sizes: Vec<usize>,
    pub common_size: usize,
    /// Weakly connected components of the underlying graph.
    pub components: Vec<Vec<usize>>,
    /// True when the graph splits into several weakly connected components,
    /// in which case estimation decouples per component.
    pub decoupled: bool,
}

impl ReachDecomposition {
    pub fn n_reaches(&self) -> usize {
        self.reaches.len()
    }
}

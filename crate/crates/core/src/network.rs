//! Network-level detectability analysis.
//!
//! An [`ObserverNetwork`] couples one plant, per-node measurement matrices,
//! a communication output matrix (shared or per node), and a directed
//! interconnection graph. [`augment`] builds the augmented pair whose
//! detectability decides whether the interconnected estimation-error
//! dynamics can be stabilized by output injection, and [`analyze`] runs
//! every criterion the toolkit knows about:
//!
//! * a PBH rank oracle on the augmented pair,
//! * the geometric criterion: the joint unobservable subspace of the
//!   communication pair must meet the product of the per-node undetectable
//!   subspaces only at the origin (with a witness vector when it fails),
//! * necessary conditions on the per-node undetectable subspaces and the
//!   communication pair,
//! * a spanning-tree sufficiency test with its leaderless and rooted
//!   special cases,
//! * per-reach conditions for graphs that are not spanned by a tree.
//!
//! Every check that can be computed two ways is computed two ways, and any
//! disagreement is reported as an internal-consistency failure instead of
//! being reconciled silently.

use crate::config::Tolerances;
use crate::digraph::Digraph;
use crate::lti::{self, MeasurementChannel, Plant};
use crate::subspaces::{self, Subspace};
use crate::{linalg, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Communication output: one matrix shared by all nodes, or one per node.
#[derive(Clone, Debug)]
pub enum CommScheme {
    Shared(DMatrix<f64>),
    PerNode(Vec<DMatrix<f64>>),
}

/// A plant observed by a graph-coupled network of observers.
#[derive(Clone, Debug)]
pub struct ObserverNetwork {
    plant: Plant,
    channels: Vec<MeasurementChannel>,
    comms: CommScheme,
    graph: Digraph,
}

impl ObserverNetwork {
    pub fn new(
        plant: Plant,
        channels: Vec<MeasurementChannel>,
        comms: CommScheme,
        graph: Digraph,
    ) -> Result<Self> {
        let n = plant.state_dim();
        let num_nodes = graph.n_vertices();
        if channels.len() != num_nodes {
            return Err(Error::DimensionMismatch(format!(
                "{} measurement channels for {} graph vertices",
                channels.len(),
                num_nodes
            )));
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.c().ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "measurement matrix of node {} has {} columns, state dimension is {}",
                    i + 1,
                    ch.c().ncols(),
                    n
                )));
            }
        }
        match &comms {
            CommScheme::Shared(h) => {
                linalg::ensure_finite("communication matrix", h)?;
                if h.ncols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "communication matrix has {} columns, state dimension is {}",
                        h.ncols(),
                        n
                    )));
                }
            }
            CommScheme::PerNode(hs) => {
                if hs.len() != num_nodes {
                    return Err(Error::DimensionMismatch(format!(
                        "{} communication matrices for {} nodes",
                        hs.len(),
                        num_nodes
                    )));
                }
                for (i, h) in hs.iter().enumerate() {
                    linalg::ensure_finite("communication matrix", h)?;
                    if h.ncols() != n {
                        return Err(Error::DimensionMismatch(format!(
                            "communication matrix of node {} has {} columns, state dimension is {}",
                            i + 1,
                            h.ncols(),
                            n
                        )));
                    }
                }
            }
        }
        Ok(Self {
            plant,
            channels,
            comms,
            graph,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn channels(&self) -> &[MeasurementChannel] {
        &self.channels
    }

    pub fn comms(&self) -> &CommScheme {
        &self.comms
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn has_shared_comm(&self) -> bool {
        matches!(self.comms, CommScheme::Shared(_))
    }

    /// Communication matrix used by node `i`.
    pub fn comm_matrix(&self, i: usize) -> &DMatrix<f64> {
        match &self.comms {
            CommScheme::Shared(h) => h,
            CommScheme::PerNode(hs) => &hs[i],
        }
    }

    /// Restriction to a subset of nodes (sorted original indices) with the
    /// induced subgraph; used to analyze weakly connected components
    /// independently.
    pub fn subnetwork(&self, vertices: &[usize]) -> Result<ObserverNetwork> {
        let channels = vertices
            .iter()
            .map(|&v| self.channels[v].clone())
            .collect();
        let comms = match &self.comms {
            CommScheme::Shared(h) => CommScheme::Shared(h.clone()),
            CommScheme::PerNode(hs) => {
                CommScheme::PerNode(vertices.iter().map(|&v| hs[v].clone()).collect())
            }
        };
        ObserverNetwork::new(
            self.plant.clone(),
            channels,
            comms,
            self.graph.induced_subgraph(vertices)?,
        )
    }
}

/// The augmented system matrices of a network.
#[derive(Clone, Debug)]
pub struct AugmentedPair {
    a: DMatrix<f64>,
    abar: DMatrix<f64>,
    cbar: DMatrix<f64>,
    hbar: DMatrix<f64>,
    n: usize,
    num_nodes: usize,
}

impl AugmentedPair {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// The plant block `A`; the augmented state matrix is `I_N (x) A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn abar(&self) -> &DMatrix<f64> {
        &self.abar
    }

    pub fn cbar(&self) -> &DMatrix<f64> {
        &self.cbar
    }

    pub fn hbar(&self) -> &DMatrix<f64> {
        &self.hbar
    }

    /// `[Cbar; Hbar]`, the full output matrix of the augmented pair.
    pub fn stacked_outputs(&self) -> DMatrix<f64> {
        linalg::vstack(&[self.cbar.clone(), self.hbar.clone()])
            .expect("cbar and hbar share the column count by construction")
    }

    /// Distinct closed-right-half-plane eigenvalues of the augmented state
    /// matrix; each eigenvalue of the plant block appears once.
    pub fn antistable_candidate_eigs(&self, tol: &Tolerances) -> Vec<nalgebra::Complex<f64>> {
        lti::distinct_eigenvalues(&self.a, lti::EIG_CLUSTER_GAP)
            .into_iter()
            .filter(|l| l.re >= -tol.eps_stab)
            .collect()
    }
}

/// Builds the augmented matrices: `Abar = I_N (x) A`, `Cbar` block
/// diagonal, and `Hbar` with diagonal blocks `p_i H_i` and off-diagonal
/// blocks `-a_ij H_i`. With a shared communication matrix this coincides
/// with `L (x) H`, which is asserted.
pub fn augment(net: &ObserverNetwork) -> Result<AugmentedPair> {
    let n = net.state_dim();
    let num_nodes = net.num_nodes();
    let a = net.plant().a().clone();
    let abar = DMatrix::<f64>::identity(num_nodes, num_nodes).kronecker(&a);
    let cbar = linalg::block_diag(
        &net.channels()
            .iter()
            .map(|ch| ch.c().clone())
            .collect::<Vec<_>>(),
    );

    let degrees = net.graph().in_degrees();
    let row_counts: Vec<usize> = (0..num_nodes).map(|i| net.comm_matrix(i).nrows()).collect();
    let total_rows: usize = row_counts.iter().sum();
    let mut hbar = DMatrix::<f64>::zeros(total_rows, n * num_nodes);
    let mut row = 0;
    for i in 0..num_nodes {
        let hi = net.comm_matrix(i);
        let block = hi * degrees[i] as f64;
        hbar.view_mut((row, i * n), (row_counts[i], n)).copy_from(&block);
        for j in 0..num_nodes {
            if j != i && net.graph().has_edge(j, i) {
                hbar.view_mut((row, j * n), (row_counts[i], n)).copy_from(&(-hi));
            }
        }
        row += row_counts[i];
    }

    if let CommScheme::Shared(h) = net.comms() {
        let kron = net.graph().laplacian().kronecker(h);
        let diff = (&hbar - &kron).norm();
        if diff > 1e-12 * hbar.norm().max(1.0) {
            return Err(Error::Inconsistent(format!(
                "blockwise Hbar and Laplacian Kronecker product differ by {diff:.3e}"
            )));
        }
    }

    Ok(AugmentedPair {
        a,
        abar,
        cbar,
        hbar,
        n,
        num_nodes,
    })
}

fn big_unobservable_checked(
    net: &ObserverNetwork,
    pair: &AugmentedPair,
    tol: &Tolerances,
) -> Result<(Subspace, Option<usize>, Vec<String>)> {
    let mut flags = Vec::new();
    let n = net.state_dim();
    let num_nodes = net.num_nodes();
    match net.comms() {
        CommScheme::Shared(h) => {
            let o_h = lti::observability_matrix(h, net.plant().a())?;
            let lap = net.graph().laplacian();
            let direct = subspaces::kernel(&lap.kronecker(&o_h), tol.rank_tol)?;

            let lap_kernel = subspaces::kernel(&lap, tol.rank_tol)?;
            let comm_unobs = subspaces::kernel(&o_h, tol.rank_tol)?;
            let part_consensus = lap_kernel
                .basis()
                .kronecker(&DMatrix::<f64>::identity(n, n));
            let part_blind = DMatrix::<f64>::identity(num_nodes, num_nodes)
                .kronecker(comm_unobs.basis());
            let formula = subspaces::image(
                &linalg::hstack(&[part_consensus, part_blind])?,
                tol.rank_tol,
            )?;

            if formula.dim() != direct.dim()
                || !formula.same_as(&direct).unwrap_or(false)
            {
                flags.push(format!(
                    "joint unobservable subspace: sum formula gives dimension {} but the direct kernel gives {}",
                    formula.dim(),
                    direct.dim()
                ));
            }
            let d_l = lap_kernel.dim();
            let d_o = comm_unobs.dim();
            let predicted = n * d_l + (num_nodes - d_l) * d_o;
            if direct.dim() != predicted {
                flags.push(format!(
                    "joint unobservable dimension {} differs from the structural count {}",
                    direct.dim(),
                    predicted
                ));
            }
            Ok((direct, Some(d_o), flags))
        }
        CommScheme::PerNode(_) => {
            let sub = lti::unobservable_subspace(&pair.hbar, &pair.abar, tol.rank_tol)?;
            Ok((sub, None, flags))
        }
    }
}

/// Unobservable subspace of the communication pair `(Hbar, Abar)`.
///
/// With a shared communication matrix the structured route
/// `(Ker L) (x) R^n + (Ker O_H)^N` and the direct kernel of `L (x) O_H`
/// are both computed and must agree; a mismatch is an internal-consistency
/// error.
pub fn big_unobservable_subspace(net: &ObserverNetwork, tol: &Tolerances) -> Result<Subspace> {
    let pair = augment(net)?;
    let (sub, _, flags) = big_unobservable_checked(net, &pair, tol)?;
    if let Some(flag) = flags.into_iter().next() {
        return Err(Error::Inconsistent(flag));
    }
    Ok(sub)
}

fn antistable_kernel_checked(
    pair: &AugmentedPair,
    plant_antistable: &Subspace,
    tol: &Tolerances,
) -> Result<(Subspace, Vec<String>)> {
    let mut flags = Vec::new();
    let blockwise = Subspace::from_orthonormal(
        DMatrix::<f64>::identity(pair.num_nodes, pair.num_nodes)
            .kronecker(plant_antistable.basis()),
        tol.rank_tol,
    )?;
    let direct = subspaces::antistable_modal_subspace(&pair.abar, tol.eps_stab, tol.rank_tol)?;
    if direct.dim() != pair.num_nodes * plant_antistable.dim()
        || !direct.same_as(&blockwise).unwrap_or(false)
    {
        flags.push(format!(
            "antistable subspace of the augmented state matrix: blockwise dimension {} vs direct dimension {}",
            blockwise.dim(),
            direct.dim()
        ));
    }
    Ok((blockwise, flags))
}

/// Antistable modal subspace of `Abar = I_N (x) A`, assembled blockwise as
/// N copies of the plant's antistable subspace and cross-checked against a
/// direct ordered-Schur computation on `Abar`.
pub fn antistable_kernel_augmented(net: &ObserverNetwork, tol: &Tolerances) -> Result<Subspace> {
    let pair = augment(net)?;
    let anti = subspaces::antistable_modal_subspace(net.plant().a(), tol.eps_stab, tol.rank_tol)?;
    let (sub, flags) = antistable_kernel_checked(&pair, &anti, tol)?;
    if let Some(flag) = flags.into_iter().next() {
        return Err(Error::Inconsistent(flag));
    }
    Ok(sub)
}

/// Cartesian product of the per-node undetectable subspaces, materialized
/// as a block-diagonal orthonormal basis in the augmented space.
pub fn product_of_undetectable(per_node: &[Subspace], tol: &Tolerances) -> Result<Subspace> {
    let bases: Vec<DMatrix<f64>> = per_node.iter().map(|s| s.basis().clone()).collect();
    Subspace::from_orthonormal(linalg::block_diag(&bases), tol.rank_tol)
}

/// Result of the geometric detectability criterion.
#[derive(Clone, Debug)]
pub struct GeometricCheck {
    /// True when the intersection is trivial, i.e. the augmented pair is
    /// detectable by the geometric criterion.
    pub holds: bool,
    pub intersection_dim: usize,
    /// A unit vector in the intersection when the criterion fails.
    pub witness: Option<DVector<f64>>,
}

/// The geometric detectability criterion: the joint unobservable subspace
/// of the communication pair intersected with the product of per-node
/// undetectable subspaces must be trivial. Valid for shared and per-node
/// communication matrices alike.
pub fn geometric_check(net: &ObserverNetwork, tol: &Tolerances) -> Result<GeometricCheck> {
    let pair = augment(net)?;
    let plant_split = subspaces::modal_split(net.plant().a(), tol.eps_stab, tol.rank_tol)?;
    let per_node = per_node_undetectable(net, &plant_split.antistable, tol)?;
    let (obar, _, _) = big_unobservable_checked(net, &pair, tol)?;
    geometric_check_from(&obar, &per_node, tol)
}

fn geometric_check_from(
    obar: &Subspace,
    per_node: &[Subspace],
    tol: &Tolerances,
) -> Result<GeometricCheck> {
    let prod = product_of_undetectable(per_node, tol)?;
    let inter = obar.intersect(&prod)?;
    let witness = if inter.is_zero() {
        None
    } else {
        let mut w = inter.basis().column(0).into_owned();
        w /= w.norm();
        Some(DVector::from_column_slice(w.as_slice()))
    };
    Ok(GeometricCheck {
        holds: inter.is_zero(),
        intersection_dim: inter.dim(),
        witness,
    })
}

fn per_node_undetectable(
    net: &ObserverNetwork,
    plant_antistable: &Subspace,
    tol: &Tolerances,
) -> Result<Vec<Subspace>> {
    net.channels()
        .iter()
        .map(|ch| {
            let unobs = lti::unobservable_subspace(ch.c(), net.plant().a(), tol.rank_tol)?;
            lti::undetectable_subspace_with(&unobs, plant_antistable)
        })
        .collect()
}

/// PBH oracle on the augmented pair. Only the distinct closed-RHP
/// eigenvalues of the plant block are tested, since every eigenvalue of
/// `I_N (x) A` is an eigenvalue of `A`.
pub fn oracle_detectable(net: &ObserverNetwork, tol: &Tolerances) -> Result<bool> {
    let pair = augment(net)?;
    pair_detectable(&pair, tol)
}

/// PBH detectability of an already-augmented pair.
pub fn pair_detectable(pair: &AugmentedPair, tol: &Tolerances) -> Result<bool> {
    let candidates = pair.antistable_candidate_eigs(tol);
    lti::pbh_full_rank_at_all(
        &pair.stacked_outputs(),
        &pair.abar,
        &candidates,
        tol.rank_tol,
    )
}

/// Per-node facts feeding the necessary conditions.
#[derive(Clone, Debug, Serialize)]
pub struct NodeConditions {
    /// 1-based node label (original vertex id).
    pub node: usize,
    pub undetectable_dim: usize,
    pub comm_unobservable_dim: usize,
    /// The node's undetectable subspace meets the communication pair's
    /// unobservable subspace only at the origin.
    pub comm_covers_undetectable: bool,
    pub comm_rank: usize,
}

/// Conditions that must hold whenever the augmented pair is detectable.
#[derive(Clone, Debug, Serialize)]
pub struct NecessaryConditions {
    /// (i) the per-node undetectable subspaces intersect trivially.
    pub joint_undetectable_trivial: bool,
    pub joint_undetectable_dim: usize,
    /// (ii) holds at every node.
    pub comm_covers_all_nodes: bool,
    /// (iii) the communication observability rank is at least the largest
    /// per-node undetectable dimension.
    pub comm_rank_sufficient: bool,
    pub max_undetectable_dim: usize,
    pub nodes: Vec<NodeConditions>,
}

/// Spanning-tree sufficiency and its two specializations.
#[derive(Clone, Debug, Serialize)]
pub struct TreeSufficiency {
    /// Requires a spanning tree and a shared communication matrix.
    pub applicable: bool,
    /// Conditions (i) and (ii) together, when applicable.
    pub verdict: Option<bool>,
    /// Leaderless route: communication pair observable plus condition (i).
    pub leaderless: Option<bool>,
    /// Rooted route: some root node locally detectable plus condition (ii).
    pub rooted: Option<bool>,
}

/// Conditions evaluated on one reach of the interconnection graph.
#[derive(Clone, Debug, Serialize)]
pub struct ReachConditions {
    pub reach: usize,
    /// 1-based original vertex labels.
    pub vertices: Vec<usize>,
    pub joint_undetectable_dim: usize,
    /// The undetectable subspaces of the reach members intersect trivially.
    pub joint_trivial: bool,
    /// Condition (ii) holds at every member of the reach.
    pub nodes_covered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Detectable,
    NotDetectable,
    Inconsistent,
}

/// Full analysis of one weakly connected component.
#[derive(Clone, Debug, Serialize)]
pub struct DetectabilityReport {
    /// 1-based original vertex labels of this component.
    pub vertices: Vec<usize>,
    pub state_dim: usize,
    pub num_nodes: usize,
    pub shared_comm: bool,
    /// PBH rank test on the augmented pair.
    pub oracle_detectable: bool,
    /// Geometric criterion verdict.
    pub geometric_holds: bool,
    pub geometric_intersection_dim: usize,
    /// Dimension of the unobservable subspace of `(Hbar, Abar)`.
    pub joint_unobservable_dim: usize,
    /// Kernel dimension of the graph Laplacian (= number of reaches).
    pub laplacian_kernel_dim: usize,
    /// Dimension of the unobservable subspace of `(H, A)` in shared mode.
    pub comm_unobservable_dim: Option<usize>,
    pub antistable_dim: usize,
    pub necessary: NecessaryConditions,
    pub spanning_tree: bool,
    pub tree_sufficiency: TreeSufficiency,
    pub reaches: Vec<ReachConditions>,
    /// Reach-based sufficiency requires shared comms with an observable
    /// communication pair.
    pub reach_sufficiency_applicable: bool,
    pub reach_sufficiency_verdict: Option<bool>,
    /// True in per-node communication mode, where only the oracle and the
    /// geometric criterion are authoritative.
    pub theorem_checks_advisory: bool,
    /// Unit-norm vector demonstrating non-detectability, when one exists.
    pub witness: Option<Vec<f64>>,
    /// Internal-consistency violations; empty means all cross-checks agree.
    pub consistency: Vec<String>,
    pub verdict: Verdict,
}

/// Aggregated report over all weakly connected components.
#[derive(Clone, Debug, Serialize)]
pub struct NetworkReport {
    /// True when the graph decomposes into several components, each
    /// analyzed as an independent estimation problem.
    pub decoupled: bool,
    pub components: Vec<DetectabilityReport>,
    pub verdict: Verdict,
}

impl NetworkReport {
    /// The single component of a connected network.
    pub fn single(&self) -> &DetectabilityReport {
        &self.components[0]
    }
}

fn intersect_all(subs: &[Subspace], ambient: usize, tol: &Tolerances) -> Result<Subspace> {
    let mut acc: Option<Subspace> = None;
    for s in subs {
        acc = Some(match acc {
            None => s.clone(),
            Some(prev) => {
                if prev.is_zero() {
                    return Ok(prev);
                }
                prev.intersect(s)?
            }
        });
    }
    Ok(acc.unwrap_or_else(|| Subspace::zero(ambient, tol.rank_tol)))
}

/// Runs every applicable criterion on a network, analyzing each weakly
/// connected component independently.
pub fn analyze(net: &ObserverNetwork, tol: &Tolerances) -> Result<NetworkReport> {
    let components = net.graph().weakly_connected_components();
    let mut reports = Vec::with_capacity(components.len());
    if components.len() == 1 {
        reports.push(analyze_component(net, &components[0], tol)?);
    } else {
        for comp in &components {
            let sub = net.subnetwork(comp)?;
            reports.push(analyze_component(&sub, comp, tol)?);
        }
    }
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::Inconsistent) {
        Verdict::Inconsistent
    } else if reports.iter().all(|r| r.verdict == Verdict::Detectable) {
        Verdict::Detectable
    } else {
        Verdict::NotDetectable
    };
    Ok(NetworkReport {
        decoupled: components.len() > 1,
        components: reports,
        verdict,
    })
}

fn analyze_component(
    net: &ObserverNetwork,
    original_vertices: &[usize],
    tol: &Tolerances,
) -> Result<DetectabilityReport> {
    let n = net.state_dim();
    let num_nodes = net.num_nodes();
    let shared = net.has_shared_comm();
    let mut consistency: Vec<String> = Vec::new();

    let pair = augment(net)?;
    let plant_split = subspaces::modal_split(net.plant().a(), tol.eps_stab, tol.rank_tol)?;
    let per_node_und = per_node_undetectable(net, &plant_split.antistable, tol)?;

    // communication-side unobservable subspaces, one per node (all equal in
    // shared mode)
    let comm_unobs: Vec<Subspace> = match net.comms() {
        CommScheme::Shared(h) => {
            let s = lti::unobservable_subspace(h, net.plant().a(), tol.rank_tol)?;
            vec![s; num_nodes]
        }
        CommScheme::PerNode(hs) => hs
            .iter()
            .map(|h| lti::unobservable_subspace(h, net.plant().a(), tol.rank_tol))
            .collect::<Result<_>>()?,
    };
    let comm_ranks: Vec<usize> = comm_unobs.iter().map(|s| n - s.dim()).collect();

    let (obar, comm_unobs_dim, mut obar_flags) = big_unobservable_checked(net, &pair, tol)?;
    consistency.append(&mut obar_flags);
    let (_, mut anti_flags) = antistable_kernel_checked(&pair, &plant_split.antistable, tol)?;
    consistency.append(&mut anti_flags);

    let geometric = geometric_check_from(&obar, &per_node_und, tol)?;
    let oracle = pair_detectable(&pair, tol)?;

    // necessary conditions
    let joint = intersect_all(&per_node_und, n, tol)?;
    let nodes: Vec<NodeConditions> = (0..num_nodes)
        .map(|i| -> Result<NodeConditions> {
            let overlap = comm_unobs[i].intersect(&per_node_und[i])?;
            Ok(NodeConditions {
                node: original_vertices[i] + 1,
                undetectable_dim: per_node_und[i].dim(),
                comm_unobservable_dim: comm_unobs[i].dim(),
                comm_covers_undetectable: overlap.is_zero(),
                comm_rank: comm_ranks[i],
            })
        })
        .collect::<Result<_>>()?;
    let max_und = nodes.iter().map(|c| c.undetectable_dim).max().unwrap_or(0);
    let covers_all = nodes.iter().all(|c| c.comm_covers_undetectable);
    let rank_sufficient = nodes
        .iter()
        .all(|c| c.comm_rank >= c.undetectable_dim);
    let necessary = NecessaryConditions {
        joint_undetectable_trivial: joint.is_zero(),
        joint_undetectable_dim: joint.dim(),
        comm_covers_all_nodes: covers_all,
        comm_rank_sufficient: rank_sufficient,
        max_undetectable_dim: max_und,
        nodes,
    };

    // graph structure
    let decomposition = net.graph().reaches()?;
    let spanning_tree = decomposition.n_reaches() == 1;
    let zero_mult = net.graph().zero_eigenvalue_multiplicity(1e-8);
    if zero_mult != decomposition.n_reaches() {
        consistency.push(format!(
            "Laplacian zero-eigenvalue multiplicity {} differs from the reach count {}",
            zero_mult,
            decomposition.n_reaches()
        ));
    }

    let comm_observable = shared && comm_unobs[0].is_zero();
    let tree_sufficiency = if shared && spanning_tree {
        let roots = net.graph().roots();
        let rooted = roots
            .iter()
            .any(|&r| per_node_und[r].is_zero())
            && necessary.comm_covers_all_nodes;
        TreeSufficiency {
            applicable: true,
            verdict: Some(
                necessary.joint_undetectable_trivial && necessary.comm_covers_all_nodes,
            ),
            leaderless: Some(comm_observable && necessary.joint_undetectable_trivial),
            rooted: Some(rooted),
        }
    } else {
        TreeSufficiency {
            applicable: false,
            verdict: None,
            leaderless: None,
            rooted: None,
        }
    };

    // per-reach conditions
    let reaches: Vec<ReachConditions> = decomposition
        .reaches
        .iter()
        .enumerate()
        .map(|(s, reach)| -> Result<ReachConditions> {
            let members: Vec<Subspace> = reach
                .vertices
                .iter()
                .map(|&v| per_node_und[v].clone())
                .collect();
            let joint = intersect_all(&members, n, tol)?;
            let covered = reach
                .vertices
                .iter()
                .all(|&v| necessary.nodes[v].comm_covers_undetectable);
            Ok(ReachConditions {
                reach: s + 1,
                vertices: reach.vertices.iter().map(|&v| original_vertices[v] + 1).collect(),
                joint_undetectable_dim: joint.dim(),
                joint_trivial: joint.is_zero(),
                nodes_covered: covered,
            })
        })
        .collect::<Result<_>>()?;
    let reach_sufficiency_applicable = comm_observable;
    let reach_sufficiency_verdict = if reach_sufficiency_applicable {
        Some(reaches.iter().all(|r| r.joint_trivial))
    } else {
        None
    };

    // cross-checks between routes
    if geometric.holds != oracle {
        consistency.push(format!(
            "geometric criterion says {} but the PBH oracle says {}",
            verdict_word(geometric.holds),
            verdict_word(oracle)
        ));
    }
    if shared {
        if oracle {
            if !necessary.joint_undetectable_trivial {
                consistency.push(
                    "oracle is detectable but the joint undetectable intersection is nontrivial"
                        .into(),
                );
            }
            if !necessary.comm_covers_all_nodes {
                consistency.push(
                    "oracle is detectable but a node's undetectable subspace escapes the communication pair".into(),
                );
            }
            if !necessary.comm_rank_sufficient {
                consistency.push(
                    "oracle is detectable but the communication rank bound fails".into(),
                );
            }
            for r in &reaches {
                if !r.joint_trivial || !r.nodes_covered {
                    consistency.push(format!(
                        "oracle is detectable but reach {} fails its necessary conditions",
                        r.reach
                    ));
                }
            }
        }
        if spanning_tree {
            let sufficient =
                necessary.joint_undetectable_trivial && necessary.comm_covers_all_nodes;
            if sufficient != oracle {
                consistency.push(format!(
                    "spanning tree present: conditions (i)+(ii) say {} but the oracle says {}",
                    verdict_word(sufficient),
                    verdict_word(oracle)
                ));
            }
        }
        if let Some(verdict) = reach_sufficiency_verdict {
            if verdict != oracle {
                consistency.push(format!(
                    "observable communication pair: per-reach conditions say {} but the oracle says {}",
                    verdict_word(verdict),
                    verdict_word(oracle)
                ));
            }
        }
    }

    // witness validation
    let witness = match &geometric.witness {
        None => None,
        Some(w) => {
            if (w.norm() - 1.0).abs() > 1e-9 {
                consistency.push("witness vector is not unit norm".into());
            }
            match obar.contains(w) {
                Ok(true) => {}
                _ => consistency
                    .push("witness vector escapes the joint unobservable subspace".into()),
            }
            for i in 0..num_nodes {
                let block = DVector::from_column_slice(w.as_slice().get(i * n..(i + 1) * n).unwrap());
                if !per_node_und[i].contains(&block).unwrap_or(false) {
                    consistency.push(format!(
                        "witness block {} escapes that node's undetectable subspace",
                        original_vertices[i] + 1
                    ));
                }
            }
            Some(w.as_slice().to_vec())
        }
    };

    let verdict = if !consistency.is_empty() {
        Verdict::Inconsistent
    } else if oracle {
        Verdict::Detectable
    } else {
        Verdict::NotDetectable
    };

    Ok(DetectabilityReport {
        vertices: original_vertices.iter().map(|v| v + 1).collect(),
        state_dim: n,
        num_nodes,
        shared_comm: shared,
        oracle_detectable: oracle,
        geometric_holds: geometric.holds,
        geometric_intersection_dim: geometric.intersection_dim,
        joint_unobservable_dim: obar.dim(),
        laplacian_kernel_dim: decomposition.n_reaches(),
        comm_unobservable_dim: comm_unobs_dim,
        antistable_dim: plant_split.antistable.dim(),
        necessary,
        spanning_tree,
        tree_sufficiency,
        reaches,
        reach_sufficiency_applicable,
        reach_sufficiency_verdict,
        theorem_checks_advisory: !shared,
        witness,
        consistency,
        verdict,
    })
}

fn verdict_word(detectable: bool) -> &'static str {
    if detectable {
        "detectable"
    } else {
        "not detectable"
    }
}

/// Analyzes a batch of networks, in parallel when the `parallel` feature is
/// enabled.
#[cfg(feature = "parallel")]
pub fn analyze_many(nets: &[ObserverNetwork], tol: &Tolerances) -> Vec<Result<NetworkReport>> {
    nets.par_iter().map(|net| analyze(net, tol)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn analyze_many(nets: &[ObserverNetwork], tol: &Tolerances) -> Vec<Result<NetworkReport>> {
    analyze_many_seq(nets, tol)
}

/// Sequential batch analysis, kept available for benchmarking against the
/// parallel path.
pub fn analyze_many_seq(nets: &[ObserverNetwork], tol: &Tolerances) -> Vec<Result<NetworkReport>> {
    nets.iter().map(|net| analyze(net, tol)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    /// Two-node network with a scalar integrator plant where each node
    /// alone is blind but the pair covers the state.
    fn two_node_integrator() -> ObserverNetwork {
        // two decoupled integrators; node 1 sees state 1, node 2 sees state 2
        let a = DMatrix::<f64>::zeros(2, 2);
        let c1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let c2 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let graph = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![
                MeasurementChannel::new(c1).unwrap(),
                MeasurementChannel::new(c2).unwrap(),
            ],
            CommScheme::Shared(eye(2)),
            graph,
        )
        .unwrap()
    }

    #[test]
    fn augment_single_node_has_zero_comm_rows() {
        let a = DMatrix::from_row_slice(1, 1, &[0.5]);
        let c = DMatrix::from_row_slice(1, 1, &[1.0]);
        let net = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![MeasurementChannel::new(c.clone()).unwrap()],
            CommScheme::Shared(eye(1)),
            Digraph::new(1, []).unwrap(),
        )
        .unwrap();
        let pair = augment(&net).unwrap();
        assert_eq!(pair.hbar().nrows(), 1);
        assert_eq!(pair.hbar().norm(), 0.0);
        // the pair reduces to (C_1, A)
        let t = tols();
        assert_eq!(
            oracle_detectable(&net, &t).unwrap(),
            lti::pbh_detectable(&c, net.plant().a(), &t).unwrap()
        );
    }

    #[test]
    fn augment_two_node_block_layout() {
        // derived by applying the block rule with p_1 = p_2 = 1
        let a = DMatrix::<f64>::zeros(2, 2);
        let h1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let h2 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let net = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![
                MeasurementChannel::new(c.clone()).unwrap(),
                MeasurementChannel::new(c).unwrap(),
            ],
            CommScheme::PerNode(vec![h1.clone(), h2.clone()]),
            Digraph::new(2, [(0, 1), (1, 0)]).unwrap(),
        )
        .unwrap();
        let pair = augment(&net).unwrap();
        let mut expected = DMatrix::<f64>::zeros(2, 4);
        expected.view_mut((0, 0), (1, 2)).copy_from(&h1);
        expected.view_mut((0, 2), (1, 2)).copy_from(&(-&h1));
        expected.view_mut((1, 0), (1, 2)).copy_from(&(-&h2));
        expected.view_mut((1, 2), (1, 2)).copy_from(&h2);
        assert_eq!(pair.hbar(), &expected);
    }

    #[test]
    fn shared_comm_matches_kronecker() {
        let net = two_node_integrator();
        let pair = augment(&net).unwrap();
        let kron = net.graph().laplacian().kronecker(match net.comms() {
            CommScheme::Shared(h) => h,
            _ => unreachable!(),
        });
        assert_eq!(pair.hbar(), &kron);
    }

    #[test]
    fn big_unobservable_observable_comm_over_ring() {
        // observable (H, A): joint unobservable = (Ker L) (x) R^n
        let n = 3;
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j) as f64 * 0.17).sin());
        let ring = Digraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let net = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![MeasurementChannel::new(DMatrix::zeros(1, n)).unwrap(); 4],
            CommScheme::Shared(eye(n)),
            ring,
        )
        .unwrap();
        let obar = big_unobservable_subspace(&net, &tols()).unwrap();
        assert_eq!(obar.dim(), n); // d_L = 1, d_O = 0
        // spanned by 1_N (x) R^n
        let ones = DMatrix::from_element(4, 1, 0.5); // normalized 1_4
        let expected = Subspace::from_orthonormal(ones.kronecker(&eye(n)), 1e-9).unwrap();
        assert!(obar.same_as(&expected).unwrap());
    }

    #[test]
    fn big_unobservable_blind_comm_is_everything() {
        let net = ObserverNetwork::new(
            Plant::new(DMatrix::<f64>::zeros(2, 2)).unwrap(),
            vec![MeasurementChannel::new(eye(2)).unwrap(); 2],
            CommScheme::Shared(DMatrix::zeros(1, 2)),
            Digraph::new(2, [(0, 1), (1, 0)]).unwrap(),
        )
        .unwrap();
        let obar = big_unobservable_subspace(&net, &tols()).unwrap();
        assert_eq!(obar.dim(), 4);
    }

    #[test]
    fn antistable_kernel_matches_blockwise() {
        let net = two_node_integrator();
        let sub = antistable_kernel_augmented(&net, &tols()).unwrap();
        assert_eq!(sub.dim(), 4); // zero plant matrix: everything antistable
    }

    #[test]
    fn complementary_nodes_make_the_pair_detectable() {
        let net = two_node_integrator();
        let t = tols();
        assert!(oracle_detectable(&net, &t).unwrap());
        let geo = geometric_check(&net, &t).unwrap();
        assert!(geo.holds);
        let report = analyze(&net, &t).unwrap();
        assert_eq!(report.verdict, Verdict::Detectable);
        assert!(report.single().consistency.is_empty());
        // each node alone is not detectable
        assert!(report.single().necessary.nodes.iter().all(|c| c.undetectable_dim == 1));
    }

    #[test]
    fn duplicated_blind_nodes_are_not_detectable() {
        // both nodes measure the same coordinate; the other is lost
        let a = DMatrix::<f64>::zeros(2, 2);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let net = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![
                MeasurementChannel::new(c.clone()).unwrap(),
                MeasurementChannel::new(c).unwrap(),
            ],
            CommScheme::Shared(eye(2)),
            Digraph::new(2, [(0, 1), (1, 0)]).unwrap(),
        )
        .unwrap();
        let t = tols();
        let report = analyze(&net, &t).unwrap();
        assert_eq!(report.verdict, Verdict::NotDetectable);
        let comp = report.single();
        assert!(!comp.oracle_detectable);
        assert!(!comp.geometric_holds);
        assert!(!comp.necessary.joint_undetectable_trivial);
        assert!(comp.witness.is_some());
        assert!(comp.consistency.is_empty());
    }

    #[test]
    fn disconnected_network_reports_per_component() {
        // two isolated nodes, each fully observing: both components
        // detectable on their own
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let c = DMatrix::from_row_slice(1, 1, &[1.0]);
        let net = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![MeasurementChannel::new(c).unwrap(); 2],
            CommScheme::Shared(eye(1)),
            Digraph::new(2, []).unwrap(),
        )
        .unwrap();
        let report = analyze(&net, &tols()).unwrap();
        assert!(report.decoupled);
        assert_eq!(report.components.len(), 2);
        assert_eq!(report.verdict, Verdict::Detectable);
        assert_eq!(report.components[1].vertices, vec![2]);
    }

    #[test]
    fn mismatched_channel_count_rejected() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let res = ObserverNetwork::new(
            Plant::new(a).unwrap(),
            vec![MeasurementChannel::new(eye(2)).unwrap()],
            CommScheme::Shared(eye(2)),
            Digraph::new(2, [(0, 1)]).unwrap(),
        );
        assert!(matches!(res, Err(Error::DimensionMismatch(_))));
    }
}

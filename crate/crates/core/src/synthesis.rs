//! Constructive counterpart of a "detectable" verdict: stabilizing
//! output-injection gains for the augmented pair, plus simulation of the
//! interconnected estimation-error dynamics.
//!
//! Certification solves the filter Riccati equation
//! `A X + X A' - X M' M X + I = 0` through the stable invariant subspace of
//! its Hamiltonian matrix (computed with the ordered Schur decomposition),
//! first for the margin-shifted plant and, if that fails, for the unshifted
//! one. The returned dense gain `G = X M'` places the closed-loop spectral
//! abscissa of `Abar - G [Cbar; Hbar]` strictly left of the requested
//! margin.

use crate::config::Tolerances;
use crate::network::{pair_detectable, AugmentedPair, ObserverNetwork};
use crate::schur::ordered_schur;
use crate::{linalg, Error, Result};
use nalgebra::{DMatrix, DVector};
use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Per-node measurement and consensus injection gains.
#[derive(Clone, Debug)]
pub struct GainSet {
    /// `L_i`: `n x p_i` measurement injection per node.
    pub measurement: Vec<DMatrix<f64>>,
    /// `K_i`: `n x r_i` consensus injection per node.
    pub consensus: Vec<DMatrix<f64>>,
}

impl GainSet {
    pub fn new(measurement: Vec<DMatrix<f64>>, consensus: Vec<DMatrix<f64>>) -> Self {
        Self {
            measurement,
            consensus,
        }
    }

    /// All-zero gains of the shapes the network expects.
    pub fn zero(net: &ObserverNetwork) -> Self {
        let n = net.state_dim();
        let measurement = net
            .channels()
            .iter()
            .map(|ch| DMatrix::zeros(n, ch.c().nrows()))
            .collect();
        let consensus = (0..net.num_nodes())
            .map(|i| DMatrix::zeros(n, net.comm_matrix(i).nrows()))
            .collect();
        Self {
            measurement,
            consensus,
        }
    }

    fn validate(&self, net: &ObserverNetwork) -> Result<()> {
        let n = net.state_dim();
        let num_nodes = net.num_nodes();
        if self.measurement.len() != num_nodes || self.consensus.len() != num_nodes {
            return Err(Error::DimensionMismatch(format!(
                "gain set has {} measurement and {} consensus gains for {} nodes",
                self.measurement.len(),
                self.consensus.len(),
                num_nodes
            )));
        }
        for i in 0..num_nodes {
            let l = &self.measurement[i];
            let k = &self.consensus[i];
            linalg::ensure_finite("measurement gain", l)?;
            linalg::ensure_finite("consensus gain", k)?;
            if l.nrows() != n || l.ncols() != net.channels()[i].c().nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "measurement gain of node {} must be {} x {}",
                    i + 1,
                    n,
                    net.channels()[i].c().nrows()
                )));
            }
            if k.nrows() != n || k.ncols() != net.comm_matrix(i).nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "consensus gain of node {} must be {} x {}",
                    i + 1,
                    n,
                    net.comm_matrix(i).nrows()
                )));
            }
        }
        Ok(())
    }
}

/// A dense stabilizing output injection for the augmented pair.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// `nN x (rows of [Cbar; Hbar])` injection gain.
    pub gain: DMatrix<f64>,
    /// Largest real part over the closed-loop spectrum.
    pub spectral_abscissa: f64,
}

/// Largest real part of the spectrum of `m`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue magnitude of `m`.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Default integration step: `1e-3 / max(1, spectral radius)`.
pub fn default_step(m: &DMatrix<f64>) -> f64 {
    1e-3 / spectral_radius(m).max(1.0)
}

fn solve_filter_riccati(a: &DMatrix<f64>, outputs: &DMatrix<f64>, shift: f64) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    let a_shifted = a + DMatrix::<f64>::identity(k, k) * shift;
    let mtm = outputs.transpose() * outputs;
    let mut z = DMatrix::<f64>::zeros(2 * k, 2 * k);
    z.view_mut((0, 0), (k, k)).copy_from(&a_shifted.transpose());
    z.view_mut((0, k), (k, k)).copy_from(&(-&mtm));
    z.view_mut((k, 0), (k, k))
        .copy_from(&(-DMatrix::<f64>::identity(k, k)));
    z.view_mut((k, k), (k, k)).copy_from(&(-&a_shifted));

    let os = ordered_schur(&z, |c| c.re < 0.0)?;
    if os.selected_dim != k {
        return Err(Error::Numerical(format!(
            "Hamiltonian matrix has {} stable eigenvalues instead of {}",
            os.selected_dim, k
        )));
    }
    let u1 = os.q.view((0, 0), (k, k)).into_owned();
    let u2 = os.q.view((k, 0), (k, k)).into_owned();
    let lu = u1.transpose().full_piv_lu();
    let xt = lu.solve(&u2.transpose()).ok_or_else(|| {
        Error::Numerical("stable invariant subspace has a singular leading block".into())
    })?;
    let x = xt.transpose();
    Ok((&x + x.transpose()) * 0.5)
}

/// Computes a dense output-injection gain placing the spectral abscissa of
/// `Abar - G [Cbar; Hbar]` at or below `-margin`.
///
/// Fails with a precondition error when the pair is not detectable, and
/// with a numerical error (reporting the abscissa achieved) when the margin
/// cannot be met.
pub fn certify_stabilizable(pair: &AugmentedPair, tol: &Tolerances) -> Result<Certificate> {
    if !pair_detectable(pair, tol)? {
        return Err(Error::Precondition(
            "augmented pair is not detectable: no stabilizing output injection exists".into(),
        ));
    }
    let outputs = pair.stacked_outputs();
    let x = solve_filter_riccati(pair.abar(), &outputs, tol.margin)
        .or_else(|_| solve_filter_riccati(pair.abar(), &outputs, 0.0))?;
    let gain = &x * outputs.transpose();
    let closed = pair.abar() - &gain * &outputs;
    let abscissa = spectral_abscissa(&closed);
    if abscissa > -tol.margin {
        return Err(Error::Numerical(format!(
            "stabilization margin not met: spectral abscissa {abscissa:.6e} > {:.6e}",
            -tol.margin
        )));
    }
    Ok(Certificate {
        gain,
        spectral_abscissa: abscissa,
    })
}

/// Certifies a batch of pairs, in parallel when the `parallel` feature is
/// enabled.
#[cfg(feature = "parallel")]
pub fn certify_many(pairs: &[AugmentedPair], tol: &Tolerances) -> Vec<Result<Certificate>> {
    pairs.par_iter().map(|p| certify_stabilizable(p, tol)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn certify_many(pairs: &[AugmentedPair], tol: &Tolerances) -> Vec<Result<Certificate>> {
    pairs.iter().map(|p| certify_stabilizable(p, tol)).collect()
}

/// Closed-loop matrix of the interconnected error dynamics: diagonal blocks
/// `A - L_i C_i - p_i K_i H_i`, off-diagonal blocks `a_ij K_i H_i`.
///
/// The same matrix is also assembled as
/// `Abar - diag(L) Cbar - diag(K) Hbar`; the two constructions must agree.
pub fn closed_loop_matrix(net: &ObserverNetwork, gains: &GainSet) -> Result<DMatrix<f64>> {
    gains.validate(net)?;
    let n = net.state_dim();
    let num_nodes = net.num_nodes();
    let degrees = net.graph().in_degrees();
    let a = net.plant().a();

    let mut blockwise = DMatrix::<f64>::zeros(n * num_nodes, n * num_nodes);
    for (i, &degree) in degrees.iter().enumerate() {
        let hi = net.comm_matrix(i);
        let coupling = &gains.consensus[i] * hi;
        let diag = a
            - &gains.measurement[i] * net.channels()[i].c()
            - &coupling * degree as f64;
        blockwise.view_mut((i * n, i * n), (n, n)).copy_from(&diag);
        for j in 0..num_nodes {
            if j != i && net.graph().has_edge(j, i) {
                blockwise.view_mut((i * n, j * n), (n, n)).copy_from(&coupling);
            }
        }
    }

    let pair = crate::network::augment(net)?;
    let direct = pair.abar()
        - linalg::block_diag(&gains.measurement) * pair.cbar()
        - linalg::block_diag(&gains.consensus) * pair.hbar();
    let diff = (&blockwise - &direct).norm();
    if diff > 1e-12 * blockwise.norm().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "blockwise and matrix-form closed loops differ by {diff:.3e}"
        )));
    }
    Ok(blockwise)
}

/// Sampled trajectory of the stacked error state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Stacked error vectors, one per sample; node `i` occupies rows
    /// `i*n..(i+1)*n`.
    pub states: Vec<DVector<f64>>,
    /// Euclidean norm of the stacked error per sample.
    pub norms: Vec<f64>,
    /// Step index at which the integration overflowed, if it did.
    pub diverged_at: Option<usize>,
    pub state_dim: usize,
    pub num_nodes: usize,
}

impl Trajectory {
    /// `|e(T)| / |e(0)|` over the recorded samples.
    pub fn final_ratio(&self) -> f64 {
        let first = self.norms.first().copied().unwrap_or(0.0);
        let last = self.norms.last().copied().unwrap_or(0.0);
        if first == 0.0 {
            0.0
        } else {
            last / first
        }
    }

    /// Keeps every `stride`-th sample (and always the last one).
    pub fn decimate(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let last = self.times.len().saturating_sub(1);
        let mut keep: Vec<usize> = (0..self.times.len()).step_by(stride).collect();
        if keep.last() != Some(&last) && !self.times.is_empty() {
            keep.push(last);
        }
        Trajectory {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            states: keep.iter().map(|&i| self.states[i].clone()).collect(),
            norms: keep.iter().map(|&i| self.norms[i]).collect(),
            diverged_at: self.diverged_at,
            state_dim: self.state_dim,
            num_nodes: self.num_nodes,
        }
    }

    /// Writes the trajectory as CSV with header
    /// `t, e_1_1, ..., e_N_n, norm` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "t")?;
        for node in 1..=self.num_nodes {
            for comp in 1..=self.state_dim {
                write!(out, ", e_{node}_{comp}")?;
            }
        }
        writeln!(out, ", norm")?;
        for (idx, t) in self.times.iter().enumerate() {
            write!(out, "{t:.16e}")?;
            for value in self.states[idx].iter() {
                write!(out, ", {value:.16e}")?;
            }
            writeln!(out, ", {:.16e}", self.norms[idx])?;
        }
        Ok(())
    }
}

/// Classical fixed-step fourth-order integration of `de/dt = m e`.
pub fn simulate_closed_loop(
    m: &DMatrix<f64>,
    e0: &DVector<f64>,
    t_final: f64,
    dt: f64,
    state_dim: usize,
    num_nodes: usize,
) -> Result<Trajectory> {
    if m.nrows() != m.ncols() || m.nrows() != e0.len() {
        return Err(Error::DimensionMismatch(format!(
            "closed-loop matrix is {}x{} but the initial error has length {}",
            m.nrows(),
            m.ncols(),
            e0.len()
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidInput("step size must be positive".into()));
    }
    if !t_final.is_finite() || t_final < dt {
        return Err(Error::InvalidInput(
            "horizon must be at least one step long".into(),
        ));
    }
    if e0.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("initial error has non-finite entries".into()));
    }
    let steps = (t_final / dt).round().max(1.0) as usize;
    if steps > 2_000_000 {
        return Err(Error::InvalidInput(format!(
            "horizon/step combination needs {steps} steps; increase the step size"
        )));
    }

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut e = e0.clone();
    times.push(0.0);
    norms.push(e.norm());
    states.push(e.clone());
    let mut diverged_at = None;
    for step in 1..=steps {
        let k1 = m * &e;
        let k2 = m * (&e + &k1 * (dt / 2.0));
        let k3 = m * (&e + &k2 * (dt / 2.0));
        let k4 = m * (&e + &k3 * dt);
        e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let norm = e.norm();
        times.push(step as f64 * dt);
        norms.push(norm);
        states.push(e.clone());
        if !norm.is_finite() || norm > 1e150 {
            diverged_at = Some(step);
            break;
        }
    }
    Ok(Trajectory {
        times,
        states,
        norms,
        diverged_at,
        state_dim,
        num_nodes,
    })
}

/// Simulates the interconnected error dynamics under the given per-node
/// gains.
pub fn simulate_error_dynamics(
    net: &ObserverNetwork,
    gains: &GainSet,
    e0: &DVector<f64>,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    let m = closed_loop_matrix(net, gains)?;
    simulate_closed_loop(&m, e0, t_final, dt, net.state_dim(), net.num_nodes())
}

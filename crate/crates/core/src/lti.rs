//! Single-pair analysis: observability matrices, unobservable and
//! undetectable subspaces, and PBH rank tests.
//!
//! The PBH tests are deliberately kept on a separate computational route
//! (eigenvalues plus singular-value rank decisions) from the subspace
//! machinery, so the two can serve as independent cross-checks of each
//! other.

use crate::config::Tolerances;
use crate::subspaces::{self, Subspace};
use crate::{linalg, Error, Result};
use nalgebra::{Complex, DMatrix};

/// Absolute gap used to merge numerically identical eigenvalues before a
/// PBH sweep.
pub const EIG_CLUSTER_GAP: f64 = 1e-7;

/// The plant `dx/dt = A x + B2 xi`.
#[derive(Clone, Debug)]
pub struct Plant {
    a: DMatrix<f64>,
    b2: Option<DMatrix<f64>>,
}

impl Plant {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        Self::with_disturbance(a, None)
    }

    pub fn with_disturbance(a: DMatrix<f64>, b2: Option<DMatrix<f64>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        linalg::ensure_finite("state matrix", &a)?;
        if let Some(b) = &b2 {
            linalg::ensure_finite("disturbance matrix", b)?;
            if b.nrows() != a.nrows() {
                return Err(Error::DimensionMismatch(
                    "disturbance matrix row count must match the state dimension".into(),
                ));
            }
        }
        Ok(Self { a, b2 })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b2(&self) -> Option<&DMatrix<f64>> {
        self.b2.as_ref()
    }
}

/// One node's measurement `y = C x + D xi + Dbar xi_local`.
#[derive(Clone, Debug)]
pub struct MeasurementChannel {
    c: DMatrix<f64>,
    d: Option<DMatrix<f64>>,
    dbar: Option<DMatrix<f64>>,
}

impl MeasurementChannel {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        Self::with_noise(c, None, None)
    }

    pub fn with_noise(
        c: DMatrix<f64>,
        d: Option<DMatrix<f64>>,
        dbar: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        linalg::ensure_finite("measurement matrix", &c)?;
        for (name, m) in [("coupling matrix D", &d), ("noise matrix Dbar", &dbar)] {
            if let Some(m) = m {
                linalg::ensure_finite(name, m)?;
                if m.nrows() != c.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} must have as many rows as the measurement matrix"
                    )));
                }
            }
        }
        Ok(Self { c, d, dbar })
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> Option<&DMatrix<f64>> {
        self.d.as_ref()
    }

    pub fn dbar(&self) -> Option<&DMatrix<f64>> {
        self.dbar.as_ref()
    }
}

/// Stacks `C, CA, ..., CA^(n-1)`; `n` rows of blocks regardless of how
/// early the rank saturates.
pub fn observability_matrix(c: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("state matrix must be square".into()));
    }
    if c.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "measurement matrix has {} columns but the state dimension is {}",
            c.ncols(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut power = c.clone();
    for _ in 0..n {
        blocks.push(power.clone());
        power *= a;
    }
    linalg::vstack(&blocks)
}

/// Unobservable subspace of `(c, a)`: the largest `a`-invariant subspace
/// inside `Ker c`, equal to the kernel of the observability matrix.
///
/// Computed by the subspace recursion `W <- W ∩ {x : a x ∈ W}` starting
/// from `Ker c`. Unlike the raw observability stack, the recursion never
/// forms powers of `a`, so the rank decisions stay well scaled even when
/// the ambient dimension is large or the spectral radius is far from one.
pub fn unobservable_subspace(c: &DMatrix<f64>, a: &DMatrix<f64>, rank_tol: f64) -> Result<Subspace> {
    if a.nrows() != a.ncols() || c.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "unobservable subspace needs a square state matrix and matching output columns".into(),
        ));
    }
    linalg::ensure_finite("state matrix", a)?;
    let mut w = subspaces::kernel(c, rank_tol)?;
    loop {
        if w.is_zero() {
            return Ok(w);
        }
        let b = w.basis();
        // (I - B B') a vanishes exactly on {x : a x ∈ W}
        let outside = a - b * (b.transpose() * a);
        let pullback = subspaces::kernel(&outside, rank_tol)?;
        let next = w.intersect(&pullback)?;
        if next.dim() == w.dim() {
            return Ok(next);
        }
        w = next;
    }
}

/// Unobservable states of `(c, a)` that are not asymptotically stable:
/// the intersection of the unobservable subspace with the antistable modal
/// subspace of `a`.
pub fn undetectable_subspace(
    c: &DMatrix<f64>,
    a: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<Subspace> {
    let unobs = unobservable_subspace(c, a, tol.rank_tol)?;
    let anti = subspaces::antistable_modal_subspace(a, tol.eps_stab, tol.rank_tol)?;
    unobs.intersect(&anti)
}

/// Same as [`undetectable_subspace`] but reuses a precomputed antistable
/// subspace, which is shared across all nodes of a network.
pub fn undetectable_subspace_with(
    unobservable: &Subspace,
    antistable: &Subspace,
) -> Result<Subspace> {
    unobservable.intersect(antistable)
}

/// Distinct eigenvalues of `a`, one representative per conjugate pair
/// (nonnegative imaginary part), merged when closer than `gap`.
pub fn distinct_eigenvalues(a: &DMatrix<f64>, gap: f64) -> Vec<Complex<f64>> {
    let mut eigs: Vec<Complex<f64>> = a
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex::new(c.re, c.im.abs()))
        .collect();
    eigs.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut reps: Vec<Complex<f64>> = Vec::new();
    for e in eigs {
        match reps.last() {
            Some(last) if (e - last).norm() <= gap => {}
            _ => reps.push(e),
        }
    }
    reps
}

/// Rank of `[a - lambda I; c]` with the standard singular-value cut,
/// evaluated in complex arithmetic.
pub fn pbh_rank_at(
    c: &DMatrix<f64>,
    a: &DMatrix<f64>,
    lambda: Complex<f64>,
    rank_tol: f64,
) -> Result<usize> {
    let n = a.nrows();
    let p = c.nrows();
    let mut m = DMatrix::<Complex<f64>>::zeros(n + p, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Complex::new(a[(i, j)], 0.0);
        }
        m[(i, i)] -= lambda;
    }
    for i in 0..p {
        for j in 0..n {
            m[(n + i, j)] = Complex::new(c[(i, j)], 0.0);
        }
    }
    let sv = m.svd(false, false).singular_values;
    let sigma_max = sv.max();
    let cut = rank_tol * sigma_max * (n + p).max(n) as f64;
    Ok(sv.iter().filter(|s| **s > cut).count())
}

/// PBH test over an explicit set of candidate eigenvalues: true when
/// `[a - lambda I; c]` has full column rank at every candidate.
pub fn pbh_full_rank_at_all(
    c: &DMatrix<f64>,
    a: &DMatrix<f64>,
    candidates: &[Complex<f64>],
    rank_tol: f64,
) -> Result<bool> {
    if a.nrows() != a.ncols() || c.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "PBH test needs a square state matrix and matching output columns".into(),
        ));
    }
    linalg::ensure_finite("PBH state matrix", a)?;
    linalg::ensure_finite("PBH output matrix", c)?;
    let n = a.nrows();
    for lambda in candidates {
        if pbh_rank_at(c, a, *lambda, rank_tol)? < n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH observability: full rank at every distinct eigenvalue of `a`.
pub fn pbh_observable(c: &DMatrix<f64>, a: &DMatrix<f64>, tol: &Tolerances) -> Result<bool> {
    let eigs = distinct_eigenvalues(a, EIG_CLUSTER_GAP);
    pbh_full_rank_at_all(c, a, &eigs, tol.rank_tol)
}

/// PBH detectability: full rank at every distinct eigenvalue of `a` in the
/// closed right half-plane (`Re >= -eps_stab`).
pub fn pbh_detectable(c: &DMatrix<f64>, a: &DMatrix<f64>, tol: &Tolerances) -> Result<bool> {
    let eigs: Vec<Complex<f64>> = distinct_eigenvalues(a, EIG_CLUSTER_GAP)
        .into_iter()
        .filter(|l| l.re >= -tol.eps_stab)
        .collect();
    pbh_full_rank_at_all(c, a, &eigs, tol.rank_tol)
}

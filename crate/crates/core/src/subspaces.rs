//! Rank-revealing subspace algebra over R^n.
//!
//! A [`Subspace`] is always stored through an orthonormal basis; every
//! operation that produces a subspace re-orthonormalizes its result, so
//! downstream consumers can rely on `basis' * basis = I` without checking.
//! Rank decisions use the scale-invariant cut
//! `rank_tol * sigma_max * max(nrows, ncols)`.

use crate::{linalg, Error, Result};
use nalgebra::{DMatrix, DVector};

/// A linear subspace of R^n represented by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    tol: f64,
}

impl Subspace {
    /// The zero subspace of R^n.
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    /// All of R^n.
    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol,
        }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>, tol: f64) -> Result<Self> {
        let d = basis.ncols();
        let gram = basis.transpose() * &basis - DMatrix::<f64>::identity(d, d);
        if gram.norm() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "basis columns not orthonormal (defect {:.3e})",
                gram.norm()
            )));
        }
        Ok(Self {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        })
    }

    /// The span of arbitrary columns, orthonormalized.
    pub fn from_span(columns: &DMatrix<f64>, tol: f64) -> Result<Self> {
        image(columns, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.is_zero() {
            return DVector::zeros(self.ambient_dim);
        }
        &self.basis * (self.basis.transpose() * v)
    }

    /// Membership test: `v` lies in the subspace when its projection
    /// residual is below `tol * max(1, |v|)`.
    pub fn contains(&self, v: &DVector<f64>) -> Result<bool> {
        if v.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs ambient dimension {}",
                v.len(),
                self.ambient_dim
            )));
        }
        let resid = (v - self.project(v)).norm();
        Ok(resid <= self.tol * v.norm().max(1.0))
    }

    /// True when every basis vector of `other` lies in `self`.
    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::DimensionMismatch(
                "subspace containment across different ambient spaces".into(),
            ));
        }
        for j in 0..other.dim() {
            let col = DVector::from_column_slice(other.basis.column(j).as_slice());
            if !self.contains(&col)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Equality as subspaces: equal dimension and mutual containment.
    pub fn same_as(&self, other: &Subspace) -> Result<bool> {
        Ok(self.dim() == other.dim()
            && self.contains_subspace(other)?
            && other.contains_subspace(self)?)
    }

    /// Intersection via the null-space method: kernel vectors (z; w) of
    /// [U | -V] satisfy Uz = Vw, and those common points span U ∩ V.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::DimensionMismatch(
                "intersection across different ambient spaces".into(),
            ));
        }
        let tol = self.tol.max(other.tol);
        if self.is_zero() || other.is_zero() {
            return Ok(Subspace::zero(self.ambient_dim, tol));
        }
        let stacked = linalg::hstack(&[self.basis.clone(), -other.basis.clone()])?;
        let null = kernel(&stacked, tol)?;
        if null.is_zero() {
            return Ok(Subspace::zero(self.ambient_dim, tol));
        }
        let z_part = null.basis.view((0, 0), (self.dim(), null.dim())).into_owned();
        image(&(&self.basis * z_part), tol)
    }

    /// Sum of subspaces: the span of both bases together.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::DimensionMismatch(
                "sum across different ambient spaces".into(),
            ));
        }
        let tol = self.tol.max(other.tol);
        image(&linalg::hstack(&[self.basis.clone(), other.basis.clone()])?, tol)
    }
}

/// Orthonormal basis of the numerical null space of `m`.
///
/// Singular values below `tol * sigma_max * max(nrows, ncols)` are treated
/// as zero; a zero matrix therefore returns the full space.
pub fn kernel(m: &DMatrix<f64>, tol: f64) -> Result<Subspace> {
    linalg::ensure_finite("kernel input", m)?;
    let (rows, n) = m.shape();
    if n == 0 {
        return Ok(Subspace::zero(0, tol));
    }
    if rows == 0 {
        return Ok(Subspace::full(n, tol));
    }
    // nalgebra's SVD is thin; pad with zero rows so the full right factor
    // (and with it the null space) is available.
    let work = if rows < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (rows, n)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce right singular vectors".into()))?;
    let sigma_max = svd.singular_values.max();
    let cut = tol * sigma_max * rows.max(n) as f64;
    let mut cols = Vec::new();
    for (idx, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= cut {
            cols.push(v_t.row(idx).transpose());
        }
    }
    // rows of v_t only cover min(shape); trailing right-singular directions
    // (exact null space) appear when the padded matrix is square, which the
    // padding above guarantees for wide inputs.
    let basis = if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols.iter().map(|c| c.column(0).into_owned()).collect::<Vec<_>>())
    };
    Subspace::from_orthonormal(basis, tol)
}

/// Orthonormal basis of the column space of `m`.
pub fn image(m: &DMatrix<f64>, tol: f64) -> Result<Subspace> {
    linalg::ensure_finite("image input", m)?;
    let (rows, cols_n) = m.shape();
    if rows == 0 {
        return Ok(Subspace::zero(0, tol));
    }
    if cols_n == 0 {
        return Ok(Subspace::zero(rows, tol));
    }
    let svd = m.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce left singular vectors".into()))?;
    let sigma_max = svd.singular_values.max();
    let cut = tol * sigma_max * rows.max(cols_n) as f64;
    let mut keep = Vec::new();
    for (idx, sv) in svd.singular_values.iter().enumerate() {
        if *sv > cut {
            keep.push(u.column(idx).into_owned());
        }
    }
    let basis = if keep.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&keep)
    };
    Subspace::from_orthonormal(basis, tol)
}

/// Numerical rank with the same singular-value cut as [`kernel`].
pub fn rank(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    linalg::ensure_finite("rank input", m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(0);
    }
    let svd = m.clone().svd(false, false);
    let sigma_max = svd.singular_values.max();
    let cut = tol * sigma_max * rows.max(cols) as f64;
    Ok(svd.singular_values.iter().filter(|sv| **sv > cut).count())
}

/// The two halves of the modal decomposition of a square matrix.
#[derive(Clone, Debug)]
pub struct ModalSplit {
    /// Invariant subspace of eigenvalues with `Re >= -eps_stab`.
    pub antistable: Subspace,
    /// Invariant subspace of eigenvalues with `Re < -eps_stab`.
    pub stable: Subspace,
}

/// Splits R^n into the antistable and stable invariant subspaces of `f`,
/// computed from an ordered real Schur decomposition.
///
/// Eigenvalues with `Re >= -eps_stab` count as antistable, matching the
/// closed-right-half-plane convention, so a marginal eigenvalue (for example
/// a pure integrator) lands deterministically on the antistable side.
pub fn modal_split(f: &DMatrix<f64>, eps_stab: f64, rank_tol: f64) -> Result<ModalSplit> {
    if f.nrows() != f.ncols() {
        return Err(Error::DimensionMismatch(
            "modal split needs a square matrix".into(),
        ));
    }
    linalg::ensure_finite("modal split input", f)?;
    let n = f.nrows();
    let (q, t) = crate::schur::schur_factor(f)?;
    let anti = crate::schur::reorder_factor(q.clone(), t.clone(), |c| c.re >= -eps_stab)?;
    let stab = crate::schur::reorder_factor(q, t, |c| c.re < -eps_stab)?;
    if anti.selected_dim + stab.selected_dim != n {
        return Err(Error::Numerical(format!(
            "modal split dimensions disagree: {} antistable + {} stable != {}",
            anti.selected_dim, stab.selected_dim, n
        )));
    }
    let antistable = Subspace::from_orthonormal(
        anti.q.view((0, 0), (n, anti.selected_dim)).into_owned(),
        rank_tol,
    )?;
    let stable = Subspace::from_orthonormal(
        stab.q.view((0, 0), (n, stab.selected_dim)).into_owned(),
        rank_tol,
    )?;
    for (name, sub) in [("antistable", &antistable), ("stable", &stable)] {
        verify_invariance(f, sub, name)?;
    }
    Ok(ModalSplit { antistable, stable })
}

/// The antistable invariant subspace Ker of the unstable factor of the
/// minimal polynomial of `f`.
pub fn antistable_modal_subspace(f: &DMatrix<f64>, eps_stab: f64, rank_tol: f64) -> Result<Subspace> {
    Ok(modal_split(f, eps_stab, rank_tol)?.antistable)
}

fn verify_invariance(f: &DMatrix<f64>, sub: &Subspace, name: &str) -> Result<()> {
    if sub.is_zero() {
        return Ok(());
    }
    let b = sub.basis();
    let fb = f * b;
    let resid = (&fb - b * (b.transpose() * &fb)).norm();
    let scale = f.norm().max(1.0);
    if resid > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "{name} subspace failed the invariance check (residual {:.3e})",
            resid / scale
        )));
    }
    Ok(())
}

//! Ordered real Schur decomposition.
//!
//! nalgebra supplies the unordered quasi-triangular form `A = Q T Q'`; this
//! module reorders the diagonal blocks of `T` so that every eigenvalue
//! accepted by a selector comes first. The leading `selected_dim` columns of
//! the reordered `Q` then span the invariant subspace associated with the
//! selected eigenvalues.
//!
//! Reordering swaps adjacent diagonal blocks directly: the invariant
//! subspace of the trailing block is computed from a small Sylvester
//! equation, orthonormalized by a Householder QR, and the resulting
//! orthogonal similarity is applied to the full factorization. A swap whose
//! residual stays above tolerance aborts with a numerical error carrying a
//! condition estimate, since that indicates an eigenvalue cluster too close
//! to separate.

use crate::{Error, Result};
use nalgebra::{Complex, DMatrix};

pub struct OrderedSchur {
    /// Orthogonal factor; `a = q * t * q'`.
    pub q: DMatrix<f64>,
    /// Quasi-upper-triangular factor with selected blocks leading.
    pub t: DMatrix<f64>,
    /// Total size of the leading selected blocks.
    pub selected_dim: usize,
}

#[derive(Clone, Copy, Debug)]
struct Block {
    start: usize,
    size: usize,
}

/// Computes a real Schur form of `a` with the eigenvalues satisfying
/// `select` moved to the leading diagonal blocks.
///
/// The selector must treat complex-conjugate eigenvalues identically; it is
/// invoked once per 2x2 block with the eigenvalue of nonnegative imaginary
/// part.
pub fn ordered_schur(
    a: &DMatrix<f64>,
    select: impl Fn(Complex<f64>) -> bool,
) -> Result<OrderedSchur> {
    let (q, t) = schur_factor(a)?;
    reorder(q, t, select)
}

/// Unordered real Schur factorization `a = q t q'`. Useful when several
/// reorderings of the same matrix are needed.
pub fn schur_factor(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(
            "Schur decomposition needs a square matrix".into(),
        ));
    }
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration failed to converge".into()))?;
    Ok(schur.unpack())
}

/// Reorders an existing factorization so the selected eigenvalues lead.
pub fn reorder_factor(
    q: DMatrix<f64>,
    t: DMatrix<f64>,
    select: impl Fn(Complex<f64>) -> bool,
) -> Result<OrderedSchur> {
    reorder(q, t, select)
}

fn reorder(
    mut q: DMatrix<f64>,
    mut t: DMatrix<f64>,
    select: impl Fn(Complex<f64>) -> bool,
) -> Result<OrderedSchur> {
    let n = t.nrows();
    clean_subdiagonal(&mut t);
    standardize(&mut q, &mut t);

    let mut blocks = scan_blocks(&t);
    let mut selected: Vec<bool> = blocks
        .iter()
        .map(|b| select(block_eigenvalue(&t, b)))
        .collect();

    // Bubble selected blocks upward; classifications travel with the blocks
    // so later swaps never re-evaluate drifting eigenvalues.
    loop {
        let mut swapped = false;
        for j in 0..blocks.len().saturating_sub(1) {
            if !selected[j] && selected[j + 1] {
                swap_adjacent(&mut q, &mut t, &mut blocks, j)?;
                selected.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }

    let selected_dim = blocks
        .iter()
        .zip(&selected)
        .filter(|(_, s)| **s)
        .map(|(b, _)| b.size)
        .sum();
    debug_assert_eq!(blocks.iter().map(|b| b.size).sum::<usize>(), n);
    Ok(OrderedSchur { q, t, selected_dim })
}

fn clean_subdiagonal(t: &mut DMatrix<f64>) {
    let n = t.nrows();
    for i in 0..n.saturating_sub(1) {
        let small = f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs() + f64::MIN_POSITIVE);
        if t[(i + 1, i)].abs() <= small {
            t[(i + 1, i)] = 0.0;
        }
    }
}

fn scan_blocks(t: &DMatrix<f64>) -> Vec<Block> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        blocks.push(Block { start: i, size });
        i += size;
    }
    blocks
}

fn block_eigenvalue(t: &DMatrix<f64>, b: &Block) -> Complex<f64> {
    let i = b.start;
    if b.size == 1 {
        return Complex::new(t[(i, i)], 0.0);
    }
    let (a, bb, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let disc = (a - d) * (a - d) + 4.0 * bb * c;
    // standardize() has split real-eigenvalue blocks, so disc < 0 here.
    Complex::new(0.5 * (a + d), 0.5 * (-disc).max(0.0).sqrt())
}

/// Splits any 2x2 diagonal block with real eigenvalues into two 1x1 blocks
/// using a rotation built from one of its eigenvectors.
fn standardize(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let disc = (a - d) * (a - d) + 4.0 * b * c;
        if disc >= 0.0 {
            let lambda = 0.5 * (a + d) + 0.5 * disc.sqrt();
            // (B - lambda I) v = 0; pick the better-conditioned row.
            let v1 = (b, lambda - a);
            let v2 = (lambda - d, c);
            let (mut x, mut y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
                v1
            } else {
                v2
            };
            let norm = x.hypot(y);
            if norm > 0.0 {
                x /= norm;
                y /= norm;
                apply_rotation(q, t, i, x, y);
            }
            t[(i + 1, i)] = 0.0;
        }
        i += 2;
    }
}

/// Applies the similarity with G = [[x, -y], [y, x]] acting on rows/columns
/// (i, i+1) of `t` and columns (i, i+1) of `q`.
fn apply_rotation(q: &mut DMatrix<f64>, t: &mut DMatrix<f64>, i: usize, x: f64, y: f64) {
    let n = t.nrows();
    for col in 0..n {
        let (r0, r1) = (t[(i, col)], t[(i + 1, col)]);
        t[(i, col)] = x * r0 + y * r1;
        t[(i + 1, col)] = -y * r0 + x * r1;
    }
    for row in 0..n {
        let (c0, c1) = (t[(row, i)], t[(row, i + 1)]);
        t[(row, i)] = x * c0 + y * c1;
        t[(row, i + 1)] = -y * c0 + x * c1;
    }
    for row in 0..q.nrows() {
        let (c0, c1) = (q[(row, i)], q[(row, i + 1)]);
        q[(row, i)] = x * c0 + y * c1;
        q[(row, i + 1)] = -y * c0 + x * c1;
    }
}

/// Swaps diagonal blocks `j` and `j+1`.
fn swap_adjacent(
    q: &mut DMatrix<f64>,
    t: &mut DMatrix<f64>,
    blocks: &mut [Block],
    j: usize,
) -> Result<()> {
    let i = blocks[j].start;
    let p = blocks[j].size;
    let r = blocks[j + 1].size;
    let s = p + r;
    let n = t.nrows();

    let a11 = t.view((i, i), (p, p)).into_owned();
    let a12 = t.view((i, i + p), (p, r)).into_owned();
    let a22 = t.view((i + p, i + p), (r, r)).into_owned();

    // Solve A11 X - X A22 = -A12 through its Kronecker form.
    let mut sys = DMatrix::<f64>::zeros(p * r, p * r);
    for br in 0..r {
        for bc in 0..r {
            let coef = a22[(bc, br)];
            for k in 0..p {
                sys[(br * p + k, bc * p + k)] -= coef;
            }
        }
        sys.view_mut((br * p, br * p), (p, p))
            .iter_mut()
            .zip(a11.iter())
            .for_each(|(dst, src)| *dst += *src);
    }
    let rhs = DMatrix::from_fn(p * r, 1, |row, _| -a12[(row % p, row / p)]);
    let lu = sys.clone().full_piv_lu();
    let x = lu.solve(&rhs).ok_or_else(|| {
        Error::Numerical(format!(
            "block swap failed: eigenvalue separation too small (system norm {:.3e})",
            sys.norm()
        ))
    })?;
    let x = DMatrix::from_fn(p, r, |row, col| x[(col * p + row, 0)]);

    // Orthonormalize [X; I], giving a basis whose leading r columns span the
    // invariant subspace of the trailing block.
    let mut w = DMatrix::<f64>::zeros(s, r);
    w.view_mut((0, 0), (p, r)).copy_from(&x);
    for k in 0..r {
        w[(p + k, k)] = 1.0;
    }
    let g = householder_q(&w);

    let tb = t.view((i, i), (s, s)).into_owned();
    let tb_new = g.transpose() * &tb * &g;
    let resid = tb_new.view((r, 0), (p, r)).norm();
    let scale = tb.norm().max(1.0);
    if resid > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "block swap residual {:.3e} exceeds tolerance (coupling norm {:.3e})",
            resid / scale,
            x.norm()
        )));
    }

    // Apply the similarity to the full factorization.
    let right = t.view((i, i + s), (s, n - i - s)).into_owned();
    t.view_mut((i, i + s), (s, n - i - s))
        .copy_from(&(g.transpose() * right));
    let above = t.view((0, i), (i, s)).into_owned();
    t.view_mut((0, i), (i, s)).copy_from(&(above * &g));
    t.view_mut((i, i), (s, s)).copy_from(&tb_new);
    t.view_mut((i + r, i), (p, r)).fill(0.0);
    let qcols = q.view((0, i), (q.nrows(), s)).into_owned();
    q.view_mut((0, i), (q.nrows(), s)).copy_from(&(qcols * &g));

    blocks[j] = Block { start: i, size: r };
    blocks[j + 1] = Block {
        start: i + r,
        size: p,
    };
    Ok(())
}

/// Full orthogonal factor of the QR decomposition of a tall thin matrix.
fn householder_q(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (s, k) = w.shape();
    let mut r = w.clone();
    let mut q = DMatrix::<f64>::identity(s, s);
    for col in 0..k.min(s) {
        let tail = s - col;
        let mut v = DMatrix::<f64>::zeros(tail, 1);
        for row in 0..tail {
            v[(row, 0)] = r[(col + row, col)];
        }
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[(0, 0)] >= 0.0 { -norm } else { norm };
        v[(0, 0)] -= alpha;
        let vtv = v.norm_squared();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        // R <- H R on the trailing rows, Q <- Q H on the trailing columns.
        let rv = v.transpose() * r.view((col, 0), (tail, r.ncols()));
        let update = &v * rv * beta;
        let mut rview = r.view_mut((col, 0), (tail, w.ncols()));
        rview -= update;
        let qv = q.view((0, col), (s, tail)).into_owned() * &v;
        let update_q = qv * v.transpose() * beta;
        let mut qview = q.view_mut((0, col), (s, tail));
        qview -= update_q;
    }
    q
}

//! Small dense-matrix helpers shared across the crate.

use crate::{Error, Result};
use nalgebra::DMatrix;

pub(crate) fn ensure_finite(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} contains non-finite entries"
        )))
    }
}

/// Stacks matrices vertically. All blocks must share a column count.
pub(crate) fn vstack(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let ncols = blocks
        .iter()
        .map(|b| b.ncols())
        .max()
        .ok_or_else(|| Error::InvalidInput("vstack of zero blocks".into()))?;
    if blocks.iter().any(|b| b.ncols() != ncols && b.nrows() != 0) {
        return Err(Error::DimensionMismatch(
            "vstack blocks disagree on column count".into(),
        ));
    }
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut row = 0;
    for b in blocks {
        out.view_mut((row, 0), (b.nrows(), b.ncols())).copy_from(b);
        row += b.nrows();
    }
    Ok(out)
}

/// Concatenates matrices side by side. All blocks must share a row count.
pub(crate) fn hstack(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let nrows = blocks
        .iter()
        .map(|b| b.nrows())
        .max()
        .ok_or_else(|| Error::InvalidInput("hstack of zero blocks".into()))?;
    if blocks.iter().any(|b| b.nrows() != nrows && b.ncols() != 0) {
        return Err(Error::DimensionMismatch(
            "hstack blocks disagree on row count".into(),
        ));
    }
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut col = 0;
    for b in blocks {
        out.view_mut((0, col), (b.nrows(), b.ncols())).copy_from(b);
        col += b.ncols();
    }
    Ok(out)
}

/// Places the blocks on the diagonal of an otherwise-zero matrix.
/// Blocks may be rectangular; rows and columns accumulate independently.
pub(crate) fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let (mut row, mut col) = (0, 0);
    for b in blocks {
        out.view_mut((row, col), (b.nrows(), b.ncols())).copy_from(b);
        row += b.nrows();
        col += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vstack_and_hstack() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let v = vstack(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(v.nrows(), 3);
        assert_eq!(v[(2, 1)], 6.0);
        let h = hstack(&[b.clone(), b]).unwrap();
        assert_eq!(h.ncols(), 4);
        assert!(vstack(&[a, DMatrix::zeros(1, 3)]).is_err());
    }

    #[test]
    fn block_diag_rectangular() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let d = block_diag(&[a, b]);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(0, 1)], 2.0);
        assert_eq!(d[(1, 2)], 3.0);
        assert_eq!(d[(0, 2)], 0.0);
    }

    #[test]
    fn finite_check() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(ensure_finite("m", &m).is_err());
    }
}

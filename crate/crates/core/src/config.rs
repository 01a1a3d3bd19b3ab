use serde::{Deserialize, Serialize};

/// Numerical tolerances used by every rank decision in the toolkit.
///
/// `rank_tol` is applied as `rank_tol * sigma_max * max(nrows, ncols)`, the
/// usual scale-invariant singular-value cut. `eps_stab` sets the stability
/// boundary: eigenvalues with `Re >= -eps_stab` count as antistable, so the
/// marginal case (eigenvalue exactly on the imaginary axis) is classified
/// deterministically. `margin` is the stability margin demanded from
/// certified output-injection gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub eps_stab: f64,
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            eps_stab: 1e-9,
            margin: 1e-6,
        }
    }
}

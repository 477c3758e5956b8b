use crate::data::{ObservationMatrix, TaskKind};
use crate::error::{invalid, Result};

use super::linalg::{cholesky_solve, rank_one_lower, symmetrize_from_lower};
use super::{check_weights, FitConfig};

/// Minimizes `Σ wᵢ (yᵢ − xᵢᵀθ)² + λ‖θ‖²` over the listed rows via the
/// penalized normal equations. Only the supplied rows are touched.
pub fn fit_weighted_ridge(
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    if data.kind() != TaskKind::Regression {
        return Err(invalid("ridge regression needs a regression dataset"));
    }
    check_weights(rows, weights, true)?;
    let d = data.d();
    let mut gram = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    for (&i, &w) in rows.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let x = data.row(i);
        rank_one_lower(&mut gram, x, w);
        let wy = w * data.response(i);
        for (r, xj) in rhs.iter_mut().zip(x) {
            *r += wy * xj;
        }
    }
    for j in 0..d {
        gram[j * d + j] += cfg.penalty;
    }
    symmetrize_from_lower(&mut gram, d);
    cholesky_solve(&mut gram, &rhs)
}

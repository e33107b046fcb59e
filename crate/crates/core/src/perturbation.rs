//! First-order update of a symmetric eigendecomposition under a small symmetric perturbation.
//!
//! For eigenpairs `(λ_i, v_i)` of `B` and a symmetric `Δ`, the pairs of `B + Δ` are
//! approximated by
//!
//! ```text
//! λ'_i = λ_i + v_i' Δ v_i
//! v'_i = v_i + Σ_{j≠i} (v_j' Δ v_i) / (λ_i - λ_j) v_j
//! ```
//!
//! with error quadratic in `‖Δ‖`. The updated vectors are re-orthonormalized (modified
//! Gram-Schmidt, descending eigenvalue order) and sign-normalized so the result is again a
//! valid [`EigenpairSet`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{normalize_signs, orthonormalize, EigenpairSet};

/// Relative eigenvalue-gap threshold below which the update is refused.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Absolute gap threshold `rel_tol * (1 + |λ_max|)` for `pairs`.
pub fn degeneracy_threshold(pairs: &EigenpairSet, rel_tol: f64) -> f64 {
    let lambda_max = pairs.values().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    rel_tol * (1.0 + lambda_max)
}

/// Updates all pairs; every gap must clear the threshold.
pub fn eigenpair_update(prev: &EigenpairSet, delta: &DMatrix<f64>) -> Result<EigenpairSet> {
    eigenpair_update_leading(prev, delta, prev.dim(), DEGENERACY_TOL)
}

/// Updates all pairs, but only gaps involving one of the first `retained` pairs are checked.
///
/// Coupling terms between two trailing pairs whose gap is below the threshold are dropped.
/// That happens for the numerical null space of a rank-deficient Gram matrix, where the
/// perturbation acts trivially and the ratio is roundoff over roundoff.
pub fn eigenpair_update_leading(
    prev: &EigenpairSet,
    delta: &DMatrix<f64>,
    retained: usize,
    rel_tol: f64,
) -> Result<EigenpairSet> {
    let m = prev.dim();
    if delta.shape() != (m, m) {
        return Err(Error::param(format!(
            "perturbation is {}x{}, eigenpairs are {m}-dimensional",
            delta.nrows(),
            delta.ncols()
        )));
    }
    let scale = delta.amax().max(1.0);
    for i in 0..m {
        for j in (i + 1)..m {
            if (delta[(i, j)] - delta[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Contract("perturbation is not symmetric".into()));
            }
        }
    }
    let threshold = degeneracy_threshold(prev, rel_tol);
    if let Some(gap) = prev.min_gap(retained) {
        if gap < threshold {
            return Err(Error::Degenerate { gap, threshold });
        }
    }
    if delta.iter().all(|&v| v == 0.0) {
        return Ok(prev.clone());
    }

    let lambda = prev.values();
    let v = prev.vectors();
    // coupling[(j, i)] = v_j' Δ v_i
    let coupling = v.tr_mul(&(delta * v));

    let values = DVector::from_fn(m, |i, _| lambda[i] + coupling[(i, i)]);
    let mut vectors = v.clone();
    for i in 0..m {
        for j in 0..m {
            if j == i {
                continue;
            }
            let gap = lambda[i] - lambda[j];
            if i >= retained && j >= retained && gap.abs() < threshold {
                continue;
            }
            let c = coupling[(j, i)] / gap;
            vectors.column_mut(i).axpy(c, &v.column(j), 1.0);
        }
    }

    if values.iter().chain(vectors.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigenpair update produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let values = DVector::from_iterator(m, order.iter().map(|&k| values[k]));
    let mut vectors = vectors.select_columns(order.iter());
    orthonormalize(&mut vectors);
    normalize_signs(&mut vectors);
    EigenpairSet::from_pairs(values, vectors)
}

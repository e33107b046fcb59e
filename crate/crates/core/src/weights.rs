//! Per-observation weights of the reweighting scheme and the L1 reconstruction objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{project, DataMatrix, PrincipalComponents};

/// Entrywise L1 norm of `A - AXX'`, always on the unweighted data.
pub fn l1_objective(a: &DataMatrix, x: &PrincipalComponents) -> Result<f64> {
    if a.m() != x.m() {
        return Err(Error::param(format!(
            "data has {} columns but loadings have {} rows",
            a.m(),
            x.m()
        )));
    }
    let (_, e) = project(a.values(), x.loadings());
    Ok(l1_norm(&e))
}

pub(crate) fn l1_norm(e: &DMatrix<f64>) -> f64 {
    e.iter().map(|v| v.abs()).sum()
}

fn check_weights(n: usize, w: &DVector<f64>) -> Result<()> {
    if w.len() != n {
        return Err(Error::param(format!(
            "expected {n} weights, got {}",
            w.len()
        )));
    }
    if let Some(i) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::param(format!(
            "weight {} is {}, weights must be positive and finite",
            i + 1,
            w[i]
        )));
    }
    Ok(())
}

/// Row i scaled by `sqrt(w_i)`.
pub fn weighted_matrix(a: &DataMatrix, w: &DVector<f64>) -> Result<DataMatrix> {
    check_weights(a.n(), w)?;
    DataMatrix::new(scale_rows(a.values(), w))
}

pub(crate) fn scale_rows(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (mut row, &wi) in out.row_iter_mut().zip(w.iter()) {
        row *= wi.sqrt();
    }
    out
}

/// Output of [`raw_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawWeights {
    pub u: DVector<f64>,
    /// No row had residual energy above the zero threshold; `u` is all ones.
    pub all_zero: bool,
    /// Rows treated as zero-residual and assigned the largest ratio.
    pub zero_rows: usize,
}

/// Candidate weights from a residual matrix.
///
/// A row with `sum_j e_ij^2 > zero_row_energy` gets `sum_j |e_ij| / sum_j e_ij^2`; the remaining
/// rows get the largest of those ratios. Pass `zero_row_energy = 0.0` for the exact rule.
pub fn raw_weights(e: &DMatrix<f64>, zero_row_energy: f64) -> RawWeights {
    let n = e.nrows();
    let mut ratios: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut max_ratio = f64::NEG_INFINITY;
    for row in e.row_iter() {
        let sq: f64 = row.iter().map(|v| v * v).sum();
        if sq > zero_row_energy && sq > 0.0 {
            let ratio = row.iter().map(|v| v.abs()).sum::<f64>() / sq;
            max_ratio = max_ratio.max(ratio);
            ratios.push(Some(ratio));
        } else {
            ratios.push(None);
        }
    }
    let zero_rows = ratios.iter().filter(|r| r.is_none()).count();
    if zero_rows == n {
        return RawWeights {
            u: DVector::from_element(n, 1.0),
            all_zero: true,
            zero_rows,
        };
    }
    RawWeights {
        u: DVector::from_iterator(n, ratios.into_iter().map(|r| r.unwrap_or(max_ratio))),
        all_zero: false,
        zero_rows,
    }
}

/// Clamps each `u_i` into `[w_i (1 - beta^t), w_i (1 + beta^t)]`.
pub fn damped_weights(
    w_curr: &DVector<f64>,
    u_next: &DVector<f64>,
    beta: f64,
    t: usize,
) -> Result<DVector<f64>> {
    if w_curr.len() != u_next.len() {
        return Err(Error::param(format!(
            "weight vectors differ in length: {} vs {}",
            w_curr.len(),
            u_next.len()
        )));
    }
    if t < 1 {
        return Err(Error::param("iteration counter must be at least 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
    }
    let step = beta_power(beta, t);
    Ok(w_curr.zip_map(u_next, |w, u| {
        let lo = w * (1.0 - step);
        let hi = w * (1.0 + step);
        if u < lo {
            lo
        } else if u > hi {
            hi
        } else {
            u
        }
    }))
}

pub(crate) fn beta_power(beta: f64, t: usize) -> f64 {
    beta.powi(i32::try_from(t).unwrap_or(i32::MAX))
}

//! Iteratively reweighted least squares for L1-norm PCA.
//!
//! Each iteration scales row i of the data by `sqrt(w_i)`, solves ordinary L2-PCA on the
//! scaled matrix, scores the loadings by the L1 reconstruction error on the *original* data and
//! derives the next weights from that residual. [`wpca`] solves every L2 subproblem exactly;
//! [`awpca`] tracks the eigenpairs of the weighted Gram matrix and, when the weights moved only
//! a little, advances them with the first-order update from [`crate::perturbation`] instead.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    evd_full, l2pca_spectrum, project, weighted_gram, DataMatrix, EigenpairSet,
    PrincipalComponents,
};
use crate::perturbation::{eigenpair_update_leading, DEGENERACY_TOL};
use crate::weights::{damped_weights, l1_norm, raw_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every iteration solves L2-PCA exactly (wPCA).
    Exact,
    /// Small weight changes are handled by first-order eigenpair updates (awPCA).
    Approximate,
}

/// When awPCA falls back to an exact eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// `‖w^t - w^{t-1}‖_1 > γ ‖w^t‖_1`.
    Weights,
    /// `‖A_t - A_{t-1}‖_F^2 > γ ‖A‖_F^2`.
    Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsConfig {
    /// Weight-convergence tolerance on `‖w^t - w^{t-1}‖_1`.
    pub epsilon: f64,
    /// Damping base; the weight band at iteration t is `[1 - β^t, 1 + β^t]` times the old weight.
    pub beta: f64,
    /// Threshold of the awPCA exact-step trigger.
    pub gamma: f64,
    pub max_iters: usize,
    pub mode: Mode,
    pub trigger: Trigger,
    /// Use an exact eigendecomposition when the spectrum is too degenerate for the
    /// first-order update. When false, awPCA fails with [`Error::Degenerate`] instead.
    pub degenerate_fallback: bool,
    /// Relative eigenvalue-gap threshold for the first-order update.
    pub degeneracy_tol: f64,
    /// A residual row counts as zero when its energy is at most
    /// `zero_residual_tol^2 * ‖A‖_F^2 / n`.
    pub zero_residual_tol: f64,
    /// Keep every weight vector in [`IrlsResult::weight_history`].
    pub record_weights: bool,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        IrlsConfig {
            epsilon: 1e-3,
            beta: 0.99,
            gamma: 0.1,
            max_iters: 200,
            mode: Mode::Exact,
            trigger: Trigger::Weights,
            degenerate_fallback: true,
            degeneracy_tol: DEGENERACY_TOL,
            zero_residual_tol: 1e-10,
            record_weights: false,
        }
    }
}

impl IrlsConfig {
    pub fn approximate() -> Self {
        IrlsConfig {
            mode: Mode::Approximate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.max_iters < 1 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if !(self.degeneracy_tol >= 0.0) || !(self.zero_residual_tol >= 0.0) {
            return Err(Error::param("tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Weight change fell to epsilon or below.
    Converged,
    /// The iteration cap was reached first.
    MaxIters,
    /// Every residual row vanished: the incumbent reconstructs the data exactly.
    ZeroResidual,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::ZeroResidual => "zero_residual",
        }
    }

    /// Stopped for a reason other than the iteration cap.
    pub fn is_success(self) -> bool {
        self != Termination::MaxIters
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct IrlsResult {
    pub best_loadings: PrincipalComponents,
    pub best_objective: f64,
    /// Iteration (1-based) that produced the incumbent.
    pub best_iteration: usize,
    /// `F(X_t)` for t = 1, 2, ...
    pub objective_trace: Vec<f64>,
    /// `‖w^{t+1} - w^t‖_1` after the update of iteration t.
    pub weight_delta_trace: Vec<f64>,
    /// Descending spectrum of `A_t'A_t` used at iteration t (tracked values on approximate steps).
    pub eigenvalue_trace: Vec<DVector<f64>>,
    /// `w^1, w^2, ...` when [`IrlsConfig::record_weights`] is set.
    pub weight_history: Option<Vec<DVector<f64>>>,
    pub iterations_run: usize,
    pub termination: Termination,
    pub exact_steps: usize,
    pub approx_steps: usize,
    /// Approximate steps abandoned because of a degenerate spectrum.
    pub degenerate_fallbacks: usize,
}

/// Runs wPCA or awPCA according to `cfg.mode`.
pub fn fit(a: &DataMatrix, p: usize, cfg: &IrlsConfig) -> Result<IrlsResult> {
    match cfg.mode {
        Mode::Exact => wpca(a, p, cfg),
        Mode::Approximate => awpca(a, p, cfg),
    }
}

/// Exact IRLS: an L2-PCA solve on the reweighted data at every iteration.
pub fn wpca(a: &DataMatrix, p: usize, cfg: &IrlsConfig) -> Result<IrlsResult> {
    run(a, p, cfg, &mut ExactSolver)
}

/// Approximate IRLS: exact solves only while the weights are still moving a lot.
pub fn awpca(a: &DataMatrix, p: usize, cfg: &IrlsConfig) -> Result<IrlsResult> {
    let mut solver = ApproxSolver::new(a.values(), cfg);
    run(a, p, cfg, &mut solver)
}

struct Step {
    loadings: DMatrix<f64>,
    spectrum: DVector<f64>,
    approximate: bool,
    fallback: bool,
}

trait SubproblemSolver {
    /// Loadings for weights `w` (iteration `t`, previous weights `w_prev`).
    fn solve(
        &mut self,
        a: &DMatrix<f64>,
        p: usize,
        t: usize,
        w: &DVector<f64>,
        w_prev: &DVector<f64>,
    ) -> Result<Step>;
}

struct ExactSolver;

impl SubproblemSolver for ExactSolver {
    fn solve(
        &mut self,
        a: &DMatrix<f64>,
        p: usize,
        _t: usize,
        w: &DVector<f64>,
        _w_prev: &DVector<f64>,
    ) -> Result<Step> {
        let a_t = crate::weights::scale_rows(a, w);
        let (pcs, spectrum) = l2pca_spectrum(&a_t, p)?;
        Ok(Step {
            loadings: pcs.into_loadings(),
            spectrum,
            approximate: false,
            fallback: false,
        })
    }
}

struct ApproxSolver {
    trigger: Trigger,
    gamma: f64,
    fallback: bool,
    degeneracy_tol: f64,
    row_norms_sq: DVector<f64>,
    total_norm_sq: f64,
    pairs: Option<EigenpairSet>,
}

impl ApproxSolver {
    fn new(a: &DMatrix<f64>, cfg: &IrlsConfig) -> Self {
        let row_norms_sq = DVector::from_iterator(a.nrows(), a.row_iter().map(|r| r.norm_squared()));
        let total_norm_sq = row_norms_sq.sum();
        ApproxSolver {
            trigger: cfg.trigger,
            gamma: cfg.gamma,
            fallback: cfg.degenerate_fallback,
            degeneracy_tol: cfg.degeneracy_tol,
            row_norms_sq,
            total_norm_sq,
            pairs: None,
        }
    }

    fn exact_needed(&self, w: &DVector<f64>, w_prev: &DVector<f64>) -> bool {
        match self.trigger {
            Trigger::Weights => (w - w_prev).lp_norm(1) > self.gamma * w.lp_norm(1),
            Trigger::Delta => {
                // ‖A_t - A_{t-1}‖_F^2 = Σ_i (√w_i - √w'_i)^2 ‖a_i‖^2
                let change: f64 = w
                    .iter()
                    .zip(w_prev.iter())
                    .zip(self.row_norms_sq.iter())
                    .map(|((&wi, &vi), &ri)| (wi.sqrt() - vi.sqrt()).powi(2) * ri)
                    .sum();
                change > self.gamma * self.total_norm_sq
            }
        }
    }
}

impl SubproblemSolver for ApproxSolver {
    fn solve(
        &mut self,
        a: &DMatrix<f64>,
        p: usize,
        t: usize,
        w: &DVector<f64>,
        w_prev: &DVector<f64>,
    ) -> Result<Step> {
        let mut fallback = false;
        if let Some(prev) = self.pairs.as_ref().filter(|_| t > 1) {
            if !self.exact_needed(w, w_prev) {
                // A_t'A_t - A_{t-1}'A_{t-1} = A' diag(w^t - w^{t-1}) A
                let delta = weighted_gram(a, &(w - w_prev));
                match eigenpair_update_leading(prev, &delta, p, self.degeneracy_tol) {
                    Ok(next) => {
                        let step = Step {
                            loadings: next.vectors().columns(0, p).into_owned(),
                            spectrum: next.values().clone(),
                            approximate: true,
                            fallback: false,
                        };
                        self.pairs = Some(next);
                        return Ok(step);
                    }
                    Err(err @ Error::Degenerate { .. }) if !self.fallback => return Err(err),
                    Err(Error::Degenerate { .. }) => fallback = true,
                    Err(err) => return Err(err),
                }
            }
        }
        let pairs = evd_full(&weighted_gram(a, w))?;
        let loadings = if t == 1 {
            // the first iterate must coincide with plain L2-PCA bit for bit
            l2pca_spectrum(&crate::weights::scale_rows(a, w), p)?.0.into_loadings()
        } else {
            pairs.vectors().columns(0, p).into_owned()
        };
        let step = Step {
            loadings,
            spectrum: pairs.values().clone(),
            approximate: false,
            fallback,
        };
        self.pairs = Some(pairs);
        Ok(step)
    }
}

fn run(
    a: &DataMatrix,
    p: usize,
    cfg: &IrlsConfig,
    solver: &mut dyn SubproblemSolver,
) -> Result<IrlsResult> {
    cfg.validate()?;
    let m = a.m();
    if p < 1 || p > m {
        return Err(Error::param(format!(
            "number of components p must satisfy 1 <= p <= {m}, got {p}"
        )));
    }
    let data = a.values();
    let n = a.n();
    let zero_row_energy = cfg.zero_residual_tol.powi(2) * data.norm_squared() / n as f64;

    let mut w_prev = DVector::from_element(n, 2.0);
    let mut w = DVector::from_element(n, 1.0);
    let mut best: Option<(DMatrix<f64>, f64, usize)> = None;

    let mut objective_trace = Vec::new();
    let mut weight_delta_trace = Vec::new();
    let mut eigenvalue_trace = Vec::new();
    let mut weight_history = cfg.record_weights.then(|| vec![w.clone()]);
    let (mut exact_steps, mut approx_steps, mut degenerate_fallbacks) = (0, 0, 0);
    let mut termination = Termination::MaxIters;

    let mut t = 1;
    // the first pass always runs: ‖w^1 - w^0‖_1 = n
    while t <= cfg.max_iters && (t == 1 || (&w - &w_prev).lp_norm(1) > cfg.epsilon) {
        let step = solver.solve(data, p, t, &w, &w_prev)?;
        if step.approximate {
            approx_steps += 1;
        } else {
            exact_steps += 1;
        }
        if step.fallback {
            degenerate_fallbacks += 1;
        }
        eigenvalue_trace.push(step.spectrum);

        let (_, residual) = project(data, &step.loadings);
        let objective = l1_norm(&residual);
        objective_trace.push(objective);
        if best.as_ref().is_none_or(|(_, f, _)| objective < *f) {
            best = Some((step.loadings, objective, t));
        }

        let raw = raw_weights(&residual, zero_row_energy);
        let w_next = damped_weights(&w, &raw.u, cfg.beta, t)?;
        weight_delta_trace.push((&w_next - &w).lp_norm(1));
        if let Some(hist) = weight_history.as_mut() {
            hist.push(w_next.clone());
        }
        if raw.all_zero {
            termination = Termination::ZeroResidual;
            break;
        }
        w_prev = std::mem::replace(&mut w, w_next);
        t += 1;
    }
    if termination != Termination::ZeroResidual
        && weight_delta_trace.last().is_some_and(|&d| d <= cfg.epsilon)
    {
        termination = Termination::Converged;
    }

    let (loadings, best_objective, best_iteration) =
        best.ok_or_else(|| Error::Numerical("no iteration was run".into()))?;
    Ok(IrlsResult {
        best_loadings: PrincipalComponents::from_trusted(loadings),
        best_objective,
        best_iteration,
        iterations_run: objective_trace.len(),
        objective_trace,
        weight_delta_trace,
        eigenvalue_trace,
        weight_history,
        termination,
        exact_steps,
        approx_steps,
        degenerate_fallbacks,
    })
}

//! Synthetic low-rank instances with outlier rows.
//!
//! Recipe: draw `P ~ U(-100, 100)^{n x m}`, take its SVD `P = UΣV'`, perturb the leading `q`
//! left singular vectors row-wise by `H` and rebuild `A = (U_q + H) Σ_q V_q'`, then center the
//! columns. A row is an outlier with probability `r`; each of its `q` perturbation entries is
//! drawn from `N(0, 30^2)` with probability 0.1 and from `N(0, 1)` otherwise. Rows that are not
//! outliers get `N(0, 1)` entries throughout. `A` has rank at most `q` either way.
//!
//! Random draws come from [`GENERATOR`] seeded with the spec's seed, consumed in this order:
//! all of `P` row by row, then for each row its outlier draw followed by its `q` entries (each
//! entry of an outlier row first draws its extreme-value coin, then its normal variate).

use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{DataMatrix, Tolerances};

/// Identity of the random stream recorded in instance metadata.
pub const GENERATOR: &str = "chacha8-standard-normal-v1";

/// Standard deviation of the extreme perturbation entries.
pub const OUTLIER_SCALE: f64 = 30.0;

/// Probability that an entry of an outlier row is extreme.
pub const EXTREME_ENTRY_PROB: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    /// Target rank.
    pub q: usize,
    /// Outlier row probability.
    pub r: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < 1 {
            return Err(Error::param(format!(
                "instance needs m >= 1 and n >= 1, got m={} n={}",
                self.m, self.n
            )));
        }
        if self.q < 1 || self.q > self.m.min(self.n) {
            return Err(Error::param(format!(
                "target rank q must satisfy 1 <= q <= min(m, n) = {}, got {}",
                self.m.min(self.n),
                self.q
            )));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::param(format!(
                "outlier fraction r must lie in [0, 1], got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Single metadata line, e.g. `generator=... m=20 n=100 q=10 r=0.1 seed=7`.
    pub fn metadata_line(&self) -> String {
        format!(
            "generator={GENERATOR} m={} n={} q={} r={} seed={}",
            self.m, self.n, self.q, self.r, self.seed
        )
    }

    /// Recovers a spec from metadata lines written by [`SyntheticSpec::metadata_line`].
    pub fn from_metadata(lines: &[String]) -> Option<SyntheticSpec> {
        lines.iter().find_map(|line| {
            let mut fields = std::collections::HashMap::new();
            for tok in line.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    fields.insert(k, v);
                }
            }
            fields.get("generator")?;
            Some(SyntheticSpec {
                m: fields.get("m")?.parse().ok()?,
                n: fields.get("n")?.parse().ok()?,
                q: fields.get("q")?.parse().ok()?,
                r: fields.get("r")?.parse().ok()?,
                seed: fields.get("seed")?.parse().ok()?,
            })
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub spec: SyntheticSpec,
    pub data: DataMatrix,
    /// Rows that took the outlier branch.
    pub outlier_rows: Vec<bool>,
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let SyntheticSpec { m, n, q, r, seed } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let uniform = Uniform::new(-100.0, 100.0).map_err(|e| Error::param(e.to_string()))?;
    let mut p_rows = vec![0.0; n * m];
    for v in p_rows.iter_mut() {
        *v = rng.sample(uniform);
    }
    let p = DMatrix::from_row_slice(n, m, &p_rows);

    let mut h = DMatrix::zeros(n, q);
    let mut outlier_rows = Vec::with_capacity(n);
    for i in 0..n {
        let outlier = rng.random::<f64>() < r;
        outlier_rows.push(outlier);
        for j in 0..q {
            let scale = if outlier && rng.random::<f64>() < EXTREME_ENTRY_PROB {
                OUTLIER_SCALE
            } else {
                1.0
            };
            let z: f64 = rng.sample(StandardNormal);
            h[(i, j)] = scale * z;
        }
    }

    let tol = Tolerances::default();
    let svd = SVD::try_new(p, true, true, tol.solver_eps, tol.solver_max_iters)
        .ok_or_else(|| Error::Numerical("SVD of the random base matrix did not converge".into()))?;
    let mut u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD returned no left singular vectors".into()))?;
    let mut v = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right singular vectors".into()))?
        .transpose();
    // singular vectors are fixed up to sign; pin them so H lands the same way everywhere
    for k in 0..q {
        let pivot = v.column(k).iamax();
        if v[(pivot, k)] < 0.0 {
            v.column_mut(k).neg_mut();
            u.column_mut(k).neg_mut();
        }
    }

    let mut left = u.columns(0, q).into_owned() + h;
    for (k, s) in svd.singular_values.iter().take(q).enumerate() {
        left.column_mut(k).scale_mut(*s);
    }
    let mut a = left * v.columns(0, q).transpose();
    for mut col in a.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }

    let data = DataMatrix::new(a)?.with_metadata(vec![spec.metadata_line()]);
    Ok(SyntheticInstance {
        spec: *spec,
        data,
        outlier_rows,
    })
}

/// The synthetic grid used for the benchmark tables: every `(m, n, r)` combination with
/// `per_cell` instances each, seeds assigned consecutively from `base_seed`.
pub fn standard_grid(per_cell: usize, base_seed: u64) -> Vec<SyntheticSpec> {
    grid(&[20, 50], &[100, 300], &[0.0, 0.1, 0.2, 0.3], 10, per_cell, base_seed)
}

pub fn grid(
    ms: &[usize],
    ns: &[usize],
    rs: &[f64],
    q: usize,
    per_cell: usize,
    base_seed: u64,
) -> Vec<SyntheticSpec> {
    let mut specs = Vec::new();
    let mut seed = base_seed;
    for &m in ms {
        for &n in ns {
            for &r in rs {
                for _ in 0..per_cell {
                    specs.push(SyntheticSpec { m, n, q, r, seed });
                    seed += 1;
                }
            }
        }
    }
    specs
}

//! Dense linear-algebra layer.
//!
//! Everything above this module treats L2-PCA as a black box: hand it a matrix and a target
//! dimension, get back orthonormal loadings. The decompositions here are made deterministic by a
//! fixed sign convention (in every eigen/singular vector the entry of largest magnitude is
//! positive, earliest row on ties) and a fixed ordering (descending value, original index on
//! ties), so two calls on the same input return bitwise-identical loadings.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Tolerances used by the decompositions. `Tolerances::default()` holds the module constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum `|B_ij - B_ji|`, relative to `max(1, max|B|)`, accepted as symmetric.
    pub symmetry: f64,
    /// Convergence threshold handed to the iterative eigen/singular value solvers.
    pub solver_eps: f64,
    /// Iteration cap for the iterative solvers; 0 means unbounded.
    pub solver_max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symmetry: 1e-10,
            solver_eps: f64::EPSILON,
            solver_max_iters: 10_000,
        }
    }
}

/// Dense n x m observation-by-attribute matrix with all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    metadata: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyData(format!(
                "matrix must have at least one row and one column, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // nalgebra storage is column-major
            let (i, j) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Contract(format!(
                "non-finite entry {} at row {}, column {}",
                values[(i, j)],
                i + 1,
                j + 1
            )));
        }
        Ok(DataMatrix {
            values,
            metadata: Vec::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::param(format!(
                "row {} has {} entries, expected {}",
                bad + 1,
                rows[bad].len(),
                m
            )));
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn with_metadata(mut self, metadata: Vec<String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Free-form provenance lines (the `#` header lines of a matrix file, generator spec, ...).
    pub fn metadata(&self) -> &[String] {
        &self.metadata
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of attributes.
    pub fn m(&self) -> usize {
        self.values.ncols()
    }
}

/// Orthonormal m x p loading matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponents {
    loadings: DMatrix<f64>,
}

impl PrincipalComponents {
    /// Wraps `loadings` after applying the sign convention. Columns must be orthonormal to 1e-8.
    pub fn new(mut loadings: DMatrix<f64>) -> Result<Self> {
        let p = loadings.ncols();
        if p == 0 || p > loadings.nrows() {
            return Err(Error::param(format!(
                "loadings must be m x p with 1 <= p <= m, got {}x{}",
                loadings.nrows(),
                p
            )));
        }
        let dev = orthonormality_error(&loadings);
        if !(dev <= 1e-8) {
            return Err(Error::Contract(format!(
                "loading columns are not orthonormal (max |X'X - I| = {dev:e})"
            )));
        }
        normalize_signs(&mut loadings);
        Ok(PrincipalComponents { loadings })
    }

    pub(crate) fn from_trusted(loadings: DMatrix<f64>) -> Self {
        PrincipalComponents { loadings }
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn into_loadings(self) -> DMatrix<f64> {
        self.loadings
    }

    pub fn m(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn p(&self) -> usize {
        self.loadings.ncols()
    }
}

/// All m eigenpairs of a symmetric m x m matrix, eigenvalues descending, column k of
/// `vectors` paired with `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenpairSet {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenpairSet {
    /// Builds a set from raw pairs; sorts descending and applies the sign convention.
    pub fn from_pairs(values: DVector<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        let m = values.len();
        if vectors.nrows() != m || vectors.ncols() != m {
            return Err(Error::param(format!(
                "expected {m}x{m} eigenvectors, got {}x{}",
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        if values.iter().chain(vectors.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite eigenpair".into()));
        }
        let (values, mut vectors) = sort_descending(&values, &vectors);
        normalize_signs(&mut vectors);
        Ok(EigenpairSet { values, vectors })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The first `p` eigenvectors as principal components.
    pub fn leading(&self, p: usize) -> Result<PrincipalComponents> {
        check_p(p, self.dim())?;
        Ok(PrincipalComponents::from_trusted(
            self.vectors.columns(0, p).into_owned(),
        ))
    }

    /// Smallest `|λ_i - λ_j|` over pairs where at least one index is below `retained`.
    /// With `retained == dim()` this is the global minimum gap. `None` for a 1x1 set.
    pub fn min_gap(&self, retained: usize) -> Option<f64> {
        let m = self.dim();
        let retained = retained.min(m);
        let mut gap: Option<f64> = None;
        for i in 0..retained {
            for j in (i + 1)..m {
                let g = (self.values[i] - self.values[j]).abs();
                gap = Some(gap.map_or(g, |cur| cur.min(g)));
            }
        }
        gap
    }
}

fn check_p(p: usize, m: usize) -> Result<()> {
    if p < 1 || p > m {
        return Err(Error::param(format!(
            "number of components p must satisfy 1 <= p <= {m}, got {p}"
        )));
    }
    Ok(())
}

/// Largest `|(X'X - I)_kq|`.
pub fn orthonormality_error(x: &DMatrix<f64>) -> f64 {
    let gram = x.tr_mul(x);
    let mut worst = 0.0f64;
    for k in 0..gram.nrows() {
        for q in 0..gram.ncols() {
            let target = if k == q { 1.0 } else { 0.0 };
            worst = worst.max((gram[(k, q)] - target).abs());
        }
    }
    worst
}

/// Flips each column so its largest-magnitude entry is positive (lowest row wins ties).
pub fn normalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}

fn sort_descending(values: &DVector<f64>, vectors: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable: equal eigenvalues keep their original index order
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted_values = DVector::from_iterator(order.len(), order.iter().map(|&k| values[k]));
    let sorted_vectors = vectors.select_columns(order.iter());
    (sorted_values, sorted_vectors)
}

/// Modified Gram-Schmidt on the columns, in order. Columns that collapse numerically are
/// replaced with the first canonical basis vector that is not already spanned.
pub fn orthonormalize(vectors: &mut DMatrix<f64>) {
    let (m, k) = vectors.shape();
    for j in 0..k {
        for i in 0..j {
            let proj = vectors.column(i).dot(&vectors.column(j));
            let qi = vectors.column(i).clone_owned();
            vectors.column_mut(j).axpy(-proj, &qi, 1.0);
        }
        let norm = vectors.column(j).norm();
        if norm > 1e-12 {
            vectors.column_mut(j).unscale_mut(norm);
            continue;
        }
        for e in 0..m {
            let mut cand = DVector::zeros(m);
            cand[e] = 1.0;
            for i in 0..j {
                let proj = vectors.column(i).dot(&cand);
                cand.axpy(-proj, &vectors.column(i), 1.0);
            }
            let cn = cand.norm();
            if cn > 0.5 {
                vectors.set_column(j, &(cand / cn));
                break;
            }
        }
    }
}

/// Full symmetric eigendecomposition with the default tolerances.
pub fn evd_full(b: &DMatrix<f64>) -> Result<EigenpairSet> {
    evd_full_with(b, &Tolerances::default())
}

pub fn evd_full_with(b: &DMatrix<f64>, tol: &Tolerances) -> Result<EigenpairSet> {
    let (r, c) = b.shape();
    if r != c || r == 0 {
        return Err(Error::Contract(format!(
            "eigendecomposition needs a non-empty square matrix, got {r}x{c}"
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }
    let asym = asymmetry(b);
    if asym > tol.symmetry {
        return Err(Error::Contract(format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    let eig = SymmetricEigen::try_new(b.clone(), tol.solver_eps, tol.solver_max_iters)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    EigenpairSet::from_pairs(eig.eigenvalues, eig.eigenvectors)
}

fn asymmetry(b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..b.nrows() {
        for j in (i + 1)..b.ncols() {
            worst = worst.max((b[(i, j)] - b[(j, i)]).abs());
        }
    }
    worst / scale
}

/// `A'A`, symmetrized so roundoff cannot trip the symmetry check.
pub fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let g = a.tr_mul(a);
    (&g + g.transpose()) * 0.5
}

/// `A' diag(d) A` without forming the scaled copy of `A` twice.
pub fn weighted_gram(a: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = a.clone();
    for (mut row, &di) in scaled.row_iter_mut().zip(d.iter()) {
        row *= di;
    }
    let g = a.tr_mul(&scaled);
    (&g + g.transpose()) * 0.5
}

/// Top-`p` L2-PCA loadings of `a`.
pub fn l2pca(a: &DataMatrix, p: usize) -> Result<PrincipalComponents> {
    Ok(l2pca_spectrum(a.values(), p)?.0)
}

/// L2-PCA plus the descending spectrum of `A'A` (length m; zero-padded on the SVD path).
///
/// Uses the eigendecomposition of the m x m Gram matrix when n > m and a thin SVD of `A`
/// otherwise. Both paths return the same loadings up to roundoff.
pub(crate) fn l2pca_spectrum(
    a: &DMatrix<f64>,
    p: usize,
) -> Result<(PrincipalComponents, DVector<f64>)> {
    let (n, m) = a.shape();
    check_p(p, m)?;
    if n > m || p > n {
        let pairs = evd_full(&gram(a))?;
        let pcs = pairs.leading(p)?;
        return Ok((pcs, pairs.values));
    }
    let tol = Tolerances::default();
    let svd = SVD::try_new(a.clone(), false, true, tol.solver_eps, tol.solver_max_iters)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right singular vectors".into()))?;
    let mut spectrum = DVector::zeros(m);
    for (k, s) in svd.singular_values.iter().enumerate() {
        spectrum[k] = s * s;
    }
    let mut loadings = v_t.rows(0, p).transpose();
    normalize_signs(&mut loadings);
    Ok((PrincipalComponents::from_trusted(loadings), spectrum))
}

/// Scores `Y = AX` and residual `E = A - YX'`.
pub fn reconstruction(
    a: &DataMatrix,
    x: &PrincipalComponents,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if a.m() != x.m() {
        return Err(Error::param(format!(
            "data has {} columns but loadings have {} rows",
            a.m(),
            x.m()
        )));
    }
    Ok(project(a.values(), x.loadings()))
}

pub(crate) fn project(a: &DMatrix<f64>, x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let y = a * x;
    let e = a - &y * x.transpose();
    (y, e)
}

/// `||A - AXX'||_F^2`.
pub fn l2_objective(a: &DataMatrix, x: &PrincipalComponents) -> Result<f64> {
    let (_, e) = reconstruction(a, x)?;
    Ok(e.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn evd_identity() {
        let pairs = evd_full(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(pairs.values().as_slice(), &[1.0, 1.0, 1.0]);
        for k in 0..3 {
            let col = pairs.vectors().column(k);
            assert!((col.amax() - 1.0).abs() < 1e-15);
            assert!(col[col.iamax()] > 0.0);
        }
        assert!(orthonormality_error(pairs.vectors()) < 1e-12);
    }

    #[test]
    fn evd_diagonal() {
        let pairs = evd_full(&mat(&[&[1.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert_eq!(pairs.values().as_slice(), &[4.0, 1.0]);
        assert!((pairs.vectors()[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((pairs.vectors()[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evd_two_by_two() {
        let b = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let pairs = evd_full(&b).unwrap();
        assert!((pairs.values()[0] - 3.0).abs() < 1e-12);
        assert!((pairs.values()[1] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = pairs.vectors().column(0);
        let v1 = pairs.vectors().column(1);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
        // (-1, 1)/sqrt2 and (1, -1)/sqrt2 tie on magnitude; row 0 wins, so it is made positive
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] + h).abs() < 1e-12);
        for k in 0..2 {
            let v = pairs.vectors().column(k);
            let r = &b * v - v * pairs.values()[k];
            assert!(r.norm() <= 1e-8 * (1.0 + pairs.values()[k].abs()));
        }
    }

    #[test]
    fn evd_rejects_asymmetric() {
        let err = evd_full(&mat(&[&[1.0, 2.0], &[0.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = evd_full(&DMatrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn l2pca_axis_aligned() {
        let a = DataMatrix::new(mat(&[&[2.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        let x = l2pca(&a, 1).unwrap();
        assert!((x.loadings()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(x.loadings()[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn l2pca_rejects_bad_p() {
        let a = DataMatrix::new(DMatrix::from_element(3, 2, 1.0)).unwrap();
        assert!(matches!(l2pca(&a, 0), Err(Error::Parameter(_))));
        assert!(matches!(l2pca(&a, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn l2pca_svd_and_gram_paths_agree() {
        // wide matrix takes the SVD path; its transpose-free Gram route is checked by hand
        let a = mat(&[
            &[1.0, 2.0, 0.5, -1.0, 0.3],
            &[0.2, -1.0, 2.0, 0.7, 1.1],
            &[3.0, 0.1, -0.4, 0.9, -2.0],
        ]);
        let (svd_pcs, svd_spec) = l2pca_spectrum(&a, 2).unwrap();
        let pairs = evd_full(&gram(&a)).unwrap();
        let gram_pcs = pairs.leading(2).unwrap();
        assert!((svd_pcs.loadings() - gram_pcs.loadings()).amax() < 1e-10);
        for k in 0..3 {
            assert!((svd_spec[k] - pairs.values()[k]).abs() < 1e-9);
        }
        assert!(svd_spec[3] == 0.0 && svd_spec[4] == 0.0);
    }

    #[test]
    fn coordinate_projection() {
        let a = DataMatrix::new(mat(&[&[3.0, 4.0]])).unwrap();
        let x = PrincipalComponents::new(mat(&[&[1.0], &[0.0]])).unwrap();
        let (y, e) = reconstruction(&a, &x).unwrap();
        assert_eq!(y[(0, 0)], 3.0);
        assert_eq!(e, mat(&[&[0.0, 4.0]]));
    }

    #[test]
    fn reconstruction_dimension_mismatch() {
        let a = DataMatrix::new(DMatrix::from_element(2, 3, 1.0)).unwrap();
        let x = PrincipalComponents::new(DMatrix::identity(2, 1)).unwrap();
        assert!(matches!(reconstruction(&a, &x), Err(Error::Parameter(_))));
    }

    #[test]
    fn data_matrix_rejects_non_finite() {
        let mut v = DMatrix::from_element(2, 2, 1.0);
        v[(1, 0)] = f64::NAN;
        assert!(DataMatrix::new(v).is_err());
        assert!(DataMatrix::new(DMatrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn principal_components_reject_non_orthonormal() {
        let x = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(PrincipalComponents::new(x), Err(Error::Contract(_))));
    }

    #[test]
    fn orthonormalize_repairs_collapsed_columns() {
        let mut v = mat(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        orthonormalize(&mut v);
        assert!(orthonormality_error(&v) < 1e-12);
    }

    #[test]
    fn min_gap_restricted_to_retained() {
        let pairs = EigenpairSet::from_pairs(
            DVector::from_vec(vec![5.0, 3.0, 1e-14, 0.0]),
            DMatrix::identity(4, 4),
        )
        .unwrap();
        assert_eq!(pairs.min_gap(2), Some(2.0));
        assert_eq!(pairs.min_gap(1), Some(2.0));
        assert!(pairs.min_gap(4).unwrap() < 1e-13);
    }
}

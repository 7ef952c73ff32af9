//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Relative threshold for positive definiteness: `min eig > SPD_TOL * max eig`.
pub const SPD_TOL: f64 = 1e-12;

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted ascending.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Returns `(min, max)` eigenvalues after checking symmetry and definiteness.
pub fn check_spd(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = m.abs().max().max(1.0);
    let asym = asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    if m.nrows() == 0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let (values, _) = sorted_eigen(m);
    let min = values[0];
    let max = *values.last().unwrap();
    if !(min > SPD_TOL * max.abs()) || max <= 0.0 {
        return Err(Error::NotPositiveDefinite(min));
    }
    Ok((min, max))
}

fn padded_svd(m: &DMatrix<f64>) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    // Pad rows only so that V^T is always a full ncols x ncols matrix.
    let (r, c) = m.shape();
    if r >= c {
        return m.clone().svd(true, true);
    }
    let mut sq = DMatrix::zeros(c, c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    sq.svd(true, true)
}

/// Numerical rank with singular values compared to `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Orthonormal basis of the right null space of `m` (vectors of length `m.ncols()`).
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let c = m.ncols();
    if m.nrows() == 0 || m.abs().max() == 0.0 {
        return (0..c).map(|i| unit(c, i)).collect();
    }
    let svd = padded_svd(m);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let max = svd.singular_values.max();
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= rel_tol * max {
            let row = v_t.row(i);
            out.push(DVector::from_iterator(c, row.iter().copied()).normalize());
        }
    }
    out
}

/// Nearest orthogonal matrix in the Frobenius norm (polar factor).
pub fn nearest_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Least-squares solve of `m x = b` through the pseudo-inverse; `None` if `m` is rank deficient.
pub fn solve_full_rank(m: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Option<DVector<f64>> {
    if numerical_rank(m, rel_tol) < m.ncols() {
        return None;
    }
    let svd = m.clone().svd(true, true);
    svd.solve(b, 0.0).ok()
}

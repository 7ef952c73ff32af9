//! Symmetric positive-definite operators `A = I^{-1}` defining left-invariant metrics.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{AlgElement, LieAlgebraModel, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};

/// Off-block tolerance for "operator preserves subspace".
pub const PRESERVE_TOL: f64 = 1e-10;

/// SPD operator in the orthonormal basis, mapping momentum to velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricOperator {
    matrix: DMatrix<f64>,
}

impl MetricOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        linalg::check_spd(&matrix)?;
        Ok(Self {
            matrix: linalg::symmetrize(&matrix),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &AlgElement) -> AlgElement {
        &self.matrix * x
    }

    /// `H(x) = 1/2 <x, A x>`.
    pub fn energy(&self, x: &AlgElement) -> f64 {
        0.5 * x.dot(&self.apply(x))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sorted_eigen(&self.matrix).0
    }

    /// Norm of the part of `A(sub)` leaving `sub`.
    pub fn preservation_defect(&self, sub: &Subspace) -> f64 {
        off_block(&self.matrix, sub)
    }

    /// Compression of `A` to `sub`, in the subspace basis.
    pub fn restrict(&self, sub: &Subspace) -> Result<DMatrix<f64>> {
        restrict(&self.matrix, sub)
    }
}

fn off_block(m: &DMatrix<f64>, sub: &Subspace) -> f64 {
    let q = sub.basis_matrix();
    let mq = m * &q;
    (&mq - sub.projector() * &mq).norm()
}

/// Compression of a symmetric operator to a subspace it preserves.
pub fn restrict(m: &DMatrix<f64>, sub: &Subspace) -> Result<DMatrix<f64>> {
    let defect = off_block(m, sub);
    if defect > PRESERVE_TOL * m.norm().max(1.0) {
        return Err(Error::NotPreserved(defect));
    }
    let q = sub.basis_matrix();
    Ok(linalg::symmetrize(&(q.transpose() * m * &q)))
}

/// Block-diagonal metric `sum_i Q_i B_i Q_i^T` for an orthogonal decomposition.
pub fn make_block_metric(decomp: &[Subspace], blocks: &[DMatrix<f64>]) -> Result<MetricOperator> {
    let n = decomp.first().map(|s| s.ambient()).ok_or_else(|| {
        Error::InvalidArgument("empty decomposition".into())
    })?;
    if decomp.len() != blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: decomp.len(),
            found: blocks.len(),
        });
    }
    let total: usize = decomp.iter().map(Subspace::dim).sum();
    for (i, a) in decomp.iter().enumerate() {
        for b in &decomp[i + 1..] {
            let ov = a.overlap(b);
            if ov > 1e-10 {
                return Err(Error::NotOrthogonal(ov));
            }
        }
    }
    if total != n {
        return Err(Error::NotSpanning {
            expected: n,
            found: total,
        });
    }
    let mut m = DMatrix::zeros(n, n);
    for (sub, block) in decomp.iter().zip(blocks) {
        if block.nrows() != sub.dim() || block.ncols() != sub.dim() {
            return Err(Error::DimensionMismatch {
                expected: sub.dim(),
                found: block.nrows(),
            });
        }
        linalg::check_spd(block)?;
        let q = sub.basis_matrix();
        m += &q * block * q.transpose();
    }
    MetricOperator::new(m)
}

/// A chain of subalgebras `G_0 ⊂ G_1 ⊂ ... ⊂ G_n = G` with complements `V_i = G_i ⊖ G_{i-1}`.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    subalgebras: Vec<Subspace>,
    complements: Vec<Subspace>,
}

impl ChainSpec {
    pub fn new(alg: &LieAlgebraModel, subalgebras: Vec<Subspace>) -> Result<Self> {
        let n = alg.dim();
        let last = subalgebras
            .last()
            .ok_or_else(|| Error::InvalidArgument("empty chain".into()))?;
        if last.dim() != n {
            return Err(Error::Precondition("chain must end with the whole algebra".into()));
        }
        let mut complements = Vec::new();
        for (i, g) in subalgebras.iter().enumerate() {
            if g.ambient() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.ambient(),
                });
            }
            let res = alg.subalgebra_residual(g);
            if res > 1e-12 {
                return Err(Error::Precondition(format!(
                    "chain member {i} is not a subalgebra (leak {res:.3e})"
                )));
            }
            if i == 0 {
                continue;
            }
            let prev = &subalgebras[i - 1];
            if !g.contains_subspace(prev, 1e-12) || g.dim() <= prev.dim() {
                return Err(Error::Precondition(format!(
                    "chain member {} is not strictly contained in member {i}",
                    i - 1
                )));
            }
            let v = g.minus(prev);
            for p in prev.basis() {
                for w in v.basis() {
                    let b = alg.bracket(p, w);
                    let leak = v.distance(&b);
                    if leak > 1e-12 {
                        return Err(Error::Precondition(format!(
                            "[G_{}, V_{i}] leaves V_{i} (leak {leak:.3e})",
                            i - 1
                        )));
                    }
                }
            }
            complements.push(v);
        }
        Ok(Self {
            subalgebras,
            complements,
        })
    }

    /// Number of steps `n` (the chain has `n + 1` members).
    pub fn len(&self) -> usize {
        self.complements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.complements.is_empty()
    }

    /// `G_i`, `i = 0..=n`.
    pub fn subalgebra(&self, i: usize) -> &Subspace {
        &self.subalgebras[i]
    }

    pub fn subalgebras(&self) -> &[Subspace] {
        &self.subalgebras
    }

    /// `V_i`, `i = 1..=n`.
    pub fn complement(&self, i: usize) -> &Subspace {
        &self.complements[i - 1]
    }

    pub fn complements(&self) -> &[Subspace] {
        &self.complements
    }

    /// The block `so(k) ⊂ so(k+1) ⊂ ... ⊂ so(n)` chain of upper-left blocks
    /// (or the analogous u / sp blocks).
    pub fn standard_blocks(alg: &LieAlgebraModel, k: usize, n: usize) -> Result<Self> {
        let subs = (k..=n).map(|m| alg.block_span(&[(0..m).collect()])).collect();
        Self::new(alg, subs)
    }
}

/// `A = A_0 ⊕ s_1 Id_{V_1} ⊕ ... ⊕ s_n Id_{V_n}`; `a0` is given in the basis of `G_0`.
pub fn make_chain_metric(chain: &ChainSpec, a0: &DMatrix<f64>, s: &[f64]) -> Result<MetricOperator> {
    if s.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            expected: chain.len(),
            found: s.len(),
        });
    }
    if let Some(bad) = s.iter().find(|&&si| !(si > 0.0)) {
        return Err(Error::InvalidArgument(format!("chain weights must be positive, got {bad}")));
    }
    let mut decomp = vec![chain.subalgebra(0).clone()];
    let mut blocks = vec![a0.clone()];
    for (v, &si) in chain.complements().iter().zip(s) {
        decomp.push(v.clone());
        blocks.push(DMatrix::identity(v.dim(), v.dim()) * si);
    }
    if decomp[0].dim() == 0 {
        decomp.remove(0);
        blocks.remove(0);
    }
    make_block_metric(&decomp, &blocks)
}

/// Sectional operator `phi_{a,b,R}`: `R` on the Cartan subalgebra `K = ker ad_a`
/// and `ad_a^{-1} ad_b` on its orthogonal complement (the image of `ad_a`).
#[derive(Debug, Clone)]
pub struct SectionalOperator {
    pub matrix: DMatrix<f64>,
    pub cartan: Subspace,
    pub positive_definite: bool,
}

impl SectionalOperator {
    pub fn into_metric(self) -> Result<MetricOperator> {
        MetricOperator::new(self.matrix)
    }
}

/// Centralizer `ker ad_a`.
pub fn centralizer(alg: &LieAlgebraModel, a: &AlgElement) -> Subspace {
    let ad = alg.ad(a);
    Subspace::new(alg.dim(), &linalg::null_space(&ad, RANK_TOL))
}

/// `r` is an ambient operator; only its compression to `K` is used, and it
/// must map `K` into itself (and `split` into itself, when given).
pub fn make_sectional_operator(
    alg: &LieAlgebraModel,
    a: &AlgElement,
    b: &AlgElement,
    r: &DMatrix<f64>,
    split: Option<&Subspace>,
) -> Result<SectionalOperator> {
    alg.check_element(a)?;
    alg.check_element(b)?;
    let n = alg.dim();
    let k = centralizer(alg, a);
    if k.dim() != alg.rank() {
        return Err(Error::NotRegular {
            centralizer: k.dim(),
            expected: alg.rank(),
        });
    }
    let off = k.distance(b);
    if off > 1e-10 * b.norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "b must lie in the Cartan subalgebra of a (distance {off:.3e})"
        )));
    }
    let r_asym = linalg::asymmetry(r);
    if r_asym > 1e-12 * r.norm().max(1.0) {
        return Err(Error::NotSymmetric(r_asym));
    }
    let pk = k.projector();
    let rk = &pk * r * &pk;
    let leak = (r * k.basis_matrix() - &pk * r * k.basis_matrix()).norm();
    if leak > PRESERVE_TOL * r.norm().max(1.0) {
        return Err(Error::NotPreserved(leak));
    }
    if let Some(l) = split {
        let d = off_block(&rk, l);
        if d > PRESERVE_TOL * r.norm().max(1.0) {
            return Err(Error::NotPreserved(d));
        }
    }
    let image = k.complement();
    let q = image.basis_matrix();
    let ma = q.transpose() * alg.ad(a) * &q;
    let mb = q.transpose() * alg.ad(b) * &q;
    let mut y = DMatrix::zeros(image.dim(), image.dim());
    for j in 0..image.dim() {
        let col = linalg::solve_full_rank(&ma, &mb.column(j).into_owned(), RANK_TOL)
            .ok_or(Error::NotRegular {
                centralizer: n - linalg::numerical_rank(&ma, RANK_TOL),
                expected: alg.rank(),
            })?;
        y.set_column(j, &col);
    }
    let matrix = rk + &q * y * q.transpose();
    let asym = linalg::asymmetry(&matrix);
    if asym > 1e-10 * matrix.norm().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let matrix = linalg::symmetrize(&matrix);
    let positive_definite = linalg::check_spd(&matrix).is_ok();
    Ok(SectionalOperator {
        matrix,
        cartan: k,
        positive_definite,
    })
}

//! Compact Lie algebras in an orthonormal basis.
//!
//! A [`LieAlgebraModel`] stores the structure tensor `c[i][j][k]` with
//! `[e_i, e_j] = sum_k c[i][j][k] e_k` for a basis that is orthonormal under
//! the Ad-invariant product, so `<x, y>` is the plain dot product of
//! coordinates. Classical families also carry their defining representation
//! as real skew matrices; it is used for trace invariants and for group
//! reconstruction.

mod families;
mod subspace;

pub use families::{build_rigid_body, build_so, build_sp, build_u};
pub use subspace::Subspace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates of a Lie algebra element in the orthonormal basis.
pub type AlgElement = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "n", rename_all = "snake_case")]
pub enum Family {
    So(usize),
    U(usize),
    Sp(usize),
    /// so(3) in the cross-product basis, `[e1, e2] = e3`.
    RigidBody,
    Custom,
}

/// Real matrix representation of the basis, with `<X, Y> = -scale * tr(XY)`.
#[derive(Debug, Clone)]
pub struct Representation {
    pub matrices: Vec<DMatrix<f64>>,
    pub trace_scale: f64,
}

#[derive(Debug, Clone)]
pub struct LieAlgebraModel {
    family: Family,
    labels: Vec<String>,
    supports: Vec<Vec<usize>>,
    structure: Vec<f64>,
    rank: usize,
    rep: Option<Representation>,
}

impl LieAlgebraModel {
    /// Builds a model from a matrix representation whose basis is
    /// orthonormal for `-scale * tr(XY)`. Structure constants are read off
    /// the matrix commutators.
    pub(crate) fn from_representation(
        family: Family,
        labels: Vec<String>,
        supports: Vec<Vec<usize>>,
        rep: Representation,
        rank: usize,
    ) -> Self {
        let n = rep.matrices.len();
        let mut structure = vec![0.0; n * n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let comm = &rep.matrices[i] * &rep.matrices[j] - &rep.matrices[j] * &rep.matrices[i];
                for k in 0..n {
                    let c = rep_inner(&rep, &comm, &rep.matrices[k]);
                    let c = if c.abs() < 1e-15 { 0.0 } else { c };
                    structure[(i * n + j) * n + k] = c;
                    structure[(j * n + i) * n + k] = -c;
                }
            }
        }
        Self {
            family,
            labels,
            supports,
            structure,
            rank,
            rep: Some(rep),
        }
    }

    /// Builds a model directly from structure constants, without a matrix representation.
    pub fn from_structure_constants(
        labels: Vec<String>,
        structure: Vec<f64>,
        rank: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if structure.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                found: structure.len(),
            });
        }
        Ok(Self {
            family: Family::Custom,
            supports: vec![Vec::new(); n],
            labels,
            structure,
            rank,
            rep: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Indices of the defining-representation rows each basis element touches.
    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn representation(&self) -> Option<&Representation> {
        self.rep.as_ref()
    }

    /// Structure constant `c[i][j][k]`.
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.structure[(i * n + j) * n + k]
    }

    pub fn structure_tensor(&self) -> &[f64] {
        &self.structure
    }

    pub fn basis_vector(&self, i: usize) -> AlgElement {
        crate::linalg::unit(self.dim(), i)
    }

    pub fn zero(&self) -> AlgElement {
        DVector::zeros(self.dim())
    }

    pub fn check_element(&self, x: &AlgElement) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `[x, y]`, checked.
    pub fn try_bracket(&self, x: &AlgElement, y: &AlgElement) -> Result<AlgElement> {
        self.check_element(x)?;
        self.check_element(y)?;
        Ok(self.bracket(x, y))
    }

    /// `[x, y] = sum_{i,j} x_i y_j c[i][j][.]`. Panics on dimension mismatch.
    pub fn bracket(&self, x: &AlgElement, y: &AlgElement) -> AlgElement {
        let n = self.dim();
        assert_eq!(x.len(), n, "bracket: left operand has wrong dimension");
        assert_eq!(y.len(), n, "bracket: right operand has wrong dimension");
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = xi * y[j];
                if w == 0.0 || i == j {
                    continue;
                }
                let row = &self.structure[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, &c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Matrix of `ad_x = [x, .]` in the orthonormal basis.
    pub fn ad(&self, x: &AlgElement) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    m[(k, j)] += x[i] * self.c(i, j, k);
                }
            }
        }
        m
    }

    /// `sum_i x_i B_i` in the defining representation.
    pub fn to_matrix(&self, x: &AlgElement) -> Result<DMatrix<f64>> {
        let rep = self.require_rep()?;
        let size = rep.matrices[0].nrows();
        let mut m = DMatrix::zeros(size, size);
        for (xi, b) in x.iter().zip(&rep.matrices) {
            if *xi != 0.0 {
                m += b * *xi;
            }
        }
        Ok(m)
    }

    /// Orthogonal coordinates of a representation matrix (its component in the algebra).
    pub fn from_matrix(&self, m: &DMatrix<f64>) -> Result<AlgElement> {
        let rep = self.require_rep()?;
        Ok(DVector::from_iterator(
            self.dim(),
            rep.matrices.iter().map(|b| rep_inner(rep, m, b)),
        ))
    }

    fn require_rep(&self) -> Result<&Representation> {
        self.rep
            .as_ref()
            .ok_or_else(|| Error::Unsupported("algebra has no matrix representation".into()))
    }

    /// Largest antisymmetry residual `|c[i][j][k] + c[j][i][k]|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.c(i, j, k) + self.c(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// Largest Jacobi-identity residual over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += self.c(i, j, m) * self.c(m, k, l)
                                + self.c(j, k, m) * self.c(m, i, l)
                                + self.c(k, i, m) * self.c(m, j, l);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// `|<[x,y],z> + <y,[x,z]>|`, zero for an ad-invariant product.
    pub fn ad_invariance_defect(&self, x: &AlgElement, y: &AlgElement, z: &AlgElement) -> f64 {
        (self.bracket(x, y).dot(z) + y.dot(&self.bracket(x, z))).abs()
    }

    /// Smallest subalgebra containing `d`, by iterating span growth until stable.
    pub fn bracket_closure(&self, d: &Subspace) -> Subspace {
        let mut current = d.clone();
        loop {
            let basis = current.basis().to_vec();
            let mut vectors = basis.clone();
            for (i, u) in basis.iter().enumerate() {
                for v in &basis[i + 1..] {
                    vectors.push(self.bracket(u, v));
                }
            }
            let grown = Subspace::new(self.dim(), &vectors);
            if grown.dim() == current.dim() {
                return current;
            }
            current = grown;
        }
    }

    /// Whether `s` is closed under the bracket, with the worst leakage.
    pub fn subalgebra_residual(&self, s: &Subspace) -> f64 {
        let basis = s.basis();
        let mut worst: f64 = 0.0;
        for (i, u) in basis.iter().enumerate() {
            for v in &basis[i + 1..] {
                let b = self.bracket(u, v);
                worst = worst.max((&b - s.project(&b)).norm());
            }
        }
        worst
    }

    /// Span of the basis elements whose support lies inside one of the given index blocks.
    pub fn block_span(&self, blocks: &[Vec<usize>]) -> Subspace {
        let n = self.dim();
        let vectors: Vec<AlgElement> = (0..n)
            .filter(|&i| {
                let sup = &self.supports[i];
                blocks.iter().any(|b| sup.iter().all(|s| b.contains(s)))
            })
            .map(|i| self.basis_vector(i))
            .collect();
        Subspace::new(n, &vectors)
    }

    /// Span of the named basis elements.
    pub fn span_of_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Subspace> {
        let mut vectors = Vec::with_capacity(labels.len());
        for l in labels {
            let idx = self
                .label_index(l.as_ref())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown basis label {:?}", l.as_ref())))?;
            vectors.push(self.basis_vector(idx));
        }
        Ok(Subspace::new(self.dim(), &vectors))
    }
}

fn rep_inner(rep: &Representation, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    // tr(XY) = sum_ab X_ab Y_ba
    let mut tr = 0.0;
    for a in 0..x.nrows() {
        for b in 0..x.ncols() {
            tr += x[(a, b)] * y[(b, a)];
        }
    }
    -rep.trace_scale * tr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_is_antisymmetric_and_bilinear() {
        let g = build_so(4).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5]);
        let y = DVector::from_vec(vec![0.3, 0.1, -1.0, 2.0, 4.0, -0.7]);
        let z = DVector::from_vec(vec![0.0, 1.0, 1.0, 0.0, -1.0, 2.0]);
        assert!((g.bracket(&x, &y) + g.bracket(&y, &x)).norm() < 1e-14);
        assert!(g.bracket(&x, &x).norm() < 1e-14);
        let lhs = g.bracket(&(&x * 2.0 + &z), &y);
        let rhs = g.bracket(&x, &y) * 2.0 + g.bracket(&z, &y);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn try_bracket_rejects_wrong_dimension() {
        let g = build_so(3).unwrap();
        let x = DVector::zeros(3);
        let y = DVector::zeros(4);
        assert!(matches!(
            g.try_bracket(&x, &y),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn u1_is_abelian() {
        let g = build_u(1).unwrap();
        assert_eq!(g.dim(), 1);
        assert!(g.structure_tensor().iter().all(|&c| c == 0.0));
        let x = DVector::from_vec(vec![2.5]);
        let y = DVector::from_vec(vec![-1.0]);
        assert_eq!(g.bracket(&x, &y)[0], 0.0);
    }

    #[test]
    fn ad_matrix_matches_bracket() {
        let g = build_u(2).unwrap();
        let x = DVector::from_vec(vec![0.2, -0.4, 1.0, 0.7]);
        let y = DVector::from_vec(vec![1.1, 0.3, -0.5, 0.9]);
        assert!((g.ad(&x) * &y - g.bracket(&x, &y)).norm() < 1e-14);
    }

    #[test]
    fn closure_of_two_rigid_body_axes_is_everything() {
        let g = build_rigid_body();
        let d = Subspace::new(3, &[g.basis_vector(0), g.basis_vector(1)]);
        assert_eq!(g.bracket_closure(&d).dim(), 3);
        let full = Subspace::full(3);
        assert_eq!(g.bracket_closure(&full).dim(), 3);
    }

    #[test]
    fn chain_complement_generates_so4() {
        // so(2) ⊂ so(3) ⊂ so(4): D = V1 + V2 is the complement of so(2).
        let g = build_so(4).unwrap();
        let l = g.block_span(&[vec![0, 1]]);
        let d = l.complement();
        assert_eq!(d.dim(), 5);
        assert_eq!(g.bracket_closure(&d).dim(), 6);
    }

    #[test]
    fn closure_is_idempotent_and_contains_input() {
        let g = build_so(5).unwrap();
        let d = g.span_of_labels(&["f12", "f34"]).unwrap();
        let c = g.bracket_closure(&d);
        assert_eq!(c.dim(), 2);
        assert!(c.contains_subspace(&d, 1e-12));
        let d2 = g.span_of_labels(&["f12", "f23"]).unwrap();
        let c2 = g.bracket_closure(&d2);
        assert_eq!(c2.dim(), 3);
        assert_eq!(g.bracket_closure(&c2).dim(), 3);
        assert!(g.subalgebra_residual(&c2) < 1e-12);
    }

    #[test]
    fn matrix_round_trip() {
        let g = build_sp(2).unwrap();
        let x = DVector::from_iterator(10, (0..10).map(|i| (i as f64 * 0.37).sin()));
        let m = g.to_matrix(&x).unwrap();
        assert!((g.from_matrix(&m).unwrap() - &x).norm() < 1e-13);
    }

    #[test]
    fn custom_model_without_representation() {
        let g0 = build_rigid_body();
        let g = LieAlgebraModel::from_structure_constants(
            g0.labels().to_vec(),
            g0.structure_tensor().to_vec(),
            1,
        )
        .unwrap();
        assert!(g.to_matrix(&g.zero()).is_err());
        assert!(LieAlgebraModel::from_structure_constants(vec!["a".into()], vec![], 1).is_err());
    }
}

use nalgebra::{DMatrix, DVector};

use crate::linalg::RANK_TOL;

use super::AlgElement;

/// A linear subspace of a Lie algebra with an orthonormal basis.
///
/// Construction runs modified Gram-Schmidt twice over the input vectors, in
/// order, and drops vectors whose remaining norm falls below `RANK_TOL`
/// times the largest input norm. The basis therefore follows the input
/// ordering and orientation when the input is already orthonormal.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<AlgElement>,
}

impl Subspace {
    pub fn new(ambient: usize, vectors: &[AlgElement]) -> Self {
        let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut basis: Vec<AlgElement> = Vec::new();
        if scale == 0.0 {
            return Self { ambient, basis };
        }
        for v in vectors {
            assert_eq!(v.len(), ambient, "subspace vector has wrong dimension");
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&w);
                    w.axpy(-c, b, 1.0);
                }
            }
            let norm = w.norm();
            if norm > RANK_TOL * scale && basis.len() < ambient {
                basis.push(w / norm);
            }
        }
        Self { ambient, basis }
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: (0..ambient).map(|i| crate::linalg::unit(ambient, i)).collect(),
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgElement] {
        &self.basis
    }

    /// `ambient x dim` matrix whose columns are the basis vectors.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.ambient, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            q.set_column(j, b);
        }
        q
    }

    pub fn projector(&self) -> DMatrix<f64> {
        let q = self.basis_matrix();
        &q * q.transpose()
    }

    /// Orthogonal projection.
    pub fn project(&self, x: &AlgElement) -> AlgElement {
        let mut out = DVector::zeros(self.ambient);
        for b in &self.basis {
            out.axpy(b.dot(x), b, 1.0);
        }
        out
    }

    /// Coordinates of the projection in this subspace's basis.
    pub fn coords(&self, x: &AlgElement) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.basis.iter().map(|b| b.dot(x)))
    }

    /// Ambient element from coordinates in this basis.
    pub fn embed(&self, coords: &DVector<f64>) -> AlgElement {
        let mut out = DVector::zeros(self.ambient);
        for (c, b) in coords.iter().zip(&self.basis) {
            out.axpy(*c, b, 1.0);
        }
        out
    }

    pub fn complement(&self) -> Subspace {
        let mut vectors = self.basis.clone();
        vectors.extend((0..self.ambient).map(|i| crate::linalg::unit(self.ambient, i)));
        let all = Subspace::new(self.ambient, &vectors);
        Subspace {
            ambient: self.ambient,
            basis: all.basis[self.dim()..].to_vec(),
        }
    }

    /// Distance of `x` from the subspace.
    pub fn distance(&self, x: &AlgElement) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains(&self, x: &AlgElement, tol: f64) -> bool {
        self.distance(x) <= tol * x.norm().max(1.0)
    }

    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        other.basis.iter().all(|b| self.distance(b) <= tol)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut vectors = self.basis.clone();
        vectors.extend(other.basis.iter().cloned());
        Subspace::new(self.ambient, &vectors)
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        self.complement().sum(&other.complement()).complement()
    }

    /// Largest `|<u, v>|` over basis pairs; zero for orthogonal subspaces.
    pub fn overlap(&self, other: &Subspace) -> f64 {
        let mut worst: f64 = 0.0;
        for u in &self.basis {
            for v in &other.basis {
                worst = worst.max(u.dot(v).abs());
            }
        }
        worst
    }

    /// Largest `|<b_i, b_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.basis.iter().enumerate() {
            for (j, v) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u.dot(v) - target).abs());
            }
        }
        worst
    }

    /// `self ⊖ inner`: the orthogonal complement of `inner` inside `self`.
    pub fn minus(&self, inner: &Subspace) -> Subspace {
        let mut vectors = inner.basis.clone();
        vectors.extend(self.basis.iter().cloned());
        let all = Subspace::new(self.ambient, &vectors);
        Subspace {
            ambient: self.ambient,
            basis: all.basis[inner.dim()..].to_vec(),
        }
    }
}

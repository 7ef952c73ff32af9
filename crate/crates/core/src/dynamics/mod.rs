//! Euler-Poincare-Suslov dynamics: constraint geometry, vector fields,
//! integration, reconstruction on the group and structural diagnostics.

mod diagnostics;
mod field;
mod integrate;
mod poisson;
mod reconstruct;

pub use diagnostics::{divergence, integral_inheritance_check, InheritanceReport};
pub use field::{ep_field, eps_field, solve_multipliers, EpSystem, EpsSystem, FnField, Reversed, VectorField};
pub use integrate::{
    integrate, read_trajectory_csv, rk4_step, standard_monitors, write_trajectory_csv, IntegratorConfig,
    Monitor, Trajectory,
};
pub use poisson::{almost_poisson, jacobiator, Gradient, JACOBIATOR_FD_STEP};
pub use reconstruct::{
    body_velocities, orthogonality_defect, reconstruct_group, write_group_csv, GroupTrajectory, GROUP_DRIFT_TOL,
};

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgElement, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::metrics::MetricOperator;

/// Left-invariant distribution `D = {w : <w, a^i> = 0}` given by independent covectors `a^i`.
#[derive(Debug, Clone)]
pub struct Distribution {
    constraints: Vec<AlgElement>,
    span: Subspace,
    d: Subspace,
}

impl Distribution {
    pub fn new(dim: usize, constraints: Vec<AlgElement>) -> Result<Self> {
        for a in &constraints {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
        }
        if !constraints.is_empty() {
            let mut m = DMatrix::zeros(dim, constraints.len());
            for (j, a) in constraints.iter().enumerate() {
                m.set_column(j, a);
            }
            if linalg::numerical_rank(&m, RANK_TOL) < constraints.len() {
                return Err(Error::InvalidArgument("constraint vectors are linearly dependent".into()));
            }
        }
        let span = Subspace::new(dim, &constraints);
        let d = span.complement();
        Ok(Self { constraints, span, d })
    }

    /// Distribution equal to `d`, constrained by an orthonormal basis of its complement.
    pub fn from_subspace(d: &Subspace) -> Self {
        let span = d.complement();
        Self {
            constraints: span.basis().to_vec(),
            span,
            d: d.clone(),
        }
    }

    pub fn unconstrained(dim: usize) -> Self {
        Self::from_subspace(&Subspace::full(dim))
    }

    pub fn dim(&self) -> usize {
        self.d.ambient()
    }

    /// Number of constraints `rho`.
    pub fn codim(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[AlgElement] {
        &self.constraints
    }

    /// `D` itself.
    pub fn subspace(&self) -> &Subspace {
        &self.d
    }

    /// `L = span{a^i}`.
    pub fn annihilator(&self) -> &Subspace {
        &self.span
    }
}

/// The constraint manifold `M = A^{-1}(D)`, a linear subspace of momenta.
#[derive(Debug, Clone)]
pub struct ConstraintManifold {
    constraints: Vec<AlgElement>,
    a_constraints: Vec<AlgElement>,
    gram_inv: DMatrix<f64>,
    metric: MetricOperator,
    tangent: Subspace,
}

impl ConstraintManifold {
    pub fn new(metric: &MetricOperator, dist: &Distribution) -> Result<Self> {
        if metric.dim() != dist.dim() {
            return Err(Error::DimensionMismatch {
                expected: dist.dim(),
                found: metric.dim(),
            });
        }
        let rho = dist.codim();
        let a_constraints: Vec<AlgElement> = dist.constraints().iter().map(|a| metric.apply(a)).collect();
        let gram = DMatrix::from_fn(rho, rho, |i, j| a_constraints[j].dot(&dist.constraints()[i]));
        let gram_inv = if rho == 0 {
            gram
        } else {
            if linalg::numerical_rank(&gram, 1e-12) < rho {
                return Err(Error::SingularGram);
            }
            gram.try_inverse().ok_or(Error::SingularGram)?
        };
        let inv = metric
            .matrix()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite(0.0))?
            .inverse();
        let tangent_vectors: Vec<AlgElement> = dist.subspace().basis().iter().map(|d| &inv * d).collect();
        let tangent = Subspace::new(dist.dim(), &tangent_vectors);
        Ok(Self {
            constraints: dist.constraints().to_vec(),
            a_constraints,
            gram_inv,
            metric: metric.clone(),
            tangent,
        })
    }

    /// `M` as a subspace of the algebra.
    pub fn subspace(&self) -> &Subspace {
        &self.tangent
    }

    /// `<A x, a^i>` for each constraint.
    pub fn constraint_values(&self, x: &AlgElement) -> DVector<f64> {
        DVector::from_iterator(self.a_constraints.len(), self.a_constraints.iter().map(|aa| aa.dot(x)))
    }

    /// `max_i |<A x, a^i>|`.
    pub fn residual(&self, x: &AlgElement) -> f64 {
        self.constraint_values(x).amax()
    }

    /// Multipliers for an arbitrary right-hand side `v`: the `lambda` making
    /// `v + sum lambda_i a^i` tangent to `M`.
    pub(crate) fn tangent_multipliers(&self, v: &AlgElement) -> DVector<f64> {
        let rhs = -self.constraint_values(v);
        &self.gram_inv * rhs
    }

    /// Restores `<A(x + delta), a^i> = 0` with `delta` in `span{a^i}`.
    pub fn project(&self, x: &AlgElement) -> AlgElement {
        let mu = self.tangent_multipliers(x);
        let mut out = x.clone();
        for (m, a) in mu.iter().zip(&self.constraints) {
            out.axpy(*m, a, 1.0);
        }
        out
    }

    pub fn metric(&self) -> &MetricOperator {
        &self.metric
    }

    pub fn constraints(&self) -> &[AlgElement] {
        &self.constraints
    }
}

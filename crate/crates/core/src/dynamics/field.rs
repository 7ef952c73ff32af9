use nalgebra::{DMatrix, DVector};

use super::{ConstraintManifold, Distribution};
use crate::algebra::{AlgElement, LieAlgebraModel};
use crate::error::{Error, Result};
use crate::metrics::MetricOperator;

/// An autonomous vector field on the coordinate space of an algebra.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &AlgElement) -> Result<AlgElement>;
}

/// Adapter for closures.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&AlgElement) -> AlgElement + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&AlgElement) -> AlgElement + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        Ok((self.f)(x))
    }
}

/// The time-reversed field `-f`.
pub struct Reversed<'a, V: ?Sized>(pub &'a V);

impl<V: VectorField + ?Sized> VectorField for Reversed<'_, V> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        Ok(-self.0.eval(x)?)
    }
}

/// The EPS system `x' = [x, A x] + sum lambda_i a^i` with multipliers keeping
/// `A x` in `D`.
#[derive(Debug, Clone)]
pub struct EpsSystem<'a> {
    alg: &'a LieAlgebraModel,
    manifold: ConstraintManifold,
}

impl<'a> EpsSystem<'a> {
    pub fn new(alg: &'a LieAlgebraModel, metric: &MetricOperator, dist: &Distribution) -> Result<Self> {
        if metric.dim() != alg.dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.dim(),
                found: metric.dim(),
            });
        }
        Ok(Self {
            alg,
            manifold: ConstraintManifold::new(metric, dist)?,
        })
    }

    pub fn algebra(&self) -> &LieAlgebraModel {
        self.alg
    }

    pub fn metric(&self) -> &MetricOperator {
        self.manifold.metric()
    }

    pub fn manifold(&self) -> &ConstraintManifold {
        &self.manifold
    }

    /// `[x, A x]`.
    pub fn free_field(&self, x: &AlgElement) -> AlgElement {
        self.alg.bracket(x, &self.metric().apply(x))
    }

    /// Solves `sum_j <A a^j, a^i> lambda_j = -<A [x, A x], a^i>`.
    pub fn multipliers(&self, x: &AlgElement) -> DVector<f64> {
        self.manifold.tangent_multipliers(&self.free_field(x))
    }

    pub fn field(&self, x: &AlgElement) -> AlgElement {
        let mut v = self.free_field(x);
        let lambda = self.manifold.tangent_multipliers(&v);
        for (l, a) in lambda.iter().zip(self.manifold.constraints()) {
            v.axpy(*l, a, 1.0);
        }
        v
    }

    pub fn energy(&self, x: &AlgElement) -> f64 {
        self.metric().energy(x)
    }
}

impl VectorField for EpsSystem<'_> {
    fn dim(&self) -> usize {
        self.alg.dim()
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        self.alg.check_element(x)?;
        Ok(self.field(x))
    }
}

/// The unconstrained Euler-Poincare field `x' = [x, B x]` for a symmetric `B`.
#[derive(Debug, Clone)]
pub struct EpSystem<'a> {
    alg: &'a LieAlgebraModel,
    op: DMatrix<f64>,
}

impl<'a> EpSystem<'a> {
    pub fn new(alg: &'a LieAlgebraModel, op: DMatrix<f64>) -> Result<Self> {
        if op.nrows() != alg.dim() || op.ncols() != alg.dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.dim(),
                found: op.nrows(),
            });
        }
        Ok(Self { alg, op })
    }

    pub fn field(&self, x: &AlgElement) -> AlgElement {
        self.alg.bracket(x, &(&self.op * x))
    }
}

impl VectorField for EpSystem<'_> {
    fn dim(&self) -> usize {
        self.alg.dim()
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        self.alg.check_element(x)?;
        Ok(self.field(x))
    }
}

pub fn solve_multipliers(
    alg: &LieAlgebraModel,
    metric: &MetricOperator,
    dist: &Distribution,
    x: &AlgElement,
) -> Result<DVector<f64>> {
    alg.check_element(x)?;
    Ok(EpsSystem::new(alg, metric, dist)?.multipliers(x))
}

pub fn eps_field(
    alg: &LieAlgebraModel,
    metric: &MetricOperator,
    dist: &Distribution,
    x: &AlgElement,
) -> Result<AlgElement> {
    EpsSystem::new(alg, metric, dist)?.eval(x)
}

pub fn ep_field(alg: &LieAlgebraModel, op: &DMatrix<f64>, x: &AlgElement) -> Result<AlgElement> {
    EpSystem::new(alg, op.clone())?.eval(x)
}

use nalgebra::DMatrix;
use rand::Rng;

use crate::algebra::{AlgElement, LieAlgebraModel, Subspace};
use crate::dynamics::{ConstraintManifold, Distribution, EpsSystem, VectorField};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{make_chain_metric, ChainSpec, MetricOperator};
use crate::sampling;

/// An EPS instance adapted to a chain of subalgebras: metric
/// `A_0 + s_1 Id_{V_1} + ... + s_n Id_{V_n}` and distribution `D_0 + D_1 + ... + D_n`.
#[derive(Debug, Clone)]
pub struct ChainReduction<'a> {
    alg: &'a LieAlgebraModel,
    chain: ChainSpec,
    s: Vec<f64>,
    metric: MetricOperator,
    /// `D_k ⊂ V_k`, `k = 1..n`.
    pieces: Vec<Subspace>,
    d0: Subspace,
    base: ConstraintManifold,
    dist: Distribution,
}

impl<'a> ChainReduction<'a> {
    /// `a0` is `A_0` in the basis of `G_0`; `constraints[k]` are the `a_k^i`
    /// (ambient coordinates) lying in `G_0` for `k = 0` and in `V_k` otherwise.
    pub fn new(
        alg: &'a LieAlgebraModel,
        chain: ChainSpec,
        a0: &DMatrix<f64>,
        s: &[f64],
        constraints: &[Vec<AlgElement>],
    ) -> Result<Self> {
        if constraints.len() != chain.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: chain.len() + 1,
                found: constraints.len(),
            });
        }
        let metric = make_chain_metric(&chain, a0, s)?;
        let g0 = chain.subalgebra(0).clone();
        for (k, ck) in constraints.iter().enumerate() {
            let home = if k == 0 { &g0 } else { chain.complement(k) };
            for a in ck {
                if home.distance(a) > 1e-10 * a.norm().max(1.0) {
                    return Err(Error::Precondition(format!("constraint vector of level {k} leaves its block")));
                }
            }
        }
        let all: Vec<AlgElement> = constraints.iter().flatten().cloned().collect();
        let dist = Distribution::new(alg.dim(), all)?;
        let d0 = g0.minus(&Subspace::new(alg.dim(), &constraints[0]));
        let pieces = (1..=chain.len())
            .map(|k| chain.complement(k).minus(&Subspace::new(alg.dim(), &constraints[k])))
            .collect();
        let base = ConstraintManifold::new(&metric, &Distribution::new(alg.dim(), constraints[0].clone())?)?;
        Ok(Self {
            alg,
            chain,
            s: s.to_vec(),
            metric,
            pieces,
            d0,
            base,
            dist,
        })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn metric(&self) -> &MetricOperator {
        &self.metric
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    pub fn d0(&self) -> &Subspace {
        &self.d0
    }

    /// `D_k`, `k = 1..n`.
    pub fn piece(&self, k: usize) -> &Subspace {
        &self.pieces[k - 1]
    }

    /// The full EPS system with this metric and distribution.
    pub fn eps_system(&self) -> Result<EpsSystem<'a>> {
        EpsSystem::new(self.alg, &self.metric, &self.dist)
    }

    /// `x_0 = P_{G_0} x`.
    pub fn x0(&self, x: &AlgElement) -> AlgElement {
        self.chain.subalgebra(0).project(x)
    }

    /// `x_k = P_{D_k} x`.
    pub fn xk(&self, k: usize, x: &AlgElement) -> AlgElement {
        self.pieces[k - 1].project(x)
    }

    /// The EPS field on `G_0` with its own multipliers.
    pub fn base_field(&self, x0: &AlgElement) -> AlgElement {
        let mut v = self.alg.bracket(x0, &self.metric.apply(x0));
        let mu = self.base.tangent_multipliers(&v);
        for (m, a) in mu.iter().zip(self.base.constraints()) {
            v.axpy(*m, a, 1.0);
        }
        v
    }

    /// `y_{k-1} = A_0 x_0 - s_k x_0 + sum_{j<k} (s_j - s_k) x_j`.
    pub fn driver(&self, k: usize, x: &AlgElement) -> AlgElement {
        let sk = self.s[k - 1];
        let x0 = self.x0(x);
        let mut y = self.metric.apply(&x0) - &x0 * sk;
        for j in 1..k {
            y += self.xk(j, x) * (self.s[j - 1] - sk);
        }
        y
    }

    /// `x_k' = [x_k, y_{k-1}]_{D_k}`.
    pub fn cascade_field(&self, k: usize, x: &AlgElement) -> AlgElement {
        self.pieces[k - 1].project(&self.alg.bracket(&self.xk(k, x), &self.driver(k, x)))
    }

    /// Direct sum of the base field and all cascade fields.
    pub fn reduced_field(&self, x: &AlgElement) -> AlgElement {
        let mut v = self.base_field(&self.x0(x));
        for k in 1..=self.chain.len() {
            v += self.cascade_field(k, x);
        }
        v
    }

    /// Projection onto `G_0 + D_1 + ... + D_n`.
    pub fn project(&self, v: &AlgElement) -> AlgElement {
        let mut out = self.x0(v);
        for k in 1..=self.chain.len() {
            out += self.xk(k, v);
        }
        out
    }
}

/// The base-plus-cascade system as an integrable vector field.
pub struct CascadeField<'r, 'a>(pub &'r ChainReduction<'a>);

impl VectorField for CascadeField<'_, '_> {
    fn dim(&self) -> usize {
        self.0.alg.dim()
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        self.0.alg.check_element(x)?;
        Ok(self.0.reduced_field(x))
    }
}

/// Functionally independent `Ad_{G_{k-1}}`-invariant polynomials on `V_k`:
/// `dim V_k - dim G_{k-1} + min_x dim{y ∈ G_{k-1} : [y, x] = 0}`, the minimum
/// taken as the generic value over random points.
pub fn adjoint_invariant_count<R: Rng + ?Sized>(
    alg: &LieAlgebraModel,
    g_prev: &Subspace,
    v: &Subspace,
    rng: &mut R,
    samples: usize,
) -> usize {
    let mut best_rank = 0;
    for _ in 0..samples.max(1) {
        let x = sampling::gaussian_in(rng, v);
        let mut m = DMatrix::zeros(v.dim(), g_prev.dim());
        for (j, y) in g_prev.basis().iter().enumerate() {
            m.set_column(j, &v.coords(&alg.bracket(y, &x)));
        }
        best_rank = best_rank.max(linalg::numerical_rank(&m, 1e-10));
    }
    // dim V - dim G + (dim G - rank)
    v.dim() - best_rank
}

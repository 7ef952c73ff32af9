use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgElement, Family, LieAlgebraModel, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{centralizer, ChainSpec};
use crate::sampling;

/// Involution tolerance for certificates.
pub const INVOLUTION_TOL: f64 = 1e-10;
/// Relative singular-value threshold for the completeness rank.
pub const COMPLETENESS_RANK_TOL: f64 = 1e-8;

/// `{0.25, 0.5, ..., 2.0}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (1..=8).map(|i| 0.25 * i as f64).collect()
}

/// `{F, G}(x) = <x, [grad G, grad F]>`.
pub fn lie_poisson_bracket(alg: &LieAlgebraModel, grad_f: &AlgElement, grad_g: &AlgElement, x: &AlgElement) -> f64 {
    x.dot(&alg.bracket(grad_g, grad_f))
}

/// `tr(Y^m)`, or `tr(J Y^m)` with the complex structure `J` when twisted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TracePower {
    pub degree: usize,
    pub twisted: bool,
}

/// Trace powers generating the invariant polynomials of a classical family.
pub fn trace_powers(alg: &LieAlgebraModel) -> Result<Vec<TracePower>> {
    let even = |max: usize| {
        (2..=max)
            .step_by(2)
            .map(|degree| TracePower { degree, twisted: false })
            .collect::<Vec<_>>()
    };
    match alg.family() {
        Family::So(n) => Ok(even(n.max(2))),
        Family::RigidBody => Ok(even(2)),
        Family::Sp(n) => Ok(even(2 * n)),
        // odd powers of a skew-Hermitian matrix are imaginary; J picks up their trace
        Family::U(n) => Ok((1..=n)
            .map(|degree| TracePower {
                degree,
                twisted: degree % 2 == 1,
            })
            .collect()),
        Family::Custom => Err(Error::Unsupported("trace invariants need a classical family".into())),
    }
}

fn complex_structure(alg: &LieAlgebraModel) -> Option<DMatrix<f64>> {
    match alg.family() {
        Family::U(n) => {
            let mut j = DMatrix::zeros(2 * n, 2 * n);
            for a in 0..n {
                j[(2 * a, 2 * a + 1)] = -1.0;
                j[(2 * a + 1, 2 * a)] = 1.0;
            }
            Some(j)
        }
        _ => None,
    }
}

/// `f(x) = p(M x + c)` for a trace power `p`.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub name: String,
    pub power: TracePower,
    pub map: DMatrix<f64>,
    pub shift: AlgElement,
}

/// Named functions on the algebra with exact gradients.
#[derive(Debug, Clone)]
pub struct IntegralFamily {
    pub name: String,
    pub members: Vec<FamilyMember>,
    complex: Option<DMatrix<f64>>,
}

impl IntegralFamily {
    pub fn new(alg: &LieAlgebraModel, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            members: Vec::new(),
            complex: complex_structure(alg),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, member: FamilyMember) {
        self.members.push(member);
    }

    pub fn extend(&mut self, other: IntegralFamily) {
        self.members.extend(other.members);
    }

    /// `Y^{m-1}` premultiplied by `J` when twisted, and `Y`.
    fn powers(&self, alg: &LieAlgebraModel, i: usize, x: &AlgElement) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let m = &self.members[i];
        let y = alg.to_matrix(&(&m.map * x + &m.shift))?;
        let mut p = DMatrix::identity(y.nrows(), y.ncols());
        for _ in 1..m.power.degree {
            p = &p * &y;
        }
        if m.power.twisted {
            let j = self
                .complex
                .as_ref()
                .ok_or_else(|| Error::Unsupported("twisted trace without a complex structure".into()))?;
            p = j * p;
        }
        Ok((p, y))
    }

    pub fn value(&self, alg: &LieAlgebraModel, i: usize, x: &AlgElement) -> Result<f64> {
        let (p, y) = self.powers(alg, i, x)?;
        Ok((p * y).trace())
    }

    /// `M^T grad p`, with `d tr(Y^m) / dx_i = m tr(Y^{m-1} B_i)`.
    pub fn gradient(&self, alg: &LieAlgebraModel, i: usize, x: &AlgElement) -> Result<AlgElement> {
        let (p, _) = self.powers(alg, i, x)?;
        let rep = alg.representation().expect("checked by to_matrix");
        let deg = self.members[i].power.degree as f64;
        let g = AlgElement::from_iterator(alg.dim(), rep.matrices.iter().map(|b| deg * p.component_mul(&b.transpose()).sum()));
        Ok(self.members[i].map.transpose() * g)
    }

    pub fn gradients(&self, alg: &LieAlgebraModel, x: &AlgElement) -> Result<Vec<AlgElement>> {
        (0..self.len()).map(|i| self.gradient(alg, i, x)).collect()
    }
}

/// Casimirs `p(x)` of the whole algebra.
pub fn casimir_family(alg: &LieAlgebraModel) -> Result<IntegralFamily> {
    let mut fam = IntegralFamily::new(alg, "casimirs");
    for p in trace_powers(alg)? {
        fam.push(FamilyMember {
            name: format!("p{}", p.degree),
            power: p,
            map: DMatrix::identity(alg.dim(), alg.dim()),
            shift: alg.zero(),
        });
    }
    Ok(fam)
}

/// Element of `sub` whose centralizer within `sub` has the smallest dimension
/// seen over a few random draws; it is regular when that dimension equals the rank of `sub`.
pub fn regular_element_in<R: Rng + ?Sized>(alg: &LieAlgebraModel, sub: &Subspace, rng: &mut R) -> AlgElement {
    let mut best: Option<(usize, AlgElement)> = None;
    for _ in 0..16 {
        let a = sampling::gaussian_in(rng, sub);
        let a = &a / a.norm().max(f64::MIN_POSITIVE);
        let mut m = DMatrix::zeros(alg.dim(), sub.dim());
        for (j, y) in sub.basis().iter().enumerate() {
            m.set_column(j, &alg.bracket(&a, y));
        }
        let cdim = sub.dim() - linalg::numerical_rank(&m, 1e-10);
        if best.as_ref().is_none_or(|(d, _)| cdim < *d) {
            best = Some((cdim, a));
        }
    }
    best.map(|(_, a)| a).unwrap_or_else(|| alg.zero())
}

/// Regular element of the whole algebra by rejection sampling: its centralizer has dimension `rank`.
pub fn regular_element<R: Rng + ?Sized>(alg: &LieAlgebraModel, rng: &mut R) -> Result<AlgElement> {
    for _ in 0..100 {
        let a = sampling::gaussian(rng, alg.dim());
        let a = &a / a.norm();
        if centralizer(alg, &a).dim() == alg.rank() {
            return Ok(a);
        }
    }
    Err(Error::Precondition("no regular element found".into()))
}

/// `p_m(P x + lambda a)` for `P` the projector onto `sub` (the identity when `sub` is the whole algebra).
pub fn shifted_invariants_on(
    alg: &LieAlgebraModel,
    sub: &Subspace,
    a: &AlgElement,
    lambdas: &[f64],
    name: &str,
) -> Result<IntegralFamily> {
    let mut fam = IntegralFamily::new(alg, name);
    let proj = sub.projector();
    for p in trace_powers(alg)? {
        for &l in lambdas {
            fam.push(FamilyMember {
                name: format!("{name}:p{}(x+{l}a)", p.degree),
                power: p,
                map: proj.clone(),
                shift: a * l,
            });
        }
    }
    Ok(fam)
}

/// Mishchenko-Fomenko shifted invariants `x -> p_m(x + lambda a)`.
pub fn shifted_invariants(alg: &LieAlgebraModel, a: &AlgElement, lambdas: &[f64]) -> Result<IntegralFamily> {
    shifted_invariants_on(alg, &Subspace::full(alg.dim()), a, lambdas, "shifted")
}

/// How a chain step qualifies for the chain-lift construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainStep {
    SymmetricPair,
    Subalgebra,
}

pub fn classify_chain_step(alg: &LieAlgebraModel, chain: &ChainSpec, i: usize) -> Option<ChainStep> {
    let prev = chain.subalgebra(i - 1);
    let v = chain.complement(i);
    let mut vv_prev: f64 = 0.0;
    let mut vv_v: f64 = 0.0;
    for (j, x) in v.basis().iter().enumerate() {
        for y in &v.basis()[j + 1..] {
            let b = alg.bracket(x, y);
            vv_prev = vv_prev.max(prev.distance(&b));
            vv_v = vv_v.max(v.distance(&b));
        }
    }
    if vv_prev < 1e-12 {
        Some(ChainStep::SymmetricPair)
    } else if vv_v < 1e-12 {
        Some(ChainStep::Subalgebra)
    } else {
        None
    }
}

/// The chain-lift family `F_0 + F_1 + ... + F_n`: for symmetric steps
/// `p(x_{G_{i-1}} + lambda x_{V_i})`, for subalgebra steps shifted invariants of
/// `V_i` lifted to `G`, and `F_0` the shifted invariants of `G_0`.
pub fn chain_lift_family<R: Rng + ?Sized>(
    alg: &LieAlgebraModel,
    chain: &ChainSpec,
    lambdas: &[f64],
    rng: &mut R,
) -> Result<IntegralFamily> {
    let mut fam = IntegralFamily::new(alg, "chain-lift");
    let g0 = chain.subalgebra(0);
    if g0.dim() > 0 {
        let a0 = regular_element_in(alg, g0, rng);
        let mut grid = vec![0.0];
        grid.extend_from_slice(lambdas);
        fam.extend(shifted_invariants_on(alg, g0, &a0, &grid, "F0")?);
    }
    let powers = trace_powers(alg)?;
    for i in 1..=chain.len() {
        let prev = chain.subalgebra(i - 1).projector();
        let v = chain.complement(i);
        match classify_chain_step(alg, chain, i) {
            Some(ChainStep::SymmetricPair) => {
                let pv = v.projector();
                for p in &powers {
                    for &l in lambdas {
                        fam.push(FamilyMember {
                            name: format!("F{i}:p{}(x_G + {l} x_V)", p.degree),
                            power: *p,
                            map: &prev + &pv * l,
                            shift: alg.zero(),
                        });
                    }
                }
            }
            Some(ChainStep::Subalgebra) => {
                let ai = regular_element_in(alg, v, rng);
                let mut grid = vec![0.0];
                grid.extend_from_slice(lambdas);
                fam.extend(shifted_invariants_on(alg, v, &ai, &grid, &format!("F{i}"))?);
            }
            None => {
                return Err(Error::Precondition(format!(
                    "chain step {i} is neither a symmetric pair nor has V_{i} a subalgebra"
                )))
            }
        }
    }
    Ok(fam)
}

/// Completeness target `(dim G + rank G) / 2`.
pub fn completeness_target(alg: &LieAlgebraModel) -> usize {
    (alg.dim() + alg.rank()) / 2
}

/// Rank of the stacked gradients at `x`.
pub fn gradient_rank(family: &IntegralFamily, alg: &LieAlgebraModel, x: &AlgElement) -> Result<usize> {
    let grads = family.gradients(alg, x)?;
    if grads.is_empty() {
        return Ok(0);
    }
    let m = DMatrix::from_fn(grads.len(), alg.dim(), |r, c| grads[r][c]);
    Ok(linalg::numerical_rank(&m, COMPLETENESS_RANK_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Completeness {
    pub independent_count: usize,
    pub target_k: usize,
    pub passed: bool,
}

/// Largest gradient rank over the given points against the target `k`.
pub fn completeness_check(family: &IntegralFamily, alg: &LieAlgebraModel, points: &[AlgElement]) -> Result<Completeness> {
    let ranks = points
        .par_iter()
        .map(|x| gradient_rank(family, alg, x))
        .collect::<Result<Vec<_>>>()?;
    let count = ranks.into_iter().max().unwrap_or(0);
    let target = completeness_target(alg);
    Ok(Completeness {
        independent_count: count,
        target_k: target,
        passed: count >= target,
    })
}

/// Largest `|{F_i, F_j}(x)|` over all pairs and points.
pub fn max_involution_residual(family: &IntegralFamily, alg: &LieAlgebraModel, points: &[AlgElement]) -> Result<f64> {
    let per_point = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let grads = family.gradients(alg, x)?;
            let mut worst: f64 = 0.0;
            for i in 0..grads.len() {
                for j in i + 1..grads.len() {
                    worst = worst.max(lie_poisson_bracket(alg, &grads[i], &grads[j], x).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub family: String,
    pub points_tested: usize,
    pub max_involution_residual: f64,
    pub independent_count: usize,
    pub target_k: usize,
    /// Gradient rank at points of `D`, when a constraint subspace is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_count: Option<usize>,
    pub verdict: String,
}

/// Involution and completeness certificate over `points` uniform points of the
/// unit sphere. With `d` given, the family must also stay independent at random
/// points of `d`.
pub fn certify<R: Rng + ?Sized>(
    family: &IntegralFamily,
    alg: &LieAlgebraModel,
    points: usize,
    d: Option<&Subspace>,
    rng: &mut R,
) -> Result<Certificate> {
    let xs: Vec<AlgElement> = (0..points)
        .map(|_| sampling::gaussian(rng, alg.dim()).normalize())
        .collect();
    let residual = max_involution_residual(family, alg, &xs)?;
    let completeness = completeness_check(family, alg, &xs)?;
    let restricted_count = match d {
        Some(d) => {
            let ys: Vec<AlgElement> = (0..points.min(20)).map(|_| sampling::gaussian_in(rng, d)).collect();
            Some(completeness_check(family, alg, &ys)?.independent_count)
        }
        None => None,
    };
    let passed = residual < INVOLUTION_TOL
        && completeness.passed
        && restricted_count.is_none_or(|c| c >= completeness.target_k);
    Ok(Certificate {
        family: family.name.clone(),
        points_tested: points,
        max_involution_residual: residual,
        independent_count: completeness.independent_count,
        target_k: completeness.target_k,
        restricted_count,
        verdict: if passed { "pass" } else { "fail" }.into(),
    })
}

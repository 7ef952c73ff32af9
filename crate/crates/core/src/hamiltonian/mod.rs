//! Hamiltonian restriction: the sub-Riemannian operator `A*`, the `Ad_L`
//! invariance condition, the three-flow coincidence check and involutive
//! families of integrals.

mod families;

pub use families::{
    casimir_family, certify, classify_chain_step, completeness_check, completeness_target, default_lambda_grid,
    gradient_rank, lie_poisson_bracket, max_involution_residual, chain_lift_family, regular_element,
    regular_element_in, shifted_invariants, shifted_invariants_on, trace_powers, Certificate, ChainStep,
    Completeness, FamilyMember, IntegralFamily, TracePower, COMPLETENESS_RANK_TOL, INVOLUTION_TOL,
};

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::algebra::{AlgElement, LieAlgebraModel, Subspace};
use crate::dynamics::{integrate, Distribution, EpSystem, EpsSystem, IntegratorConfig, Monitor, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{MetricOperator, PRESERVE_TOL};
use crate::sampling;

/// Tolerance for the `Ad_L` invariance of `H_D`.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// `A* = A_D P_D`, the metric operator of `H*(x) = <x, A* x> / 2`.
#[derive(Debug, Clone)]
pub struct HStar {
    pub op: DMatrix<f64>,
    pub l: Subspace,
    pub d: Subspace,
}

impl HStar {
    pub fn value(&self, x: &AlgElement) -> f64 {
        0.5 * x.dot(&(&self.op * x))
    }

    pub fn gradient(&self, x: &AlgElement) -> AlgElement {
        &self.op * x
    }

    /// Ascending eigenvalues of `A*`.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::sorted_eigen(&self.op).0
    }
}

/// Builds `A*` from a metric preserving `G = L + D`.
pub fn build_hstar(l: &Subspace, metric: &MetricOperator) -> Result<HStar> {
    let d = l.complement();
    let defect = metric.preservation_defect(&d);
    if defect > PRESERVE_TOL * metric.matrix().norm().max(1.0) {
        return Err(Error::NotPreserved(defect));
    }
    let p = d.projector();
    let op = linalg::symmetrize(&(&p * metric.matrix() * &p));
    Ok(HStar { op, l: l.clone(), d })
}

/// `max |P_L [xi, grad H_D(xi)]|` over the samples.
pub fn adl_invariance_test(
    alg: &LieAlgebraModel,
    l: &Subspace,
    grad_hd: &dyn Fn(&AlgElement) -> AlgElement,
    samples: &[AlgElement],
) -> f64 {
    samples
        .iter()
        .map(|xi| l.project(&alg.bracket(xi, &grad_hd(xi))).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceReport {
    pub nonholonomic: Vec<f64>,
    pub h_flow: Vec<f64>,
    pub hstar_flow: Vec<f64>,
    /// `|EPS - h|`, `|EPS - h*|`, `|h - h*|` at the final time.
    pub distances: [f64; 3],
    /// Largest `|P_L x|` seen along each of the three runs.
    pub off_d: [f64; 3],
    pub constraint_residual: f64,
    /// `|eta(T) - eta_0|` for the `h*` flow started at `xi_0 + eta_0`.
    pub eta_drift: f64,
    pub invariance_residual: f64,
    pub passed: bool,
}

fn leak_monitor(l: &Subspace) -> Monitor<'_> {
    Monitor::new("off_d", move |x: &AlgElement| l.project(x).norm())
}

fn last_state(t: &Trajectory) -> Vec<f64> {
    t.last().map(|x| x.iter().copied().collect()).unwrap_or_default()
}

/// Integrates the nonholonomic flow, the Euler-Poincare flow of `H` and that
/// of `H*` from `xi0 ∈ D`, and the `H*` flow from `xi0 + eta0`.
#[allow(clippy::too_many_arguments)]
pub fn coincidence_check<R: Rng + ?Sized>(
    alg: &LieAlgebraModel,
    metric: &MetricOperator,
    l: &Subspace,
    xi0: &AlgElement,
    eta0: &AlgElement,
    step: f64,
    duration: f64,
    rng: &mut R,
) -> Result<CoincidenceReport> {
    let leak = alg.subalgebra_residual(l);
    if leak > 1e-12 {
        return Err(Error::Precondition(format!("L is not a subalgebra (leak {leak:.3e})")));
    }
    let hstar = build_hstar(l, metric)?;
    let d = hstar.d.clone();
    if alg.bracket_closure(&d).dim() != alg.dim() {
        return Err(Error::Precondition("D does not generate the algebra by brackets".into()));
    }
    let samples: Vec<AlgElement> = (0..50).map(|_| sampling::gaussian_in(rng, &d)).collect();
    let invariance_residual = adl_invariance_test(alg, l, &|x| hstar.gradient(x), &samples);
    if invariance_residual > INVARIANCE_TOL * metric.matrix().norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "H_D is not Ad_L-invariant (residual {invariance_residual:.3e})"
        )));
    }
    if d.distance(xi0) > 1e-12 * xi0.norm().max(1.0) || l.distance(eta0) > 1e-12 * eta0.norm().max(1.0) {
        return Err(Error::Precondition("xi0 must lie in D and eta0 in L".into()));
    }

    let cfg = IntegratorConfig::new(step, duration).with_stride(usize::MAX);
    let dist = Distribution::from_subspace(&d);
    let eps = EpsSystem::new(alg, metric, &dist)?;
    let ep_h = EpSystem::new(alg, metric.matrix().clone())?;
    let ep_star = EpSystem::new(alg, hstar.op.clone())?;
    let runs = [
        integrate(&eps, xi0, &cfg.with_projection(true), Some(eps.manifold()), &[leak_monitor(l)])?,
        integrate(&ep_h, xi0, &cfg, None, &[leak_monitor(l)])?,
        integrate(&ep_star, xi0, &cfg, None, &[leak_monitor(l)])?,
    ];
    let ends: Vec<AlgElement> = runs.iter().map(|t| t.last().expect("nonempty").clone()).collect();
    let distances = [
        (&ends[0] - &ends[1]).norm(),
        (&ends[0] - &ends[2]).norm(),
        (&ends[1] - &ends[2]).norm(),
    ];
    let off_d = [0, 1, 2].map(|i| runs[i].max_of("off_d").unwrap_or(0.0));
    let constraint_residual = eps.manifold().residual(&ends[0]);

    let lifted = integrate(&ep_star, &(xi0 + eta0), &cfg, None, &[])?;
    let eta_drift = (l.project(lifted.last().expect("nonempty")) - eta0).norm();

    let passed = distances.iter().all(|&x| x < 1e-6) && off_d.iter().all(|&x| x < 1e-8) && eta_drift < 1e-9;
    Ok(CoincidenceReport {
        nonholonomic: last_state(&runs[0]),
        h_flow: last_state(&runs[1]),
        hstar_flow: last_state(&runs[2]),
        distances,
        off_d,
        constraint_residual,
        eta_drift,
        invariance_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_so;
    use crate::metrics::{make_block_metric, ChainSpec};

    fn chain_instance(g: &LieAlgebraModel) -> (Subspace, MetricOperator) {
        let chain = ChainSpec::standard_blocks(g, 2, 4).unwrap();
        let l = chain.subalgebra(0).clone();
        let v1 = chain.complement(1).clone();
        let v2 = chain.complement(2).clone();
        let a = make_block_metric(
            &[l.clone(), v1.clone(), v2.clone()],
            &[DMatrix::from_element(1, 1, 0.8), DMatrix::identity(2, 2) * 1.3, DMatrix::identity(3, 3) * 2.1],
        )
        .unwrap();
        (l, a)
    }

    #[test]
    fn hstar_kernel_and_spectrum() {
        let g = build_so(4).unwrap();
        let (l, a) = chain_instance(&g);
        let hs = build_hstar(&l, &a).unwrap();
        assert_eq!(hs.value(&l.basis()[0]), 0.0);
        let xi = hs.d.basis()[2].clone() * 0.7;
        assert!((hs.value(&xi) - a.energy(&xi)).abs() < 1e-15);
        let spec = hs.spectrum();
        let expect = [0.0, 1.3, 1.3, 2.1, 2.1, 2.1];
        for (s, e) in spec.iter().zip(expect) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn invariance_holds_for_chain_and_fails_for_random() {
        let g = build_so(4).unwrap();
        let (l, a) = chain_instance(&g);
        let d = l.complement();
        let mut rng = sampling::rng(3);
        let samples: Vec<_> = (0..20).map(|_| sampling::gaussian_in(&mut rng, &d)).collect();
        assert!(adl_invariance_test(&g, &l, &|x| a.apply(x), &samples) < 1e-12);
        let r = sampling::random_spd(&mut rng, 6, 0.5, 2.0);
        let p = d.projector();
        let broken = &p * r * &p;
        assert!(adl_invariance_test(&g, &l, &|x| &broken * x, &samples) > 1e-3);
    }

    #[test]
    fn equilibrium_is_constant_for_all_flows() {
        let g = build_so(4).unwrap();
        let (l, a) = chain_instance(&g);
        let mut rng = sampling::rng(9);
        // a V_2 vector is an eigenvector of A, hence an equilibrium of every flow
        let xi0 = ChainSpec::standard_blocks(&g, 2, 4).unwrap().complement(2).basis()[0].clone();
        let rep = coincidence_check(&g, &a, &l, &xi0, &g.zero(), 1e-2, 1.0, &mut rng).unwrap();
        assert!(rep.passed);
        assert!((AlgElement::from_vec(rep.hstar_flow.clone()) - &xi0).norm() < 1e-14);
    }
}

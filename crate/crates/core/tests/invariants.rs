use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use eps_core::algebra::{build_so, build_u, AlgElement, Subspace};
use eps_core::dynamics::{Distribution, EpsSystem, VectorField};
use eps_core::metrics::{make_block_metric, MetricOperator};
use eps_core::sampling;

fn element(n: usize) -> impl Strategy<Value = AlgElement> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(x in element(6), y in element(6), z in element(6), a in -3.0..3.0f64) {
        let g = build_so(4).unwrap();
        prop_assert!((g.bracket(&x, &y) + g.bracket(&y, &x)).amax() < 1e-13);
        let lhs = g.bracket(&(&x * a + &z), &y);
        let rhs = g.bracket(&x, &y) * a + g.bracket(&z, &y);
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn u2_bracket_is_ad_invariant(x in element(4), y in element(4), z in element(4)) {
        let g = build_u(2).unwrap();
        prop_assert!(g.ad_invariance_defect(&x, &y, &z) < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(seed in 0u64..1000, x in element(6)) {
        let mut rng = sampling::rng(seed);
        let vs: Vec<AlgElement> = (0..3).map(|_| sampling::gaussian(&mut rng, 6)).collect();
        let s = Subspace::new(6, &vs);
        let p = s.project(&x);
        prop_assert!((s.project(&p) - &p).amax() < 1e-13);
        prop_assert!(vs.iter().all(|v| (&x - &p).dot(v).abs() < 1e-12 * v.norm() * x.norm().max(1.0)));
    }

    #[test]
    fn eps_field_is_tangent_and_conserves_energy(seed in 0u64..1000) {
        let g = build_so(4).unwrap();
        let mut rng = sampling::rng(seed);
        let a = MetricOperator::new(sampling::random_spd(&mut rng, 6, 0.5, 2.0)).unwrap();
        let dist = Distribution::new(6, vec![sampling::gaussian(&mut rng, 6), sampling::gaussian(&mut rng, 6)]).unwrap();
        let sys = EpsSystem::new(&g, &a, &dist).unwrap();
        let x = sampling::gaussian_in(&mut rng, sys.manifold().subspace());
        let v = sys.eval(&x).unwrap();
        let scale = x.norm_squared().max(1.0) * a.matrix().norm();
        // d/dt <A x, a^i> = <A v, a^i> and dH/dt = <A x, v>
        prop_assert!(sys.manifold().residual(&v) < 1e-12 * scale);
        prop_assert!(a.apply(&x).dot(&v).abs() < 1e-12 * scale * x.norm());
    }

    #[test]
    fn block_metric_restricts_to_its_blocks(seed in 0u64..1000) {
        let mut rng = sampling::rng(seed);
        let s = Subspace::new(6, &[sampling::gaussian(&mut rng, 6), sampling::gaussian(&mut rng, 6)]);
        let (b1, b2) = (sampling::random_spd(&mut rng, 2, 0.5, 2.0), sampling::random_spd(&mut rng, 4, 0.5, 2.0));
        let a = make_block_metric(&[s.clone(), s.complement()], &[b1.clone(), b2]).unwrap();
        prop_assert!(a.preservation_defect(&s) < 1e-12);
        let r: DMatrix<f64> = a.restrict(&s).unwrap();
        prop_assert!((r - b1).amax() < 1e-12);
    }
}

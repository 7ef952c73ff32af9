//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;

use eps_core::algebra::{build_rigid_body, build_so, build_sp, build_u, AlgElement, LieAlgebraModel, Subspace};
use eps_core::dynamics::{
    almost_poisson, body_velocities, integrate, jacobiator, orthogonality_defect, reconstruct_group, Distribution,
    EpsSystem, IntegratorConfig, Monitor, Trajectory, JACOBIATOR_FD_STEP,
};
use eps_core::hamiltonian::{
    certify, coincidence_check, default_lambda_grid, lie_poisson_bracket, chain_lift_family, regular_element,
    shifted_invariants, IntegralFamily,
};
use eps_core::integrable::{
    asymptotic_diagnostics, detect_period, pair_monitors, rotation_numbers, CascadeField, ChainReduction,
    CloudOptions, PairDecomposition, ReducedField, SuslovProblem, SymmetricPairSetup, TorusData,
};
use eps_core::metrics::{make_block_metric, ChainSpec, MetricOperator};
use eps_core::sampling::{self, SeededRng};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn random_subspace(rng: &mut SeededRng, n: usize, k: usize) -> Subspace {
    let vs: Vec<AlgElement> = (0..k).map(|_| sampling::gaussian(rng, n)).collect();
    Subspace::new(n, &vs)
}

/// Metric `A_D + A_L` with the given block on `D` and a random block on `L`.
fn split_metric(rng: &mut SeededRng, d: &Subspace, a_d: DMatrix<f64>) -> MetricOperator {
    let l = d.complement();
    let a_l = sampling::random_spd(rng, l.dim(), 0.5, 2.0);
    make_block_metric(&[d.clone(), l], &[a_d, a_l]).unwrap()
}

fn algebra_validity() -> Outcome {
    let mut rng = sampling::rng(1);
    let algebras = [
        ("so(3)", build_so(3).unwrap()),
        ("so(4)", build_so(4).unwrap()),
        ("so(5)", build_so(5).unwrap()),
        ("u(2)", build_u(2).unwrap()),
        ("sp(1)", build_sp(1).unwrap()),
        ("rigid body", build_rigid_body()),
    ];
    let mut worst: f64 = 0.0;
    for (_, g) in &algebras {
        let rep = g.representation().unwrap();
        let mat = |x: &AlgElement| {
            x.iter()
                .zip(&rep.matrices)
                .fold(DMatrix::zeros(rep.matrices[0].nrows(), rep.matrices[0].ncols()), |acc, (c, b)| acc + b * *c)
        };
        for _ in 0..20 {
            let x = sampling::gaussian(&mut rng, g.dim());
            let y = sampling::gaussian(&mut rng, g.dim());
            let z = sampling::gaussian(&mut rng, g.dim());
            let jac = g.bracket(&x, &g.bracket(&y, &z)) + g.bracket(&y, &g.bracket(&z, &x)) + g.bracket(&z, &g.bracket(&x, &y));
            let inv = g.bracket(&x, &y).dot(&z) + y.dot(&g.bracket(&x, &z));
            let (mx, my) = (mat(&x), mat(&y));
            let comm = (&mx * &my - &my * &mx - mat(&g.bracket(&x, &y))).amax();
            let inner = (-rep.trace_scale * (&mx * &my).trace() - x.dot(&y)).abs();
            worst = worst.max(jac.amax()).max(inv.abs()).max(comm).max(inner);
        }
        worst = worst.max(g.jacobi_residual());
    }
    (worst < 1e-12, format!("worst residual {worst:.2e} over so(3), so(4), so(5), u(2), sp(1), rigid body"))
}

fn eps_conservation() -> Outcome {
    let g = build_so(4).unwrap();
    let mut rng = sampling::rng(2);
    let (mut drift, mut residual): (f64, f64) = (0.0, 0.0);
    for _ in 0..5 {
        let a = MetricOperator::new(sampling::random_spd(&mut rng, 6, 0.5, 2.0)).unwrap();
        let cs: Vec<AlgElement> = (0..2).map(|_| sampling::gaussian(&mut rng, 6)).collect();
        let dist = Distribution::new(6, cs).unwrap();
        let sys = EpsSystem::new(&g, &a, &dist).unwrap();
        let x0 = sampling::gaussian_in(&mut rng, sys.manifold().subspace()).normalize();
        let m = sys.manifold();
        let monitors = [
            Monitor::new("H", |x: &AlgElement| a.energy(x)),
            Monitor::new("c", |x: &AlgElement| m.residual(x)),
        ];
        let cfg = IntegratorConfig::new(1e-3, 100.0).with_stride(100);
        let t = integrate(&sys, &x0, &cfg, Some(m), &monitors).unwrap();
        drift = drift.max(t.drift("H").unwrap());
        residual = residual.max(t.max_of("c").unwrap());
    }
    (
        drift < 1e-8 && residual < 1e-9,
        format!("5 random so(4) instances, T = 100: H drift {drift:.2e}, constraint residual {residual:.2e}"),
    )
}

fn endpoint_motion(g: &LieAlgebraModel, d: &Subspace, metric: &MetricOperator, x0: &AlgElement) -> f64 {
    let sys = EpsSystem::new(g, metric, &Distribution::from_subspace(d)).unwrap();
    let t = integrate(&sys, x0, &IntegratorConfig::new(1e-3, 10.0).with_stride(usize::MAX), Some(sys.manifold()), &[]).unwrap();
    (t.last().unwrap() - x0).norm()
}

fn integrable_regimes() -> Outcome {
    let g = build_so(4).unwrap();
    let mut rng = sampling::rng(3);

    let d4 = random_subspace(&mut rng, 6, 4);
    let a1 = split_metric(&mut rng, &d4, DMatrix::identity(4, 4) * 1.7);
    let x1 = sampling::gaussian_in(&mut rng, &d4);
    let case1 = endpoint_motion(&g, &d4, &a1, &x1);

    let d2 = random_subspace(&mut rng, 6, 2);
    let b2 = sampling::random_spd(&mut rng, 2, 0.5, 2.0);
    let a2 = split_metric(&mut rng, &d2, b2);
    let x2 = sampling::gaussian_in(&mut rng, &d2);
    let case2 = endpoint_motion(&g, &d2, &a2, &x2);

    let h = g.span_of_labels(&["f12", "f13", "f23"]).unwrap();
    let v = h.complement();
    let b4 = sampling::random_spd(&mut rng, 3, 0.5, 2.0);
    let a4 = split_metric(&mut rng, &v, b4);
    let x4 = sampling::gaussian_in(&mut rng, &v);
    let case4 = endpoint_motion(&g, &v, &a4, &x4);

    let d3 = random_subspace(&mut rng, 6, 3);
    let b3 = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.1, 0.2, 1.6, 0.3, -0.1, 0.3, 2.3]);
    let a3 = split_metric(&mut rng, &d3, b3);
    let x3 = sampling::gaussian_in(&mut rng, &d3).normalize();
    let field = ReducedField::new(&g, &d3, &a3);
    let period = detect_period(&field, &x3, 1e-3, 500.0, 0.05).unwrap();
    let (found, ret) = match period {
        Some(p) => (true, p.return_distance),
        None => (false, f64::INFINITY),
    };
    let ok = case1 < 1e-10 && case2 < 1e-10 && case4 < 1e-10 && found && ret < 1e-6;
    let period_text = period.map_or("none".into(), |p| format!("{:.6}", p.period));
    (
        ok,
        format!(
            "|xi(T) - xi(0)|: s Id {case1:.1e}, dim D = 2 {case2:.1e}, H in L {case4:.1e}; dim D = 3 period {period_text} return {ret:.1e}"
        ),
    )
}

fn two_block_pair(g: &LieAlgebraModel) -> SymmetricPairSetup<'_> {
    let h = g.span_of_labels(&["f12", "f34"]).unwrap();
    let k = g.span_of_labels(&["f12"]).unwrap();
    let d = g.span_of_labels(&["f12", "f13", "f14", "f23", "f24"]).unwrap();
    let parts = PairDecomposition::new(g, &h, &k, &d).unwrap();
    let b = [
        DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
        DMatrix::from_row_slice(2, 2, &[0.7, -0.2, -0.2, 1.1]),
    ];
    let metric = parts.metric(1.5, &DMatrix::zeros(0, 0), &b, &DMatrix::identity(1, 1)).unwrap();
    SymmetricPairSetup::new(g, parts, metric).unwrap()
}

fn so3_pair(g: &LieAlgebraModel) -> SymmetricPairSetup<'_> {
    let h = g.span_of_labels(&["f12", "f13", "f23"]).unwrap();
    let k = g.span_of_labels(&["f12"]).unwrap();
    let d = g.span_of_labels(&["f12", "f14", "f24", "f34"]).unwrap();
    let parts = PairDecomposition::new(g, &h, &k, &d).unwrap();
    let b = [DMatrix::from_row_slice(2, 2, &[0.9, 0.25, 0.25, 1.4])];
    let a_l = DMatrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]);
    let metric = parts.metric(1.3, &DMatrix::from_element(1, 1, 2.2), &b, &a_l).unwrap();
    SymmetricPairSetup::new(g, parts, metric).unwrap()
}

fn pair_integrals() -> Outcome {
    let g = build_so(4).unwrap();
    let mut rng = sampling::rng(4);
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for setup in [two_block_pair(&g), so3_pair(&g)] {
        let field = setup.reduced_field();
        let x0 = sampling::gaussian_in(&mut rng, &setup.parts().d);
        let monitors = pair_monitors(&setup);
        let t = integrate(&field, &x0, &IntegratorConfig::new(1e-3, 100.0).with_stride(50), None, &monitors).unwrap();
        for m in &monitors {
            worst = worst.max(t.drift(&m.name).unwrap());
            if !names.contains(&m.name) {
                names.push(m.name.clone());
            }
        }
    }
    (worst < 1e-8, format!("max drift of {} over T = 100: {worst:.2e}", names.join(", ")))
}

fn torus_frequencies() -> Outcome {
    let g = build_so(4).unwrap();
    let setup = two_block_pair(&g);
    let x0 = AlgElement::from_vec(vec![1.2, 0.3, -0.2, 0.25, 0.1, 0.0]);
    let x0 = setup.parts().d.project(&x0);
    let torus = TorusData::from_state(&setup, &x0).unwrap();
    let t = integrate(&setup.reduced_field(), &x0, &IntegratorConfig::new(1e-2, 1e4).with_stride(10), None, &[]).unwrap();
    let rot = rotation_numbers(&torus, &setup, &t);
    let ratio_rot = rot[1] / rot[0];
    let ratio_avg = torus.frequency_ratios()[1];
    // both blocks turn at the same rate under ad of the U generator
    let b = setup.b_blocks();
    let analytic = (b[1].determinant() / b[0].determinant()).sqrt();
    let err = (ratio_rot - ratio_avg).abs();
    let ok = err < 1e-3 && (ratio_avg.abs() - analytic).abs() < 1e-9;
    (
        ok,
        format!("omega_2/omega_1 = {ratio_avg:.10}, rotation numbers {ratio_rot:.10}, |diff| {err:.1e}, analytic |ratio| {analytic:.10}"),
    )
}

fn chain_cascade() -> Outcome {
    let g = build_so(4).unwrap();
    let chain = ChainSpec::standard_blocks(&g, 3, 4).unwrap();
    let a0 = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.1, 0.2, 1.5, 0.3, -0.1, 0.3, 0.9]);
    let c0 = chain.subalgebra(0).embed(&AlgElement::from_vec(vec![0.3, -0.5, 0.8]));
    let c1 = chain.complement(1).embed(&AlgElement::from_vec(vec![0.6, -0.2, 0.4]));
    let cr = ChainReduction::new(&g, chain, &a0, &[1.7], &[vec![c0], vec![c1]]).unwrap();
    let sys = cr.eps_system().unwrap();
    let mut rng = sampling::rng(6);
    let x0 = sampling::gaussian_in(&mut rng, sys.manifold().subspace());
    let cfg = IntegratorConfig::new(1e-3, 10.0).with_stride(100);
    let direct = integrate(&sys, &x0, &cfg, Some(sys.manifold()), &[]).unwrap();
    let cascade = integrate(&CascadeField(&cr), &cr.project(&x0), &cfg.with_projection(false), None, &[]).unwrap();
    let distance = direct
        .states
        .iter()
        .zip(&cascade.states)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let chain2 = ChainSpec::standard_blocks(&g, 2, 4).unwrap();
    let f12 = g.span_of_labels(&["f12"]).unwrap().basis()[0].clone();
    let cr2 = ChainReduction::new(&g, chain2, &DMatrix::from_element(1, 1, 0.8), &[1.3, 2.1], &[vec![f12], vec![], vec![]]).unwrap();
    let sys2 = cr2.eps_system().unwrap();
    let y0 = sampling::gaussian_in(&mut rng, sys2.manifold().subspace());
    let t2 = integrate(&CascadeField(&cr2), &y0, &IntegratorConfig::new(1e-3, 10.0).with_stride(100), None, &[]).unwrap();
    let x0_max = t2.states.iter().map(|x| cr2.x0(x).norm()).fold(0.0, f64::max);
    let x1_motion = t2.states.iter().map(|x| (cr2.xk(1, x) - cr2.xk(1, &y0)).norm()).fold(0.0, f64::max);
    let ok = distance < 1e-6 && x0_max < 1e-14 && x1_motion < 1e-14;
    (
        ok,
        format!("so(3) < so(4): cascade vs EPS {distance:.1e}; D_0 = 0: max |x_0| {x0_max:.1e}, max |x_1(t) - x_1(0)| {x1_motion:.1e}"),
    )
}

fn suslov_measure() -> Outcome {
    let e3 = AlgElement::from_vec(vec![0.0, 0.0, 1.0]);
    let opts = CloudOptions::default();
    let eigen = SuslovProblem::new(MetricOperator::diagonal(&[1.0, 2.0, 3.0]).unwrap(), e3.clone()).unwrap();
    let coupled_a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0]);
    let coupled = SuslovProblem::new(MetricOperator::new(coupled_a).unwrap(), e3).unwrap();
    let r_eigen = asymptotic_diagnostics(&eigen, &opts).unwrap();
    let r_coupled = asymptotic_diagnostics(&coupled, &opts).unwrap();
    let ok = r_eigen.eigenvector
        && r_eigen.max_divergence < 1e-7
        && !r_coupled.eigenvector
        && r_coupled.max_divergence > 1e-3
        && r_coupled.forward.diameter_ratio < 0.1;
    (
        ok,
        format!(
            "eigenvector: max |div| {:.1e}; generic: max |div| {:.3}, cloud diameter ratio at t = 50 {:.1e}",
            r_eigen.max_divergence, r_coupled.max_divergence, r_coupled.forward.diameter_ratio
        ),
    )
}

fn coincidence() -> Outcome {
    let g = build_so(4).unwrap();
    let chain = ChainSpec::standard_blocks(&g, 2, 4).unwrap();
    let l = chain.subalgebra(0).clone();
    let a = make_block_metric(
        &[l.clone(), chain.complement(1).clone(), chain.complement(2).clone()],
        &[DMatrix::from_element(1, 1, 0.8), DMatrix::identity(2, 2) * 1.3, DMatrix::identity(3, 3) * 2.1],
    )
    .unwrap();
    let mut rng = sampling::rng(8);
    let xi0 = sampling::gaussian_in(&mut rng, &l.complement());
    let eta0 = l.basis()[0].clone() * 0.6;
    let r = coincidence_check(&g, &a, &l, &xi0, &eta0, 1e-3, 10.0, &mut rng).unwrap();
    let worst = r.distances.iter().copied().fold(0.0, f64::max);
    let leak = r.off_d.iter().copied().fold(0.0, f64::max);
    (
        r.passed,
        format!("T = 10: max pairwise distance {worst:.1e}, off-D {leak:.1e}, eta drift {:.1e}", r.eta_drift),
    )
}

/// Largest `|{F_i, F_j}|` with gradients taken by central differences of the values.
fn fd_involution(family: &IntegralFamily, g: &LieAlgebraModel, points: &[AlgElement]) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for x in points {
        let grads: Vec<AlgElement> = (0..family.len())
            .map(|i| {
                AlgElement::from_iterator(
                    g.dim(),
                    (0..g.dim()).map(|j| {
                        let e = g.basis_vector(j) * h;
                        (family.value(g, i, &(x + &e)).unwrap() - family.value(g, i, &(x - &e)).unwrap()) / (2.0 * h)
                    }),
                )
            })
            .collect();
        for i in 0..grads.len() {
            for j in i + 1..grads.len() {
                worst = worst.max(lie_poisson_bracket(g, &grads[i], &grads[j], x).abs());
            }
        }
    }
    worst
}

fn involution() -> Outcome {
    let g = build_so(4).unwrap();
    let mut rng = sampling::rng(9);
    let chain = ChainSpec::standard_blocks(&g, 2, 4).unwrap();
    let mik = chain_lift_family(&g, &chain, &default_lambda_grid(), &mut rng).unwrap();
    let a = regular_element(&g, &mut rng).unwrap();
    let shifted = shifted_invariants(&g, &a, &default_lambda_grid()).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for fam in [&mik, &shifted] {
        let cert = certify(fam, &g, 100, None, &mut rng).unwrap();
        let pts: Vec<AlgElement> = (0..5).map(|_| sampling::gaussian(&mut rng, 6).normalize()).collect();
        let fd = fd_involution(fam, &g, &pts);
        ok &= cert.max_involution_residual < 1e-10 && cert.independent_count >= 4 && cert.target_k == 4 && fd < 1e-6;
        parts.push(format!(
            "{}: residual {:.1e} (difference-quotient oracle {fd:.1e}), rank {}/{}",
            cert.family, cert.max_involution_residual, cert.independent_count, cert.target_k
        ));
    }
    (ok, parts.join("; "))
}

fn almost_poisson_structure() -> Outcome {
    let g = build_so(4).unwrap();
    let mut rng = sampling::rng(10);
    let d = g.span_of_labels(&["f13", "f14", "f23", "f24", "f34"]).unwrap();
    let full = Subspace::full(6);
    let q1 = sampling::random_spd(&mut rng, 6, -1.0, 1.0);
    let q2 = sampling::random_spd(&mut rng, 6, -1.0, 1.0);
    let q3 = sampling::random_spd(&mut rng, 6, -1.0, 1.0);
    let f = |q: &DMatrix<f64>, x: &AlgElement| 0.5 * x.dot(&(q * x));
    let (qa, qb, qc) = (q1.clone(), q2.clone(), q3.clone());
    let g1 = move |x: &AlgElement| &qa * x;
    let g2 = move |x: &AlgElement| &qb * x;
    let g3 = move |x: &AlgElement| &qc * x;
    let mut skew: f64 = 0.0;
    let mut leibniz: f64 = 0.0;
    for _ in 0..20 {
        let xi = sampling::gaussian_in(&mut rng, &d);
        skew = skew.max((almost_poisson(&g, &d, &g1, &g2, &xi) + almost_poisson(&g, &d, &g2, &g1, &xi)).abs());
        let h = 1e-5;
        let fd_prod = AlgElement::from_iterator(
            6,
            (0..6).map(|j| {
                let e = g.basis_vector(j) * h;
                let p = |y: &AlgElement| f(&q1, y) * f(&q2, y);
                (p(&(&xi + &e)) - p(&(&xi - &e))) / (2.0 * h)
            }),
        );
        let gp = move |_: &AlgElement| fd_prod.clone();
        let lhs = almost_poisson(&g, &d, &gp, &g3, &xi);
        let rhs = f(&q1, &xi) * almost_poisson(&g, &d, &g2, &g3, &xi) + f(&q2, &xi) * almost_poisson(&g, &d, &g1, &g3, &xi);
        leibniz = leibniz.max((lhs - rhs).abs());
    }
    let c: Vec<AlgElement> = (0..3).map(|_| sampling::gaussian(&mut rng, 6)).collect();
    let (c0, c1, c2) = (c[0].clone(), c[1].clone(), c[2].clone());
    let l0 = move |_: &AlgElement| c0.clone();
    let l1 = move |_: &AlgElement| c1.clone();
    let l2 = move |_: &AlgElement| c2.clone();
    let xi = sampling::gaussian_in(&mut rng, &d);
    let jac_d = jacobiator(&g, &d, [&l0, &l1, &l2], &xi, JACOBIATOR_FD_STEP).abs();
    let mut jac_full: f64 = 0.0;
    for _ in 0..20 {
        let x = sampling::gaussian(&mut rng, 6);
        jac_full = jac_full.max(jacobiator(&g, &full, [&l0, &l1, &l2], &x, JACOBIATOR_FD_STEP).abs());
    }
    let ok = skew < 1e-12 && leibniz < 1e-6 && jac_d > 1e-6 && jac_full < 1e-9;
    (
        ok,
        format!("skew {skew:.1e}, Leibniz {leibniz:.1e}; Jacobiator on D = f12-perp {jac_d:.3}, on G {jac_full:.1e}"),
    )
}

fn suslov_velocity_error(h: f64) -> (f64, f64) {
    let a = MetricOperator::new(DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0])).unwrap();
    let p = SuslovProblem::new(a.clone(), AlgElement::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
    let sys = p.system();
    let x0 = sys.manifold().project(&AlgElement::from_vec(vec![1.0, 0.5, 0.0]));
    let t = integrate(&sys, &x0, &IntegratorConfig::new(h, 5.0), Some(sys.manifold()), &[]).unwrap();
    let gt = reconstruct_group(p.algebra(), &a, &t, &DMatrix::identity(3, 3)).unwrap();
    let err = body_velocities(p.algebra(), &gt)
        .unwrap()
        .iter()
        .zip(&t.states[1..])
        .map(|((_, w), x)| (w - a.apply(x)).norm())
        .fold(0.0, f64::max);
    let orth = gt.matrices.iter().map(orthogonality_defect).fold(0.0, f64::max);
    (err, orth)
}

fn reconstruction() -> Outcome {
    let g = build_so(4).unwrap();
    let a = MetricOperator::diagonal(&[1.0, 1.5, 0.7, 2.0, 1.2, 0.9]).unwrap();
    let x = AlgElement::from_vec(vec![0.4, -0.3, 0.8, 0.1, -0.6, 0.5]);
    let n = 10_000;
    let h = 1e-3;
    let traj = Trajectory {
        times: (0..=n).map(|k| k as f64 * h).collect(),
        states: vec![x.clone(); n + 1],
        rates: Some(vec![AlgElement::zeros(6); n + 1]),
        monitors: Vec::new(),
    };
    let gt = reconstruct_group(&g, &a, &traj, &DMatrix::identity(4, 4)).unwrap();
    let omega = g.to_matrix(&a.apply(&x)).unwrap();
    let exp_err = gt
        .times
        .iter()
        .zip(&gt.matrices)
        .map(|(t, m)| (m - (&omega * *t).exp()).amax())
        .fold(0.0, f64::max);
    let (e1, o1) = suslov_velocity_error(0.02);
    let (e2, o2) = suslov_velocity_error(0.01);
    let order = e1 / e2;
    let ok = exp_err < 1e-8 && (3.0..5.0).contains(&order) && o1.max(o2) < 1e-8;
    (
        ok,
        format!("exp oracle {exp_err:.1e}; Suslov body velocity error {e1:.2e} -> {e2:.2e} on halving (ratio {order:.2}), orthogonality {:.1e}", o1.max(o2)),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_eps(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_eps"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("eps binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn cli_determinism() -> Outcome {
    let cfg = configs_dir();
    let runs: Vec<(PathBuf, i32)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap().keep();
            let s = |name: &str| dir.join(name).to_string_lossy().into_owned();
            let mut code = 0;
            code |= run_eps(&["simulate", "--config", &cfg.join("so3_so4_chain.toml").to_string_lossy(), "--seed", "7", "--out", &s("chain.csv")]);
            code |= run_eps(&["simulate", "--config", &cfg.join("suslov.toml").to_string_lossy(), "--out", &s("suslov.csv")]);
            code |= run_eps(&["reconstruct", &s("suslov.csv"), "--config", &cfg.join("suslov.toml").to_string_lossy(), "--out", &s("group.csv")]);
            code |= run_eps(&["verify", "involution", "--config", &cfg.join("so4_chain.toml").to_string_lossy(), "--out", &s("involution.json")]);
            code |= run_eps(&["frequencies", "--config", &cfg.join("so4_pair.toml").to_string_lossy(), "--out", &s("frequencies.json")]);
            (dir, code)
        })
        .collect();
    let files = [
        "chain.csv",
        "chain.summary.json",
        "suslov.csv",
        "suslov.summary.json",
        "group.csv",
        "group.summary.json",
        "involution.json",
        "frequencies.json",
    ];
    let identical = files.iter().all(|f| {
        let a = std::fs::read(runs[0].0.join(f));
        let b = std::fs::read(runs[1].0.join(f));
        matches!((a, b), (Ok(a), Ok(b)) if a == b && !a.is_empty())
    });
    for (dir, _) in &runs {
        let _ = std::fs::remove_dir_all(dir);
    }
    let ok = identical && runs.iter().all(|(_, c)| *c == 0);
    (ok, format!("{} artifacts from simulate, reconstruct, verify, frequencies compared byte for byte", files.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("algebra validity", algebra_validity),
        ("EPS conservation", eps_conservation),
        ("integrable regimes", integrable_regimes),
        ("symmetric-pair integrals", pair_integrals),
        ("torus frequencies", torus_frequencies),
        ("chain cascade", chain_cascade),
        ("Suslov measure", suslov_measure),
        ("sub-Riemannian coincidence", coincidence),
        ("involution certificates", involution),
        ("almost-Poisson structure", almost_poisson_structure),
        ("reconstruction", reconstruction),
        ("CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failures += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {detail} ({:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

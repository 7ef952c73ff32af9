use crate::algebra::{AlgElement, LieAlgebraModel, Subspace};

/// Gradient oracle of a function on `D`, returning an ambient vector.
pub type Gradient<'a> = &'a (dyn Fn(&AlgElement) -> AlgElement + Sync);

/// Step for the finite-difference gradient of an inner bracket.
pub const JACOBIATOR_FD_STEP: f64 = 1e-4;

/// `{F1, F2}_D(xi) = <xi, [grad F2, grad F1]>` with gradients projected to `D`.
pub fn almost_poisson(alg: &LieAlgebraModel, d: &Subspace, grad1: Gradient, grad2: Gradient, xi: &AlgElement) -> f64 {
    let g1 = d.project(&grad1(xi));
    let g2 = d.project(&grad2(xi));
    xi.dot(&alg.bracket(&g2, &g1))
}

fn fd_gradient(d: &Subspace, f: &dyn Fn(&AlgElement) -> f64, xi: &AlgElement, h: f64) -> AlgElement {
    let mut g = AlgElement::zeros(xi.len());
    for e in d.basis() {
        let slope = (f(&(xi + e * h)) - f(&(xi - e * h))) / (2.0 * h);
        g.axpy(slope, e, 1.0);
    }
    g
}

/// `{{F1,F2},F3} + {{F2,F3},F1} + {{F3,F1},F2}`, the inner bracket
/// differentiated by central differences along an orthonormal frame of `D`.
pub fn jacobiator(alg: &LieAlgebraModel, d: &Subspace, grads: [Gradient; 3], xi: &AlgElement, fd_step: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..3 {
        let (a, b, c) = (grads[k], grads[(k + 1) % 3], grads[(k + 2) % 3]);
        let inner = |y: &AlgElement| almost_poisson(alg, d, a, b, y);
        let grad_inner = fd_gradient(d, &inner, xi, fd_step);
        let gi = move |_: &AlgElement| grad_inner.clone();
        total += almost_poisson(alg, d, &gi, c, xi);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_rigid_body, build_so};
    use crate::linalg::unit;
    use crate::sampling;

    #[test]
    fn coordinate_bracket_on_rigid_body() {
        let g = build_rigid_body();
        let d = Subspace::full(3);
        let xi = AlgElement::from_vec(vec![0.3, -0.7, 1.9]);
        let e1 = |_: &AlgElement| unit(3, 0);
        let e2 = |_: &AlgElement| unit(3, 1);
        assert!((almost_poisson(&g, &d, &e1, &e2, &xi) + 1.9).abs() < 1e-14);
        assert_eq!(almost_poisson(&g, &d, &e1, &e1, &xi), 0.0);
    }

    #[test]
    fn casimir_commutes() {
        let g = build_so(4).unwrap();
        let d = Subspace::full(6);
        let mut rng = sampling::rng(3);
        let casimir = |x: &AlgElement| x * 2.0;
        for _ in 0..20 {
            let q = sampling::random_spd(&mut rng, 6, 0.1, 2.0);
            let gq = move |x: &AlgElement| &q * x;
            let xi = sampling::gaussian(&mut rng, 6);
            assert!(almost_poisson(&g, &d, &casimir, &gq, &xi).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_holds_for_full_algebra() {
        let g = build_rigid_body();
        let d = Subspace::full(3);
        let xi = AlgElement::from_vec(vec![0.5, 1.0, -0.25]);
        let e: Vec<_> = (0..3).map(|i| move |_: &AlgElement| unit(3, i)).collect();
        let j = jacobiator(&g, &d, [&e[0], &e[1], &e[2]], &xi, JACOBIATOR_FD_STEP);
        assert!(j.abs() < 1e-9);
        let same = jacobiator(&g, &d, [&e[0], &e[0], &e[0]], &xi, JACOBIATOR_FD_STEP);
        assert!(same.abs() < 1e-12);
    }
}

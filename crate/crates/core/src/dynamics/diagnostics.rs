use super::{EpsSystem, VectorField};
use crate::algebra::{AlgElement, Subspace};
use crate::error::Result;

/// Tolerance for the multiplier term of the inheritance criterion.
pub const INHERITANCE_TOL: f64 = 1e-9;

/// Trace of the Jacobian of `field` restricted to `frame`, by central differences.
pub fn divergence<V: VectorField + ?Sized>(field: &V, x: &AlgElement, frame: &Subspace, fd_step: f64) -> Result<f64> {
    let mut tr = 0.0;
    for e in frame.basis() {
        let fp = field.eval(&(x + e * fd_step))?;
        let fm = field.eval(&(x - e * fd_step))?;
        tr += e.dot(&(fp - fm)) / (2.0 * fd_step);
    }
    Ok(tr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InheritanceReport {
    pub passed: bool,
    /// Largest `|sum_i lambda_i <grad F, a^i>|` over the samples.
    pub worst_residual: f64,
    /// Largest `|<grad F, [x, A x]>|`, which vanishes when `F` is an integral of the free flow.
    pub worst_ep_residual: f64,
}

/// Checks whether an integral of the unconstrained flow survives the constraints.
pub fn integral_inheritance_check(
    sys: &EpsSystem,
    grad_f: &dyn Fn(&AlgElement) -> AlgElement,
    samples: &[AlgElement],
) -> InheritanceReport {
    let mut worst = 0.0f64;
    let mut worst_ep = 0.0f64;
    for x in samples {
        let g = grad_f(x);
        let lambda = sys.multipliers(x);
        let r: f64 = lambda
            .iter()
            .zip(sys.manifold().constraints())
            .map(|(l, a)| l * g.dot(a))
            .sum();
        worst = worst.max(r.abs());
        worst_ep = worst_ep.max(g.dot(&sys.free_field(x)).abs());
    }
    InheritanceReport {
        passed: worst <= INHERITANCE_TOL,
        worst_residual: worst,
        worst_ep_residual: worst_ep,
    }
}

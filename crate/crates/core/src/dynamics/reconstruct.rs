use std::io::Write;

use nalgebra::DMatrix;

use super::Trajectory;
use crate::algebra::{AlgElement, LieAlgebraModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::MetricOperator;

/// Drift allowed before the per-step projection back to the group.
pub const GROUP_DRIFT_TOL: f64 = 1e-6;

/// Group elements in the defining representation along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct GroupTrajectory {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    /// Largest pre-projection drift `|g^T g - I|` seen during integration.
    pub max_drift: f64,
}

/// `|g^T g - I|` (Frobenius).
pub fn orthogonality_defect(g: &DMatrix<f64>) -> f64 {
    (g.transpose() * g - DMatrix::identity(g.nrows(), g.ncols())).norm()
}

fn hermite(y0: &AlgElement, d0: &AlgElement, y1: &AlgElement, d1: &AlgElement, dt: f64, s: f64) -> AlgElement {
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (dt * (s3 - 2.0 * s2 + s))
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (dt * (s3 - s2))
}

/// Second-order finite-difference derivatives of the sampled states.
fn estimate_rates(traj: &Trajectory) -> Vec<AlgElement> {
    let n = traj.len();
    let t = &traj.times;
    let x = &traj.states;
    if n < 2 {
        return x.iter().map(|s| s * 0.0).collect();
    }
    if n == 2 {
        let d = (&x[1] - &x[0]) / (t[1] - t[0]);
        return vec![d.clone(), d];
    }
    (0..n)
        .map(|k| {
            let (a, b, c) = if k == 0 {
                (0, 1, 2)
            } else if k == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (k - 1, k, k + 1)
            };
            // derivative of the quadratic through three samples, evaluated at t[k]
            let (ta, tb, tc) = (t[a], t[b], t[c]);
            let tk = t[k];
            let la = (2.0 * tk - tb - tc) / ((ta - tb) * (ta - tc));
            let lb = (2.0 * tk - ta - tc) / ((tb - ta) * (tb - tc));
            let lc = (2.0 * tk - ta - tb) / ((tc - ta) * (tc - tb));
            &x[a] * la + &x[b] * lb + &x[c] * lc
        })
        .collect()
}

/// Integrates `g' = g Omega(t)` with `Omega = A x(t)` interpolated by cubic
/// Hermite splines between samples, projecting to the nearest orthogonal
/// matrix after every step.
pub fn reconstruct_group(
    alg: &LieAlgebraModel,
    metric: &MetricOperator,
    traj: &Trajectory,
    g0: &DMatrix<f64>,
) -> Result<GroupTrajectory> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let size = alg
        .representation()
        .ok_or_else(|| Error::Unsupported("algebra has no matrix representation".into()))?
        .matrices[0]
        .nrows();
    if g0.nrows() != size || g0.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: g0.nrows(),
        });
    }
    let d0 = orthogonality_defect(g0);
    if d0 > 1e-8 {
        return Err(Error::InvalidArgument(format!("g0 is not orthogonal (defect {d0:.3e})")));
    }
    let rates = match &traj.rates {
        Some(r) => r.clone(),
        None => estimate_rates(traj),
    };
    let omega: Vec<AlgElement> = traj.states.iter().map(|x| metric.apply(x)).collect();
    let omega_dot: Vec<AlgElement> = rates.iter().map(|r| metric.apply(r)).collect();

    let mut out = GroupTrajectory {
        times: traj.times.clone(),
        matrices: Vec::with_capacity(traj.len()),
        max_drift: 0.0,
    };
    let mut g = g0.clone();
    out.matrices.push(g.clone());
    for k in 0..traj.len() - 1 {
        let dt = traj.times[k + 1] - traj.times[k];
        let w0 = alg.to_matrix(&omega[k])?;
        let wm = alg.to_matrix(&hermite(&omega[k], &omega_dot[k], &omega[k + 1], &omega_dot[k + 1], dt, 0.5))?;
        let w1 = alg.to_matrix(&omega[k + 1])?;
        let k1 = &g * &w0;
        let k2 = (&g + &k1 * (0.5 * dt)) * &wm;
        let k3 = (&g + &k2 * (0.5 * dt)) * &wm;
        let k4 = (&g + &k3 * dt) * &w1;
        let next = &g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let drift = orthogonality_defect(&next);
        out.max_drift = out.max_drift.max(drift);
        if drift > GROUP_DRIFT_TOL {
            return Err(Error::GroupDrift {
                t: traj.times[k + 1],
                drift,
            });
        }
        g = linalg::nearest_orthogonal(&next);
        out.matrices.push(g.clone());
    }
    Ok(out)
}

/// Body velocity `g^{-1} g'` at interior samples by central differences.
pub fn body_velocities(alg: &LieAlgebraModel, gt: &GroupTrajectory) -> Result<Vec<(f64, AlgElement)>> {
    let mut out = Vec::new();
    for k in 1..gt.times.len().saturating_sub(1) {
        let dt = gt.times[k + 1] - gt.times[k - 1];
        let dg = (&gt.matrices[k + 1] - &gt.matrices[k - 1]) / dt;
        let w = gt.matrices[k].transpose() * dg;
        out.push((gt.times[k], alg.from_matrix(&w)?));
    }
    Ok(out)
}

/// Writes `t,g_11,...,g_NN` in row-major order.
pub fn write_group_csv<W: Write>(mut w: W, gt: &GroupTrajectory) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    let size = gt.matrices.first().map_or(0, |m| m.nrows());
    let mut header = vec!["t".to_string()];
    for i in 1..=size {
        for j in 1..=size {
            header.push(format!("g_{i}{j}"));
        }
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (t, g) in gt.times.iter().zip(&gt.matrices) {
        let mut row = vec![format!("{t:.16e}")];
        for i in 0..size {
            for j in 0..size {
                row.push(format!("{:.16e}", g[(i, j)]));
            }
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_so;
    use crate::dynamics::{integrate, FnField, IntegratorConfig};
    use nalgebra::DVector;

    #[test]
    fn constant_velocity_matches_exponential() {
        let g = build_so(3).unwrap();
        let a = MetricOperator::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let x0 = DVector::from_vec(vec![0.4, -0.3, 0.2]);
        let f = FnField::new(3, |_x: &AlgElement| DVector::zeros(3));
        let traj = integrate(&f, &x0, &IntegratorConfig::new(1e-2, 2.0), None, &[]).unwrap();
        let gt = reconstruct_group(&g, &a, &traj, &DMatrix::identity(3, 3)).unwrap();
        let eta = g.to_matrix(&a.apply(&x0)).unwrap();
        let expect = (eta * 2.0).exp();
        assert!((gt.matrices.last().unwrap() - expect).norm() < 1e-8);
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let g = build_so(3).unwrap();
        let a = MetricOperator::identity(3);
        let r = reconstruct_group(&g, &a, &Trajectory::default(), &DMatrix::identity(3, 3));
        assert!(r.is_err());
    }

    #[test]
    fn huge_step_reports_drift() {
        let g = build_so(3).unwrap();
        let a = MetricOperator::identity(3);
        let x0 = DVector::from_vec(vec![3.0, 0.0, 0.0]);
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![x0.clone(), x0],
            rates: None,
            monitors: vec![],
        };
        assert!(matches!(
            reconstruct_group(&g, &a, &traj, &DMatrix::identity(3, 3)),
            Err(Error::GroupDrift { .. })
        ));
    }
}

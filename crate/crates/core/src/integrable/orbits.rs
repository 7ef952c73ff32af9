use crate::algebra::AlgElement;
use crate::dynamics::{rk4_step, VectorField};
use crate::error::{Error, Result};

/// A detected return of a trajectory to its starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    pub return_distance: f64,
}

fn advance<V: VectorField + ?Sized>(field: &V, x: &AlgElement, dt: f64, h: f64) -> Result<AlgElement> {
    if dt <= 0.0 {
        return Ok(x.clone());
    }
    let n = (dt / h).ceil().max(1.0) as usize;
    let sub = dt / n as f64;
    let mut y = x.clone();
    for _ in 0..n {
        y = rk4_step(field, &y, sub)?.0;
    }
    Ok(y)
}

/// Nearest-return search: the first local minimum of `|x(t) - x0|` below
/// `coarse_tol * |x0|`, refined by golden-section search between samples.
pub fn detect_period<V: VectorField + ?Sized>(
    field: &V,
    x0: &AlgElement,
    h: f64,
    t_max: f64,
    coarse_tol: f64,
) -> Result<Option<PeriodEstimate>> {
    if !(h > 0.0) || !(t_max > h) {
        return Err(Error::InvalidArgument(format!("need 0 < h < t_max, got h = {h}, t_max = {t_max}")));
    }
    let scale = x0.norm().max(f64::MIN_POSITIVE);
    let steps = (t_max / h).ceil() as usize;
    let mut prev2 = x0.clone();
    let mut prev = rk4_step(field, x0, h)?.0;
    let mut d_prev2 = 0.0;
    let mut d_prev = (&prev - x0).norm();
    for k in 2..=steps {
        let cur = rk4_step(field, &prev, h)?.0;
        let d_cur = (&cur - x0).norm();
        if d_prev < d_prev2 && d_prev <= d_cur && d_prev < coarse_tol * scale {
            let t_left = (k - 2) as f64 * h;
            let dist = |t: f64| -> Result<f64> { Ok((advance(field, &prev2, t - t_left, h)? - x0).norm()) };
            let (mut a, mut b) = (t_left, t_left + 2.0 * h);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - r * (b - a);
            let mut d = a + r * (b - a);
            let mut fc = dist(c)?;
            let mut fd = dist(d)?;
            while b - a > 1e-13 * b.max(1.0) {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - r * (b - a);
                    fc = dist(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + r * (b - a);
                    fd = dist(d)?;
                }
            }
            let (t, f) = if fc < fd { (c, fc) } else { (d, fd) };
            return Ok(Some(PeriodEstimate {
                period: t,
                return_distance: f,
            }));
        }
        prev2 = prev;
        prev = cur;
        d_prev2 = d_prev;
        d_prev = d_cur;
    }
    Ok(None)
}

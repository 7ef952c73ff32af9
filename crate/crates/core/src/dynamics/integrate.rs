use std::io::{BufRead, Write};

use nalgebra::DVector;

use super::{ConstraintManifold, VectorField};
use crate::algebra::AlgElement;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Step `h` in seconds.
    pub step: f64,
    /// Final time `T` in seconds.
    pub duration: f64,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
    /// Pull each step back onto the constraint manifold.
    pub projection: bool,
    /// Reject a step whose constraint residual exceeds this value.
    pub reject_tol: f64,
}

impl IntegratorConfig {
    pub fn new(step: f64, duration: f64) -> Self {
        Self {
            step,
            duration,
            stride: 1,
            projection: true,
            reject_tol: 1e-9,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.projection = on;
        self
    }
}

/// A named scalar recorded at every sample.
pub struct Monitor<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&AlgElement) -> f64 + Sync + 'a>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&AlgElement) -> f64 + Sync + 'a) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

/// `H = 1/2 <x, A x>`, `F = <x, x>` and the constraint residual, the monitors
/// written to the trajectory CSV.
pub fn standard_monitors(manifold: &ConstraintManifold) -> Vec<Monitor<'_>> {
    vec![
        Monitor::new("H", move |x| manifold.metric().energy(x)),
        Monitor::new("F", |x| x.dot(x)),
        Monitor::new("constraint_max", move |x| manifold.residual(x)),
    ]
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AlgElement>,
    /// Field values at the samples, when known.
    pub rates: Option<Vec<AlgElement>>,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&AlgElement> {
        self.states.last()
    }

    pub fn monitor(&self, name: &str) -> Option<&[f64]> {
        self.monitors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// `max |m(t) - m(0)|` for a recorded monitor.
    pub fn drift(&self, name: &str) -> Option<f64> {
        let v = self.monitor(name)?;
        let first = *v.first()?;
        Some(v.iter().map(|m| (m - first).abs()).fold(0.0, f64::max))
    }

    pub fn max_of(&self, name: &str) -> Option<f64> {
        Some(self.monitor(name)?.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
    }
}

/// One classical fourth-order Runge-Kutta step. Returns the new state and the
/// field at the old state.
pub fn rk4_step<V: VectorField + ?Sized>(field: &V, x: &AlgElement, h: f64) -> Result<(AlgElement, AlgElement)> {
    let k1 = field.eval(x)?;
    let k2 = field.eval(&(x + &k1 * (0.5 * h)))?;
    let k3 = field.eval(&(x + &k2 * (0.5 * h)))?;
    let k4 = field.eval(&(x + &k3 * h))?;
    let mut next = x.clone();
    next.axpy(h / 6.0, &k1, 1.0);
    next.axpy(h / 3.0, &k2, 1.0);
    next.axpy(h / 3.0, &k3, 1.0);
    next.axpy(h / 6.0, &k4, 1.0);
    Ok((next, k1))
}

/// Fixed-step RK4 integration over `[0, T]`. With a constraint manifold the
/// residual is checked after every step, after projection if enabled.
pub fn integrate<V: VectorField + ?Sized>(
    field: &V,
    x0: &AlgElement,
    cfg: &IntegratorConfig,
    manifold: Option<&ConstraintManifold>,
    monitors: &[Monitor<'_>],
) -> Result<Trajectory> {
    if !(cfg.step > 0.0) || !(cfg.duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step and duration must be positive (h = {}, T = {})",
            cfg.step, cfg.duration
        )));
    }
    if x0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: x0.len(),
        });
    }
    let h = cfg.step;
    let total = cfg.duration;
    let full_steps = (total / h * (1.0 + 1e-12)).floor() as usize;
    let remainder = total - full_steps as f64 * h;
    let n_steps = if remainder > 1e-9 * h { full_steps + 1 } else { full_steps };
    let stride = cfg.stride.max(1);

    let capacity = n_steps / stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        rates: Some(Vec::with_capacity(capacity)),
        monitors: monitors.iter().map(|m| (m.name.clone(), Vec::with_capacity(capacity))).collect(),
    };
    let record = |traj: &mut Trajectory, t: f64, x: &AlgElement, rate: AlgElement| {
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.rates.as_mut().unwrap().push(rate);
        for (slot, m) in traj.monitors.iter_mut().zip(monitors) {
            slot.1.push((m.eval)(x));
        }
    };

    let mut x = x0.clone();
    for k in 0..n_steps {
        let t = k as f64 * h;
        let hk = if k + 1 == n_steps && remainder > 1e-9 * h { remainder } else { h };
        let (next, rate) = rk4_step(field, &x, hk)?;
        if k % stride == 0 {
            record(&mut traj, t, &x, rate);
        }
        x = next;
        if let Some(m) = manifold {
            if cfg.projection {
                x = m.project(&x);
            }
            let residual = m.residual(&x);
            if !(residual <= cfg.reject_tol) {
                return Err(Error::ConstraintRejected {
                    t: t + hk,
                    residual,
                });
            }
        }
    }
    let rate = field.eval(&x)?;
    record(&mut traj, total, &x, rate);
    Ok(traj)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,x_1,...,x_n,H,F,constraint_max`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let cols = ["H", "F", "constraint_max"];
    let monitors: Vec<&[f64]> = cols
        .iter()
        .map(|c| traj.monitor(c).ok_or_else(|| Error::InvalidArgument(format!("trajectory lacks monitor {c}"))))
        .collect::<Result<_>>()?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend(cols.iter().map(|c| c.to_string()));
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (row, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut fields = vec![fmt17(*t)];
        fields.extend(x.iter().map(|v| fmt17(*v)));
        fields.extend(monitors.iter().map(|m| fmt17(m[row])));
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Reads a trajectory CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(r: R) -> Result<Trajectory> {
    let mut lines = r.lines();
    let bad = |msg: String| Error::InvalidArgument(msg);
    let header = lines
        .next()
        .ok_or_else(|| bad("empty trajectory file".into()))?
        .map_err(|e| bad(e.to_string()))?;
    let names: Vec<&str> = header.trim().split(',').collect();
    let n = names.len();
    if n < 5 || names[0] != "t" || names[n - 3..] != ["H", "F", "constraint_max"] {
        return Err(bad(format!("unexpected trajectory header: {header}")));
    }
    let dim = n - 4;
    let mut traj = Trajectory {
        monitors: ["H", "F", "constraint_max"].iter().map(|c| (c.to_string(), Vec::new())).collect(),
        ..Default::default()
    };
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
        if vals.len() != n {
            return Err(bad(format!("line {}: expected {n} fields, found {}", lineno + 2, vals.len())));
        }
        if let Some(&prev) = traj.times.last() {
            if vals[0] <= prev {
                return Err(bad(format!("line {}: times must increase", lineno + 2)));
            }
        }
        traj.times.push(vals[0]);
        traj.states.push(DVector::from_row_slice(&vals[1..=dim]));
        for (k, slot) in traj.monitors.iter_mut().enumerate() {
            slot.1.push(vals[dim + 1 + k]);
        }
    }
    Ok(traj)
}

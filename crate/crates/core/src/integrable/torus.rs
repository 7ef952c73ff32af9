use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::symmetric::SymmetricPairSetup;
use crate::algebra::AlgElement;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance of the averaging quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Level constants of the invariant set `xi_{W_0} = c_0, F_k = c_k, F = norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusLevels {
    pub c0: Vec<f64>,
    pub c: Vec<f64>,
    pub norm: f64,
}

impl TorusLevels {
    pub fn from_state(setup: &SymmetricPairSetup, xi: &AlgElement) -> Self {
        let v = super::pair_integrals(setup, xi);
        Self {
            c0: v.f0,
            c: v.fk,
            norm: v.f,
        }
    }

    /// Levels of the state scaled by `sqrt(factor)`: quadratic levels scale by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c0: self.c0.iter().map(|c| c * factor.sqrt()).collect(),
            c: self.c.iter().map(|c| c * factor).collect(),
            norm: self.norm * factor,
        }
    }
}

#[derive(Debug, Clone)]
struct Ellipse {
    /// Index into the `W_k` list.
    block: usize,
    /// Principal axes of `B_{W_k}` as columns, in `W_k` coordinates.
    axes: DMatrix<f64>,
    semi: [f64; 2],
    /// `P_{W_k} ad_eta` on `W_k`.
    rot: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl Ellipse {
    fn point(&self, phi: f64) -> DVector<f64> {
        &self.axes * DVector::from_vec(vec![self.semi[0] * phi.cos(), self.semi[1] * phi.sin()])
    }

    fn tangent(&self, phi: f64) -> DVector<f64> {
        &self.axes * DVector::from_vec(vec![-self.semi[0] * phi.sin(), self.semi[1] * phi.cos()])
    }

    /// `phi' = Phi f(phi)` along the split equation.
    fn rate(&self, phi: f64) -> f64 {
        let t = self.tangent(phi);
        let v = &self.rot * (&self.b * self.point(phi));
        t.dot(&v) / t.norm_squared()
    }

    fn angle(&self, coords: &DVector<f64>) -> f64 {
        let y = self.axes.transpose() * coords;
        (y[1] / self.semi[1]).atan2(y[0] / self.semi[0])
    }
}

/// An invariant torus of the symmetric-pair flow with its averaged frequencies.
#[derive(Debug, Clone)]
pub struct TorusData {
    levels: TorusLevels,
    ellipses: Vec<Ellipse>,
    /// `c_k / b_k` for one-dimensional `W_k`.
    fixed: Vec<(usize, f64)>,
    b_min: Vec<f64>,
    frequencies: Vec<f64>,
    margin: f64,
    sign: f64,
    eta: AlgElement,
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature with a relative tolerance.
pub fn adaptive_quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    // a coarse uniform pass sets the absolute scale
    let n = 64;
    let h = (b - a) / n as f64;
    let coarse: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * f(a + i as f64 * h).abs()
        })
        .sum::<f64>()
        * h;
    let tol = rel_tol * coarse.max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for i in 0..n {
        let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson(f, x0, x1, f0, fm, f1, whole, tol / n as f64, 40);
    }
    total
}

impl TorusData {
    /// Builds the torus for the given levels; `sign` selects the component by the sign of `Phi`.
    pub fn new(setup: &SymmetricPairSetup, levels: TorusLevels, sign: f64) -> Result<Self> {
        let parts = setup.parts();
        if parts.u.dim() != 1 {
            return Err(Error::Precondition(format!("need dim U = 1, got {}", parts.u.dim())));
        }
        if levels.c.len() != parts.w.len() || levels.c0.len() != parts.w0.dim() {
            return Err(Error::DimensionMismatch {
                expected: parts.w.len(),
                found: levels.c.len(),
            });
        }
        let eta = parts.u.basis()[0].clone();
        let alg = setup.algebra();
        let mut ellipses = Vec::new();
        let mut fixed = Vec::new();
        let mut b_min = Vec::new();
        for (k, (wk, b)) in parts.w.iter().zip(setup.b_blocks()).enumerate() {
            let (vals, vecs) = linalg::sorted_eigen(b);
            if !(vals[0] > 0.0) {
                return Err(Error::Precondition(format!("B_{} is not positive definite (min eigenvalue {:.3e})", k + 1, vals[0])));
            }
            b_min.push(vals[0]);
            let ck = levels.c[k];
            if !(ck > 0.0) {
                return Err(Error::DegenerateTorus(format!("level c_{} = {ck} is not positive", k + 1)));
            }
            match wk.dim() {
                1 => fixed.push((k, ck / vals[0])),
                2 => {
                    let rot = DMatrix::from_fn(2, 2, |i, j| wk.basis()[i].dot(&alg.bracket(&eta, &wk.basis()[j])));
                    ellipses.push(Ellipse {
                        block: k,
                        axes: vecs,
                        semi: [(ck / vals[0]).sqrt(), (ck / vals[1]).sqrt()],
                        rot,
                        b: b.clone(),
                    });
                }
                d => return Err(Error::Precondition(format!("dim W_{} = {d} exceeds 2", k + 1))),
            }
        }
        let c0_sq: f64 = levels.c0.iter().map(|c| c * c).sum();
        let margin = levels.norm - c0_sq - levels.c.iter().zip(&b_min).map(|(c, b)| c / b).sum::<f64>();
        if !(margin > 0.0) {
            return Err(Error::CompactnessViolated(margin));
        }
        let mut frequencies = Vec::with_capacity(ellipses.len());
        for e in &ellipses {
            let min_rate = (0..256)
                .map(|i| e.rate(2.0 * PI * i as f64 / 256.0).abs())
                .fold(f64::INFINITY, f64::min);
            if min_rate < 1e-12 {
                return Err(Error::DegenerateTorus(format!("f_{} vanishes", e.block + 1)));
            }
            let period = adaptive_quadrature(&|s| 1.0 / e.rate(s), 0.0, 2.0 * PI, QUADRATURE_TOL);
            frequencies.push(2.0 * PI / period);
        }
        Ok(Self {
            levels,
            ellipses,
            fixed,
            b_min,
            frequencies,
            margin,
            sign: if sign < 0.0 { -1.0 } else { 1.0 },
            eta,
        })
    }

    /// Torus through `xi`, on the component of its `Phi` sign.
    pub fn from_state(setup: &SymmetricPairSetup, xi: &AlgElement) -> Result<Self> {
        let levels = TorusLevels::from_state(setup, xi);
        let sign = setup.parts().u.basis().first().map_or(1.0, |e| e.dot(xi));
        Self::new(setup, levels, sign)
    }

    pub fn levels(&self) -> &TorusLevels {
        &self.levels
    }

    /// Number `g` of two-dimensional blocks.
    pub fn genus(&self) -> usize {
        self.ellipses.len()
    }

    /// `omega_k`, `k = 1..g`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `omega_k / omega_1`.
    pub fn frequency_ratios(&self) -> Vec<f64> {
        let first = self.frequencies.first().copied().unwrap_or(1.0);
        self.frequencies.iter().map(|w| w / first).collect()
    }

    pub fn compactness_margin(&self) -> f64 {
        self.margin
    }

    pub fn b_min(&self) -> &[f64] {
        &self.b_min
    }

    /// Indices into the `W_k` list of the two-dimensional blocks.
    pub fn torus_blocks(&self) -> Vec<usize> {
        self.ellipses.iter().map(|e| e.block).collect()
    }

    /// `f_k(phi)` for the `k`-th two-dimensional block.
    pub fn rate(&self, k: usize, phi: f64) -> f64 {
        self.ellipses[k].rate(phi)
    }

    /// `Phi(phi_1, ..., phi_g)`.
    pub fn phi(&self, angles: &[f64]) -> f64 {
        let mut rest = self.levels.norm - self.levels.c0.iter().map(|c| c * c).sum::<f64>();
        for (e, &a) in self.ellipses.iter().zip(angles) {
            rest -= e.point(a).norm_squared();
        }
        for (_, r) in &self.fixed {
            rest -= r;
        }
        self.sign * rest.max(0.0).sqrt()
    }

    /// Ellipse angles `phi_k` of a state.
    pub fn angles(&self, setup: &SymmetricPairSetup, xi: &AlgElement) -> Vec<f64> {
        self.ellipses
            .iter()
            .map(|e| e.angle(&setup.parts().w[e.block].coords(xi)))
            .collect()
    }

    /// The state with the given angles; one-dimensional blocks take their positive root.
    pub fn point(&self, setup: &SymmetricPairSetup, angles: &[f64]) -> AlgElement {
        let parts = setup.parts();
        let mut x = &self.eta * self.phi(angles);
        x += parts.w0.embed(&DVector::from_vec(self.levels.c0.clone()));
        for (e, &a) in self.ellipses.iter().zip(angles) {
            x += parts.w[e.block].embed(&e.point(a));
        }
        for &(k, r) in &self.fixed {
            x += &parts.w[k].basis()[0] * r.sqrt();
        }
        x
    }

    pub fn report(&self) -> FrequencyReport {
        FrequencyReport {
            levels: self.levels.clone(),
            frequencies: self.frequencies.clone(),
            frequency_ratios: self.frequency_ratios(),
            compactness_margin: self.margin,
            rotation_ratios: None,
            crosscheck_error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub levels: TorusLevels,
    pub frequencies: Vec<f64>,
    pub frequency_ratios: Vec<f64>,
    pub compactness_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosscheck_error: Option<f64>,
}

/// Least-squares slope of `y` against `t` over the trailing `fraction` of the samples.
pub fn tail_slope(t: &[f64], y: &[f64], fraction: f64) -> f64 {
    let n = t.len().min(y.len());
    let start = ((1.0 - fraction) * n as f64).floor() as usize;
    let (t, y) = (&t[start..n], &y[start..n]);
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    num / den
}

/// Continuous lift of an angle sequence.
pub fn unwrap_angles(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &a) in raw.iter().enumerate() {
        if i > 0 {
            let d = a - raw[i - 1];
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(a + offset);
    }
    out
}

/// Rotation numbers `lim phi_k(t) / t` of the ellipse angles along a trajectory,
/// as least-squares slopes over the last 80% of the run.
pub fn rotation_numbers(torus: &TorusData, setup: &SymmetricPairSetup, traj: &Trajectory) -> Vec<f64> {
    let angles: Vec<Vec<f64>> = traj.states.iter().map(|x| torus.angles(setup, x)).collect();
    (0..torus.genus())
        .map(|k| {
            let raw: Vec<f64> = angles.iter().map(|a| a[k]).collect();
            tail_slope(&traj.times, &unwrap_angles(&raw), 0.8)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_smooth_periodic_integrand() {
        let v = adaptive_quadrature(&|s| 1.0 / (2.0 + s.cos()), 0.0, 2.0 * PI, 1e-10);
        assert!((v - 2.0 * PI / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn unwrap_and_slope() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
        let raw: Vec<f64> = t.iter().map(|x| (3.0 * x + 0.5f64).sin().atan2((3.0 * x + 0.5f64).cos())).collect();
        let slope = tail_slope(&t, &unwrap_angles(&raw), 0.8);
        assert!((slope - 3.0).abs() < 1e-10);
    }
}

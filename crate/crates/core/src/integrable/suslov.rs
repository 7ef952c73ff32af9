use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{build_rigid_body, AlgElement, LieAlgebraModel};
use crate::dynamics::{divergence, integrate, Distribution, EpsSystem, IntegratorConfig, Reversed, VectorField};
use crate::error::{Error, Result};
use crate::metrics::MetricOperator;
use crate::sampling;

/// Rigid body fixed at a point whose angular velocity `A_0 x` stays orthogonal
/// to a body-fixed vector `a_0`.
#[derive(Debug, Clone)]
pub struct SuslovProblem {
    alg: LieAlgebraModel,
    metric: MetricOperator,
    a0: AlgElement,
}

impl SuslovProblem {
    pub fn new(metric: MetricOperator, a0: AlgElement) -> Result<Self> {
        if metric.dim() != 3 || a0.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: metric.dim().max(a0.len()),
            });
        }
        if a0.norm() == 0.0 {
            return Err(Error::InvalidArgument("a0 must be nonzero".into()));
        }
        Ok(Self {
            alg: build_rigid_body(),
            metric,
            a0,
        })
    }

    pub fn algebra(&self) -> &LieAlgebraModel {
        &self.alg
    }

    pub fn metric(&self) -> &MetricOperator {
        &self.metric
    }

    pub fn a0(&self) -> &AlgElement {
        &self.a0
    }

    pub fn distribution(&self) -> Distribution {
        Distribution::new(3, vec![self.a0.clone()]).expect("nonzero a0")
    }

    pub fn system(&self) -> EpsSystem<'_> {
        EpsSystem::new(&self.alg, &self.metric, &self.distribution()).expect("3x3 SPD metric")
    }

    /// Whether `a_0` is an eigenvector of `A_0`.
    pub fn is_eigenvector(&self) -> bool {
        let aa = self.metric.apply(&self.a0);
        let along = &self.a0 * (aa.dot(&self.a0) / self.a0.norm_squared());
        (aa - along).norm() <= 1e-12 * self.metric.matrix().norm() * self.a0.norm()
    }
}

/// `x' = x × A_0 x + lambda a_0`.
pub fn suslov_field(metric: &MetricOperator, a0: &AlgElement, x: &AlgElement) -> Result<AlgElement> {
    SuslovProblem::new(metric.clone(), a0.clone())?.system().eval(x)
}

#[derive(Debug, Clone)]
pub struct CloudOptions {
    pub size: usize,
    /// Cloud radius relative to the center's norm.
    pub radius: f64,
    pub t_end: f64,
    pub step: f64,
    /// Length of the reference run that identifies the limit ray.
    pub reference_time: f64,
    pub divergence_samples: usize,
    pub seed: u64,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            size: 24,
            radius: 0.1,
            t_end: 50.0,
            step: 1e-2,
            reference_time: 500.0,
            divergence_samples: 100,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CloudStats {
    pub ray: Vec<f64>,
    /// Largest pairwise distance of the normalized directions.
    pub diameter_start: f64,
    pub diameter_end: f64,
    pub diameter_ratio: f64,
    /// Largest distance from the cloud to the ray.
    pub ray_distance_start: f64,
    pub ray_distance_end: f64,
    pub ray_distance_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub eigenvector: bool,
    pub max_divergence: f64,
    pub forward: CloudStats,
    pub backward: CloudStats,
    /// Cosine of the angle between the forward and backward rays.
    pub ray_alignment: f64,
}

fn direction_diameter(cloud: &[AlgElement]) -> f64 {
    let dirs: Vec<AlgElement> = cloud.iter().map(|x| x / x.norm()).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in dirs.iter().enumerate() {
        for b in &dirs[i + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}

fn ray_distance(cloud: &[AlgElement], ray: &AlgElement) -> f64 {
    cloud
        .iter()
        .map(|x| {
            let t = x.dot(ray);
            if t <= 0.0 {
                x.norm()
            } else {
                (x - ray * t).norm()
            }
        })
        .fold(0.0, f64::max)
}

fn cloud_run<V: VectorField + ?Sized>(field: &V, center: &AlgElement, cloud: &[AlgElement], opts: &CloudOptions, sys: &EpsSystem) -> Result<CloudStats> {
    let reference = integrate(field, center, &IntegratorConfig::new(opts.step, opts.reference_time).with_stride(usize::MAX), Some(sys.manifold()), &[])?;
    let end_ref = reference.last().expect("nonempty run");
    let ray = end_ref / end_ref.norm();
    let cfg = IntegratorConfig::new(opts.step, opts.t_end).with_stride(usize::MAX);
    let finals: Vec<AlgElement> = cloud
        .par_iter()
        .map(|x| integrate(field, x, &cfg, Some(sys.manifold()), &[]).map(|t| t.last().expect("nonempty run").clone()))
        .collect::<Result<_>>()?;
    let diameter_start = direction_diameter(cloud);
    let diameter_end = direction_diameter(&finals);
    let ray_distance_start = ray_distance(cloud, &ray);
    let ray_distance_end = ray_distance(&finals, &ray);
    Ok(CloudStats {
        ray: ray.iter().copied().collect(),
        diameter_start,
        diameter_end,
        diameter_ratio: diameter_end / diameter_start,
        ray_distance_start,
        ray_distance_end,
        ray_distance_ratio: ray_distance_end / ray_distance_start,
    })
}

/// Forward and backward cloud experiments around a generic state of unit norm,
/// plus the largest field divergence over random states on the constraint manifold.
pub fn asymptotic_diagnostics(problem: &SuslovProblem, opts: &CloudOptions) -> Result<AsymptoticReport> {
    let sys = problem.system();
    let m = sys.manifold().subspace().clone();
    let mut rng = sampling::rng(opts.seed);

    let mut max_divergence: f64 = 0.0;
    for _ in 0..opts.divergence_samples {
        let x = sampling::gaussian_in(&mut rng, &m);
        max_divergence = max_divergence.max(divergence(&sys, &x, &m, 1e-5)?.abs());
    }

    let center = sampling::gaussian_in(&mut rng, &m);
    let center = &center / center.norm();
    let cloud: Vec<AlgElement> = (0..opts.size)
        .map(|_| {
            let dx = sampling::gaussian_in(&mut rng, &m);
            &center + &dx * (opts.radius / dx.norm())
        })
        .collect();
    let forward = cloud_run(&sys, &center, &cloud, opts, &sys)?;
    let backward = cloud_run(&Reversed(&sys), &center, &cloud, opts, &sys)?;
    let ray_alignment = forward.ray.iter().zip(&backward.ray).map(|(a, b)| a * b).sum();
    Ok(AsymptoticReport {
        eigenvector: problem.is_eigenvector(),
        max_divergence,
        forward,
        backward,
        ray_alignment,
    })
}

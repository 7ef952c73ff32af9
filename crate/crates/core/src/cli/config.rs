//! TOML run configuration and the instance it describes.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::algebra::{build_rigid_body, build_so, build_sp, build_u, AlgElement, LieAlgebraModel, Subspace};
use crate::dynamics::Distribution;
use crate::error::{Error, Result};
use crate::integrable::{PairDecomposition, TorusLevels};
use crate::metrics::{make_block_metric, make_chain_metric, make_sectional_operator, ChainSpec, MetricOperator};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub algebra: AlgebraSpec,
    pub metric: MetricSpec,
    #[serde(default)]
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub suite: SuiteSpec,
    pub torus: Option<TorusSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    /// `so`, `u`, `sp` or `rigid_body`.
    pub family: String,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub labels: Option<Vec<String>>,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Explicit {
        matrix: Vec<Vec<f64>>,
    },
    Diagonal {
        values: Vec<f64>,
    },
    Block {
        blocks: Vec<BlockSpec>,
    },
    /// `A_0 + s_1 Id_{V_1} + ... + s_n Id_{V_n}` on a chain given either by the
    /// upper-left block size of `G_0` or by labels of `G_0, ..., G_{n-1}`.
    Chain {
        base: Option<usize>,
        levels: Option<Vec<Vec<String>>>,
        a0: Vec<Vec<f64>>,
        s: Vec<f64>,
    },
    Sectional {
        a: Vec<f64>,
        b: Vec<f64>,
        r: Vec<Vec<f64>>,
    },
    /// Metric adapted to a symmetric pair `(G, H)` with `K ⊂ H`; `D` comes
    /// from the distribution table.
    Pair {
        h: Vec<String>,
        k: Vec<String>,
        s: f64,
        w0: Option<Vec<Vec<f64>>>,
        b: Vec<Vec<Vec<f64>>>,
        l: Option<Vec<Vec<f64>>>,
    },
}

/// At most one of the fields may be set; none means `D = G`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    /// Constraint vectors `a^i` in algebra coordinates.
    pub constraints: Option<Vec<Vec<f64>>>,
    /// Basis elements spanning the annihilator of `D`.
    pub constraint_labels: Option<Vec<String>>,
    /// Basis elements spanning `D`.
    pub span: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Algebra coordinates; a seeded Gaussian point of `M` when absent.
    pub state: Option<Vec<f64>>,
    /// Rescale the state to this norm.
    pub norm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub step: f64,
    pub duration: f64,
    pub stride: Option<usize>,
    pub projection: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    /// Random sample count for pointwise checks.
    pub samples: Option<usize>,
    /// `zero` or `nonzero` divergence expected by the measure suite.
    pub measure_expect: Option<String>,
    /// `L`-component of the lifted start for the coincidence suite.
    pub eta: Option<Vec<f64>>,
    /// `chain-lift` or `shifted` for the involution suite.
    pub family: Option<String>,
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    pub levels: Option<TorusLevels>,
    pub sign: Option<f64>,
}

/// A raw config with the bytes it was parsed from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidArgument(format!("config is not UTF-8: {e}")))?;
    Ok(LoadedConfig {
        config: parse_config(text)?,
        hash: config_hash(&bytes),
    })
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument(format!("{what}: ragged matrix")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn vector(alg: &LieAlgebraModel, xs: &[f64], what: &str) -> Result<AlgElement> {
    if xs.len() != alg.dim() {
        return Err(Error::InvalidArgument(format!(
            "{what}: expected {} coordinates, found {}",
            alg.dim(),
            xs.len()
        )));
    }
    Ok(AlgElement::from_row_slice(xs))
}

/// Chain data resolved against the algebra.
#[derive(Debug, Clone)]
pub struct ChainData {
    pub chain: ChainSpec,
    pub a0: DMatrix<f64>,
    pub s: Vec<f64>,
}

/// Pair data resolved against the algebra.
#[derive(Debug, Clone)]
pub struct PairData {
    pub parts: PairDecomposition,
}

/// An algebra, metric and distribution ready for integration.
#[derive(Debug, Clone)]
pub struct Instance {
    pub alg: LieAlgebraModel,
    pub metric: MetricOperator,
    pub dist: Distribution,
    pub chain: Option<ChainData>,
    pub pair: Option<PairData>,
    pub seed: u64,
}

pub fn build_algebra(spec: &AlgebraSpec) -> Result<LieAlgebraModel> {
    let need = || {
        spec.n
            .ok_or_else(|| Error::InvalidArgument(format!("algebra.n is required for family {}", spec.family)))
    };
    match spec.family.as_str() {
        "so" => build_so(need()?),
        "u" => build_u(need()?),
        "sp" => build_sp(need()?),
        "rigid_body" => Ok(build_rigid_body()),
        other => Err(Error::InvalidArgument(format!("algebra.family: unknown family {other:?}"))),
    }
}

fn build_distribution(alg: &LieAlgebraModel, spec: &DistributionSpec) -> Result<Distribution> {
    let given = [spec.constraints.is_some(), spec.constraint_labels.is_some(), spec.span.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if given > 1 {
        return Err(Error::InvalidArgument(
            "distribution: give only one of constraints, constraint_labels, span".into(),
        ));
    }
    if let Some(cs) = &spec.constraints {
        let vs = cs
            .iter()
            .enumerate()
            .map(|(i, c)| vector(alg, c, &format!("distribution.constraints[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        return Distribution::new(alg.dim(), vs);
    }
    if let Some(labels) = &spec.constraint_labels {
        let ann = alg.span_of_labels(labels)?;
        return Distribution::new(alg.dim(), ann.basis().to_vec());
    }
    if let Some(labels) = &spec.span {
        return Ok(Distribution::from_subspace(&alg.span_of_labels(labels)?));
    }
    Ok(Distribution::unconstrained(alg.dim()))
}

fn block_subspace(alg: &LieAlgebraModel, b: &BlockSpec, i: usize) -> Result<Subspace> {
    match (&b.labels, &b.vectors) {
        (Some(l), None) => alg.span_of_labels(l),
        (None, Some(v)) => {
            let vs = v
                .iter()
                .map(|x| vector(alg, x, &format!("metric.blocks[{i}].vectors")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Subspace::new(alg.dim(), &vs))
        }
        _ => Err(Error::InvalidArgument(format!(
            "metric.blocks[{i}]: give exactly one of labels, vectors"
        ))),
    }
}

impl Instance {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let alg = build_algebra(&cfg.algebra)?;
        let dist = build_distribution(&alg, &cfg.distribution)?;
        let mut chain = None;
        let mut pair = None;
        let metric = match &cfg.metric {
            MetricSpec::Explicit { matrix: m } => MetricOperator::new(matrix(m, "metric.matrix")?)?,
            MetricSpec::Diagonal { values } => MetricOperator::diagonal(values)?,
            MetricSpec::Block { blocks } => {
                let subs = blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| block_subspace(&alg, b, i))
                    .collect::<Result<Vec<_>>>()?;
                let mats = blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| matrix(&b.matrix, &format!("metric.blocks[{i}].matrix")))
                    .collect::<Result<Vec<_>>>()?;
                make_block_metric(&subs, &mats)?
            }
            MetricSpec::Chain { base, levels, a0, s } => {
                let spec = match (base, levels) {
                    (Some(k), None) => {
                        let n = alg
                            .representation()
                            .map(|r| r.matrices[0].nrows())
                            .ok_or_else(|| Error::InvalidArgument("metric.base needs a matrix algebra".into()))?;
                        ChainSpec::standard_blocks(&alg, *k, n)?
                    }
                    (None, Some(levels)) => {
                        let subs = levels
                            .iter()
                            .map(|l| alg.span_of_labels(l))
                            .collect::<Result<Vec<_>>>()?;
                        ChainSpec::new(&alg, subs)?
                    }
                    _ => {
                        return Err(Error::InvalidArgument(
                            "metric: a chain needs exactly one of base, levels".into(),
                        ))
                    }
                };
                let a0 = matrix(a0, "metric.a0")?;
                let m = make_chain_metric(&spec, &a0, s)?;
                chain = Some(ChainData {
                    chain: spec,
                    a0,
                    s: s.clone(),
                });
                m
            }
            MetricSpec::Sectional { a, b, r } => {
                let a = vector(&alg, a, "metric.a")?;
                let b = vector(&alg, b, "metric.b")?;
                let r = matrix(r, "metric.r")?;
                let split = (dist.codim() > 0).then(|| dist.subspace().clone());
                make_sectional_operator(&alg, &a, &b, &r, split.as_ref())?.into_metric()?
            }
            MetricSpec::Pair { h, k, s, w0, b, l } => {
                let hs = alg.span_of_labels(h)?;
                let ks = alg.span_of_labels(k)?;
                let parts = PairDecomposition::new(&alg, &hs, &ks, dist.subspace())?;
                let w0m = match w0 {
                    Some(m) => matrix(m, "metric.w0")?,
                    None => DMatrix::identity(parts.w0.dim(), parts.w0.dim()),
                };
                let lm = match l {
                    Some(m) => matrix(m, "metric.l")?,
                    None => DMatrix::identity(parts.l.dim(), parts.l.dim()),
                };
                let bs = b
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(m, &format!("metric.b[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let m = parts.metric(*s, &w0m, &bs, &lm)?;
                pair = Some(PairData { parts });
                m
            }
        };
        if metric.dim() != alg.dim() {
            return Err(Error::InvalidArgument(format!(
                "metric: expected a {0}x{0} operator, found {1}x{1}",
                alg.dim(),
                metric.dim()
            )));
        }
        let i = &cfg.integrator;
        if !(i.step > 0.0) || !(i.duration > 0.0) {
            return Err(Error::InvalidArgument("integrator: step and duration must be positive".into()));
        }
        Ok(Self {
            alg,
            metric,
            dist,
            chain,
            pair,
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        })
    }

    /// Splits the constraint vectors by chain level, for the chain reduction.
    pub fn chain_constraints(&self) -> Result<Vec<Vec<AlgElement>>> {
        let data = self
            .chain
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("metric: a chain metric is required".into()))?;
        let mut out = vec![Vec::new(); data.chain.len() + 1];
        for a in self.dist.constraints() {
            let tol = 1e-10 * a.norm().max(1.0);
            let level = (0..=data.chain.len()).find(|&k| {
                let home = if k == 0 {
                    data.chain.subalgebra(0)
                } else {
                    data.chain.complement(k)
                };
                home.distance(a) <= tol
            });
            match level {
                Some(k) => out[k].push(a.clone()),
                None => {
                    return Err(Error::InvalidArgument(
                        "distribution: each constraint must lie in G_0 or a single V_k".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{load_config, Instance, LoadedConfig, RunConfig};
use crate::algebra::AlgElement;
use crate::dynamics::{
    almost_poisson, body_velocities, divergence, integrate, jacobiator, orthogonality_defect, read_trajectory_csv,
    reconstruct_group, standard_monitors, write_group_csv, write_trajectory_csv, ConstraintManifold, EpsSystem,
    IntegratorConfig, GROUP_DRIFT_TOL, JACOBIATOR_FD_STEP,
};
use crate::error::Error;
use crate::hamiltonian::{
    certify, coincidence_check, default_lambda_grid, chain_lift_family, regular_element, shifted_invariants,
    INVARIANCE_TOL, INVOLUTION_TOL,
};
use crate::integrable::{
    pair_monitors, rotation_numbers, split_equations, CascadeField, ChainReduction, SymmetricPairSetup, TorusData,
};
use crate::sampling::{self, SeededRng};

/// Largest constraint residual accepted for a configured initial state.
pub const INITIAL_STATE_TOL: f64 = 1e-9;
pub const DRIFT_TOL: f64 = 1e-8;
pub const POINTWISE_TOL: f64 = 1e-12;
pub const TRAJECTORY_TOL: f64 = 1e-6;
pub const CROSSCHECK_TOL: f64 = 1e-3;
pub const DIVERGENCE_ZERO_TOL: f64 = 1e-7;
pub const DIVERGENCE_NONZERO_TOL: f64 = 1e-6;
pub const JACOBI_ZERO_TOL: f64 = 1e-8;
pub const JACOBI_NONZERO_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConstraintRejected { .. } | Error::GroupDrift { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Writes `bytes` through a temporary file in the target directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Path of the JSON summary written next to a CSV artifact.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s.into_bytes()
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn coords(x: &AlgElement) -> Vec<f64> {
    x.iter().copied().collect()
}

struct Context {
    loaded: LoadedConfig,
    inst: Instance,
    rng: SeededRng,
}

impl Context {
    fn new(opts: &RunOptions) -> CliResult<Self> {
        let loaded = load_config(&opts.config)?;
        let mut inst = Instance::from_config(&loaded.config)?;
        if let Some(seed) = opts.seed {
            inst.seed = seed;
        }
        let rng = sampling::rng(inst.seed);
        Ok(Self { loaded, inst, rng })
    }

    fn cfg(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn integrator(&self) -> IntegratorConfig {
        let i = &self.cfg().integrator;
        IntegratorConfig::new(i.step, i.duration)
            .with_stride(i.stride.unwrap_or(1))
            .with_projection(i.projection.unwrap_or(true))
    }

    /// The configured initial state pulled onto `M`, or a seeded point of `M`.
    fn initial_state(&mut self, manifold: &ConstraintManifold) -> CliResult<AlgElement> {
        let init = &self.loaded.config.initial;
        let x = match &init.state {
            Some(v) => {
                if v.len() != self.inst.alg.dim() {
                    return Err(CliError::Usage(format!(
                        "initial.state: expected {} coordinates, found {}",
                        self.inst.alg.dim(),
                        v.len()
                    )));
                }
                let x = AlgElement::from_row_slice(v);
                let residual = manifold.residual(&x);
                if residual > INITIAL_STATE_TOL {
                    let y = manifold.project(&x);
                    warn!(
                        "initial state is off the constraint manifold (residual {residual:.3e}); projected by {:.3e}",
                        (&y - &x).norm()
                    );
                    y
                } else {
                    x
                }
            }
            None => sampling::gaussian_in(&mut self.rng, manifold.subspace()),
        };
        Ok(match init.norm {
            Some(n) if x.norm() > 0.0 => &x * (n / x.norm()),
            _ => x,
        })
    }

    fn samples(&self) -> usize {
        self.cfg().suite.samples.unwrap_or(100)
    }

    fn scale(&self) -> f64 {
        self.inst.metric.matrix().norm().max(1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `<` for an upper bound, `>` for a lower bound.
    pub relation: &'static str,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<",
            tolerance,
            passed: value < tolerance,
        }
    }

    fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">",
            tolerance,
            passed: value > tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub config_hash: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// The failing check farthest from its tolerance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
    pub passed: bool,
}

fn tolerance_table(checks: &[Check]) -> BTreeMap<String, f64> {
    checks.iter().map(|c| (c.name.clone(), c.tolerance)).collect()
}

/// The verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Conservation,
    SplitIntegrals,
    ChainReduction,
    Coincidence,
    Involution,
    Measure,
    Jacobi,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Conservation => "conservation",
            Suite::SplitIntegrals => "split-integrals",
            Suite::ChainReduction => "chain-reduction",
            Suite::Coincidence => "coincidence",
            Suite::Involution => "involution",
            Suite::Measure => "measure",
            Suite::Jacobi => "jacobi",
        }
    }
}

/// Integrates the configured instance and writes the trajectory CSV and its summary.
pub fn simulate(opts: &RunOptions) -> CliResult<()> {
    let out = opts
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("simulate requires --out PATH".into()))?;
    let mut ctx = Context::new(opts)?;
    let inst = ctx.inst.clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let x0 = ctx.initial_state(sys.manifold())?;
    let cfg = ctx.integrator();
    let traj = integrate(&sys, &x0, &cfg, Some(sys.manifold()), &standard_monitors(sys.manifold()))?;

    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &traj)?;

    let lambdas: Vec<f64> = traj.states.iter().flat_map(|x| sys.multipliers(x).iter().copied().collect::<Vec<_>>()).collect();
    let lambda_stats = if lambdas.is_empty() {
        Value::Null
    } else {
        let n = lambdas.len() as f64;
        json!({
            "count": sys.manifold().constraints().len(),
            "min": lambdas.iter().copied().fold(f64::INFINITY, f64::min),
            "max": lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "mean_abs": lambdas.iter().map(|l| l.abs()).sum::<f64>() / n,
        })
    };
    let last = traj.last().expect("nonempty run");
    let summary = json!({
        "config_hash": ctx.loaded.hash,
        "seed": inst.seed,
        "tolerances": { "constraint_reject": cfg.reject_tol, "initial_state": INITIAL_STATE_TOL },
        "samples": traj.len(),
        "final_time": traj.times.last(),
        "initial_state": coords(&x0),
        "final_state": coords(last),
        "final_integrals": {
            "H": sys.energy(last),
            "F": last.norm_squared(),
        },
        "drifts": {
            "H": traj.drift("H"),
            "F": traj.drift("F"),
        },
        "max_constraint_residual": traj.max_of("constraint_max"),
        "lambda": lambda_stats,
    });
    write_atomic(out, &csv)?;
    write_atomic(&summary_path(out), &to_json(&summary))?;
    Ok(())
}

/// Runs a verification suite; returns whether every check passed.
pub fn verify(suite: Suite, opts: &RunOptions) -> CliResult<bool> {
    let mut ctx = Context::new(opts)?;
    let (checks, details) = match suite {
        Suite::Conservation => conservation(&mut ctx)?,
        Suite::SplitIntegrals => split_integrals(&mut ctx)?,
        Suite::ChainReduction => chain_reduction(&mut ctx)?,
        Suite::Coincidence => coincidence(&mut ctx)?,
        Suite::Involution => involution(&mut ctx)?,
        Suite::Measure => measure(&mut ctx)?,
        Suite::Jacobi => jacobi(&mut ctx)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    let worst = checks
        .iter()
        .filter(|c| !c.passed)
        .max_by(|a, b| {
            let gap = |c: &Check| (c.value.abs().max(f64::MIN_POSITIVE) / c.tolerance).ln().abs();
            gap(a).total_cmp(&gap(b))
        })
        .map(|c| format!("{} = {:.6e} (needs {} {:.1e})", c.name, c.value, c.relation, c.tolerance));
    let report = VerifyReport {
        suite: suite.name().into(),
        config_hash: ctx.loaded.hash.clone(),
        seed: ctx.inst.seed,
        tolerances: tolerance_table(&checks),
        checks,
        worst,
        details,
        passed,
    };
    emit(opts.out.as_deref(), &to_json(&report))?;
    Ok(passed)
}

type SuiteOutput = CliResult<(Vec<Check>, Value)>;

fn conservation(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let x0 = ctx.initial_state(sys.manifold())?;
    let cfg = ctx.integrator();
    let traj = integrate(&sys, &x0, &cfg, Some(sys.manifold()), &standard_monitors(sys.manifold()))?;
    let h0 = sys.energy(&x0);
    let periods = (cfg.duration / 100.0).max(1.0);
    let mut tangency: f64 = 0.0;
    for _ in 0..ctx.samples() {
        let x = sampling::gaussian_in(&mut ctx.rng, sys.manifold().subspace());
        tangency = tangency.max(sys.manifold().residual(&sys.field(&x)) / x.norm_squared().max(f64::MIN_POSITIVE));
    }
    let checks = vec![
        Check::below("energy_drift", traj.drift("H").unwrap_or(0.0), DRIFT_TOL * h0.abs().max(1.0) * periods),
        Check::below("constraint_max", traj.max_of("constraint_max").unwrap_or(0.0), cfg.reject_tol),
        Check::below("field_tangency", tangency, 1e-10 * ctx.scale() * ctx.scale()),
    ];
    Ok((checks, json!({ "initial_energy": h0, "samples": traj.len() })))
}

fn pair_setup(ctx: &Context) -> CliResult<SymmetricPairSetup<'_>> {
    let pair = ctx
        .inst
        .pair
        .as_ref()
        .ok_or_else(|| CliError::Usage("metric: a symmetric-pair metric (kind = \"pair\") is required".into()))?;
    Ok(SymmetricPairSetup::new(&ctx.inst.alg, pair.parts.clone(), ctx.inst.metric.clone())?)
}

fn split_integrals(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let x0 = ctx.initial_state(sys.manifold())?;
    let samples = ctx.samples();
    let cfg = ctx.integrator();
    let mut rng = ctx.rng.clone();
    let setup = pair_setup(ctx)?;
    let reduced = setup.reduced_field();
    let d = reduced.subspace().clone();
    let monitors = pair_monitors(&setup);
    let traj = integrate(&reduced, &d.project(&x0), &cfg.with_projection(false), None, &monitors)?;
    let periods = (cfg.duration / 100.0).max(1.0);
    let mut checks = Vec::new();
    for m in &monitors {
        let start = traj.monitor(&m.name).and_then(|v| v.first().copied()).unwrap_or(0.0);
        checks.push(Check::below(
            format!("drift_{}", m.name),
            traj.drift(&m.name).unwrap_or(0.0),
            DRIFT_TOL * start.abs().max(1.0) * periods,
        ));
    }
    let mut recombine: f64 = 0.0;
    let mut eps_gap: f64 = 0.0;
    for _ in 0..samples {
        let x = sampling::gaussian_in(&mut rng, &d);
        let r = reduced.field(&x);
        let s2 = x.norm_squared().max(f64::MIN_POSITIVE);
        recombine = recombine.max((split_equations(&setup, &x).recombine() - &r).norm() / s2);
        eps_gap = eps_gap.max((sys.field(&x) - &r).norm() / s2);
    }
    let scale = ctx.scale();
    checks.push(Check::below("split_recombination", recombine, POINTWISE_TOL * scale));
    checks.push(Check::below("eps_equals_reduced", eps_gap, POINTWISE_TOL * scale));
    let p = setup.parts();
    let details = json!({
        "dims": { "U": p.u.dim(), "W0": p.w0.dim(), "W": p.w.iter().map(|w| w.dim()).collect::<Vec<_>>(), "L": p.l.dim() },
    });
    Ok((checks, details))
}

fn chain_reduction(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let data = inst
        .chain
        .as_ref()
        .ok_or_else(|| CliError::Usage("metric: a chain metric is required".into()))?;
    let levels = inst.chain_constraints()?;
    let cr = ChainReduction::new(&inst.alg, data.chain.clone(), &data.a0, &data.s, &levels)?;
    let sys = cr.eps_system()?;
    let x0 = ctx.initial_state(sys.manifold())?;
    let cfg = ctx.integrator();
    let mut pointwise: f64 = 0.0;
    for _ in 0..ctx.samples() {
        let x = sampling::gaussian_in(&mut ctx.rng, sys.manifold().subspace());
        let gap = (cr.project(&sys.field(&x)) - cr.reduced_field(&x)).norm();
        pointwise = pointwise.max(gap / x.norm_squared().max(f64::MIN_POSITIVE));
    }
    let direct = integrate(&sys, &x0, &cfg, Some(sys.manifold()), &[])?;
    let cascade = integrate(&CascadeField(&cr), &cr.project(&x0), &cfg.with_projection(false), None, &[])?;
    let distance = direct
        .states
        .iter()
        .zip(&cascade.states)
        .map(|(a, b)| (cr.project(a) - b).norm())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::below("pointwise_field", pointwise, POINTWISE_TOL * ctx.scale()),
        Check::below("trajectory_distance", distance, TRAJECTORY_TOL),
    ];
    let dims: Vec<usize> = (1..=data.chain.len()).map(|k| cr.piece(k).dim()).collect();
    Ok((checks, json!({ "d0_dim": cr.d0().dim(), "piece_dims": dims })))
}

fn coincidence(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let d = inst.dist.subspace().clone();
    let l = inst.dist.annihilator().clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let x0 = ctx.initial_state(sys.manifold())?;
    let xi0 = d.project(&x0);
    let eta0 = match &ctx.cfg().suite.eta {
        Some(v) => {
            if v.len() != inst.alg.dim() {
                return Err(CliError::Usage(format!(
                    "suite.eta: expected {} coordinates, found {}",
                    inst.alg.dim(),
                    v.len()
                )));
            }
            let e = AlgElement::from_row_slice(v);
            if l.distance(&e) > 1e-12 * e.norm().max(1.0) {
                return Err(CliError::Usage("suite.eta must lie in the annihilator of D".into()));
            }
            e
        }
        None => sampling::gaussian_in(&mut ctx.rng, &l) * 0.5,
    };
    let cfg = ctx.integrator();
    let rep = coincidence_check(&inst.alg, &inst.metric, &l, &xi0, &eta0, cfg.step, cfg.duration, &mut ctx.rng)?;
    let names = ["eps_vs_h", "eps_vs_hstar", "h_vs_hstar"];
    let mut checks: Vec<Check> = names
        .iter()
        .zip(rep.distances)
        .map(|(n, v)| Check::below(format!("distance_{n}"), v, TRAJECTORY_TOL))
        .collect();
    for (n, v) in ["eps", "h", "hstar"].iter().zip(rep.off_d) {
        checks.push(Check::below(format!("off_d_{n}"), v, 1e-8));
    }
    checks.push(Check::below("eta_drift", rep.eta_drift, 1e-9));
    checks.push(Check::below("adl_invariance", rep.invariance_residual, INVARIANCE_TOL * ctx.scale()));
    Ok((checks, serde_json::to_value(&rep).expect("serializable report")))
}

fn involution(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let suite = &ctx.loaded.config.suite;
    let lambdas = suite.lambdas.clone().unwrap_or_else(default_lambda_grid);
    let which = suite
        .family
        .clone()
        .unwrap_or_else(|| if inst.chain.is_some() { "chain-lift" } else { "shifted" }.into());
    let family = match which.as_str() {
        "chain-lift" => {
            let data = inst
                .chain
                .as_ref()
                .ok_or_else(|| CliError::Usage("suite.family = \"chain-lift\" needs a chain metric".into()))?;
            chain_lift_family(&inst.alg, &data.chain, &lambdas, &mut ctx.rng)?
        }
        "shifted" => {
            let a = regular_element(&inst.alg, &mut ctx.rng)?;
            shifted_invariants(&inst.alg, &a, &lambdas)?
        }
        other => return Err(CliError::Usage(format!("suite.family: unknown family {other:?}"))),
    };
    let points = ctx.samples();
    let cert = certify(&family, &inst.alg, points, None, &mut ctx.rng)?;
    let checks = vec![
        Check::below("max_involution_residual", cert.max_involution_residual, INVOLUTION_TOL),
        Check::above("independent_count", cert.independent_count as f64, cert.target_k as f64 - 0.5),
    ];
    Ok((checks, serde_json::to_value(&cert).expect("serializable certificate")))
}

fn measure(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let m = sys.manifold().subspace().clone();
    let split = inst.metric.preservation_defect(inst.dist.subspace()) <= 1e-10 * ctx.scale();
    let expect = match ctx.cfg().suite.measure_expect.as_deref() {
        None => {
            if split {
                "zero"
            } else {
                "nonzero"
            }
        }
        Some("zero") => "zero",
        Some("nonzero") => "nonzero",
        Some(other) => return Err(CliError::Usage(format!("suite.measure_expect: expected zero or nonzero, found {other:?}"))),
    };
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.samples() {
        let x = sampling::gaussian_in(&mut ctx.rng, &m);
        worst = worst.max(divergence(&sys, &x, &m, 1e-5)?.abs());
    }
    let check = if expect == "zero" {
        Check::below("max_divergence", worst, DIVERGENCE_ZERO_TOL)
    } else {
        Check::above("max_divergence", worst, DIVERGENCE_NONZERO_TOL)
    };
    Ok((vec![check], json!({ "expectation": expect, "metric_preserves_d": split })))
}

fn jacobi(ctx: &mut Context) -> SuiteOutput {
    let inst = ctx.inst.clone();
    let alg = &inst.alg;
    let d = inst.dist.subspace().clone();
    let n = alg.dim();
    let integrable = alg.subalgebra_residual(&d) < 1e-12;
    let mut skew: f64 = 0.0;
    let mut leibniz: f64 = 0.0;
    let mut jac: f64 = 0.0;
    for _ in 0..ctx.samples() {
        let c: Vec<AlgElement> = (0..3).map(|_| sampling::gaussian(&mut ctx.rng, n)).collect();
        let xi = sampling::gaussian_in(&mut ctx.rng, &d);
        let (c0, c1, c2) = (c[0].clone(), c[1].clone(), c[2].clone());
        let g0 = move |_: &AlgElement| c0.clone();
        let g1 = move |_: &AlgElement| c1.clone();
        let g2 = move |_: &AlgElement| c2.clone();
        let b01 = almost_poisson(alg, &d, &g0, &g1, &xi);
        skew = skew.max((b01 + almost_poisson(alg, &d, &g1, &g0, &xi)).abs());
        // {F0 F1, F2} = F0 {F1, F2} + F1 {F0, F2}
        let (f0, f1) = (c[0].dot(&xi), c[1].dot(&xi));
        let (ca, cb) = (c[0].clone(), c[1].clone());
        let gprod = move |y: &AlgElement| &cb * ca.dot(y) + &ca * cb.dot(y);
        let lhs = almost_poisson(alg, &d, &gprod, &g2, &xi);
        let rhs = f0 * almost_poisson(alg, &d, &g1, &g2, &xi) + f1 * almost_poisson(alg, &d, &g0, &g2, &xi);
        leibniz = leibniz.max((lhs - rhs).abs());
        jac = jac.max(jacobiator(alg, &d, [&g0, &g1, &g2], &xi, JACOBIATOR_FD_STEP).abs());
    }
    let mut checks = vec![Check::below("skew_symmetry", skew, 1e-12), Check::below("leibniz", leibniz, 1e-10)];
    checks.push(if integrable {
        Check::below("max_jacobiator", jac, JACOBI_ZERO_TOL)
    } else {
        Check::above("max_jacobiator", jac, JACOBI_NONZERO_TOL)
    });
    Ok((checks, json!({ "d_is_subalgebra": integrable })))
}

/// Rebuilds `g(t)` from a trajectory written by `simulate` with the same config.
pub fn reconstruct(trajectory: &Path, opts: &RunOptions) -> CliResult<()> {
    let out = opts
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("reconstruct requires --out PATH".into()))?;
    let ctx = Context::new(opts)?;
    let sp = summary_path(trajectory);
    let summary: Value = std::fs::read(&sp)
        .map_err(|e| CliError::Usage(format!("cannot read run summary {}: {e}", sp.display())))
        .and_then(|b| serde_json::from_slice(&b).map_err(|e| CliError::Usage(format!("{}: {e}", sp.display()))))?;
    let recorded = summary.get("config_hash").and_then(Value::as_str).unwrap_or_default();
    if recorded != ctx.loaded.hash {
        return Err(CliError::Usage(format!(
            "config hash mismatch: trajectory was produced with {recorded}, config is {}",
            ctx.loaded.hash
        )));
    }
    let file = std::fs::File::open(trajectory)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", trajectory.display())))?;
    let traj = read_trajectory_csv(std::io::BufReader::new(file))?;
    if traj.is_empty() {
        return Err(CliError::Usage(format!("{}: empty trajectory", trajectory.display())));
    }
    let inst = &ctx.inst;
    let size = inst
        .alg
        .representation()
        .map(|r| r.matrices[0].nrows())
        .ok_or_else(|| CliError::Usage("algebra has no matrix representation".into()))?;
    let gt = reconstruct_group(&inst.alg, &inst.metric, &traj, &DMatrix::identity(size, size))?;
    let orthogonality = gt.matrices.iter().map(orthogonality_defect).fold(0.0, f64::max);
    let mut velocity_gap: f64 = 0.0;
    for ((_, w), x) in body_velocities(&inst.alg, &gt)?.iter().zip(&traj.states[1..]) {
        velocity_gap = velocity_gap.max((w - inst.metric.apply(x)).norm());
    }
    let mut csv = Vec::new();
    write_group_csv(&mut csv, &gt)?;
    let report = json!({
        "config_hash": ctx.loaded.hash,
        "tolerances": { "group_drift": GROUP_DRIFT_TOL },
        "samples": gt.times.len(),
        "max_group_drift": gt.max_drift,
        "orthogonality_residual": orthogonality,
        "body_velocity_mismatch": velocity_gap,
    });
    write_atomic(out, &csv)?;
    write_atomic(&summary_path(out), &to_json(&report))?;
    Ok(())
}

/// Torus frequencies of a symmetric-pair instance; returns whether the
/// compactness inequality and the optional cross-check hold.
pub fn frequencies(opts: &RunOptions, crosscheck: bool) -> CliResult<bool> {
    let mut ctx = Context::new(opts)?;
    let inst = ctx.inst.clone();
    let sys = EpsSystem::new(&inst.alg, &inst.metric, &inst.dist)?;
    let given_state = ctx.cfg().initial.state.is_some();
    let x0 = ctx.initial_state(sys.manifold())?;
    let cfg = ctx.integrator();
    let torus_spec = ctx.cfg().torus.clone();
    let setup = pair_setup(&ctx)?;
    let d = setup.parts().d.clone();
    let xi0 = d.project(&x0);
    let mut tolerances = BTreeMap::from([("compactness_margin".to_string(), 0.0)]);
    if crosscheck {
        tolerances.insert("crosscheck".into(), CROSSCHECK_TOL);
    }
    let built = match torus_spec.as_ref().and_then(|t| t.levels.clone()) {
        Some(levels) => {
            let sign = torus_spec.as_ref().and_then(|t| t.sign).unwrap_or(1.0);
            TorusData::new(&setup, levels, sign)
        }
        None => TorusData::from_state(&setup, &xi0),
    };
    let torus = match built {
        Ok(t) => t,
        Err(Error::CompactnessViolated(margin)) => {
            let report = json!({
                "config_hash": ctx.loaded.hash,
                "tolerances": tolerances,
                "compactness_margin": margin,
                "error": "compactness inequality violated",
            });
            emit(opts.out.as_deref(), &to_json(&report))?;
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = torus.report();
    let mut passed = true;
    if crosscheck {
        let start = if given_state && torus_spec.as_ref().is_none_or(|t| t.levels.is_none()) {
            xi0
        } else {
            torus.point(&setup, &vec![0.0; torus.genus()])
        };
        let reduced = setup.reduced_field();
        let traj = integrate(&reduced, &start, &cfg.with_projection(false), None, &[])?;
        let rot = rotation_numbers(&torus, &setup, &traj);
        let first = rot.first().copied().unwrap_or(1.0);
        let ratios: Vec<f64> = rot.iter().map(|r| r / first).collect();
        let err = ratios
            .iter()
            .zip(&report.frequency_ratios)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        passed = err <= CROSSCHECK_TOL;
        report.rotation_ratios = Some(ratios);
        report.crosscheck_error = Some(err);
    }
    let mut value = serde_json::to_value(&report).expect("serializable report");
    let obj = value.as_object_mut().expect("report is an object");
    obj.insert("config_hash".into(), json!(ctx.loaded.hash));
    obj.insert("tolerances".into(), json!(tolerances));
    obj.insert("genus".into(), json!(torus.genus()));
    emit(opts.out.as_deref(), &to_json(&value))?;
    Ok(passed)
}

use nalgebra::DMatrix;

use crate::algebra::{AlgElement, LieAlgebraModel, Subspace};
use crate::dynamics::{Monitor, VectorField};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{make_block_metric, MetricOperator, PRESERVE_TOL};

/// Tolerance for the bracket inclusions of a symmetric pair.
pub const PAIR_TOL: f64 = 1e-12;

/// Worst leakage of each of `[H,H] ⊂ H`, `[H,V] ⊂ V`, `[V,V] ⊂ H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResiduals {
    pub hh: f64,
    pub hv: f64,
    pub vv: f64,
}

impl PairResiduals {
    pub fn max(&self) -> f64 {
        self.hh.max(self.hv).max(self.vv)
    }

    pub fn is_pair(&self) -> bool {
        self.max() < PAIR_TOL
    }
}

fn leakage(alg: &LieAlgebraModel, a: &Subspace, b: &Subspace, target: &Subspace) -> f64 {
    let mut worst: f64 = 0.0;
    for u in a.basis() {
        for v in b.basis() {
            worst = worst.max(target.distance(&alg.bracket(u, v)));
        }
    }
    worst
}

pub fn check_symmetric_pair(alg: &LieAlgebraModel, h: &Subspace) -> PairResiduals {
    let v = h.complement();
    PairResiduals {
        hh: leakage(alg, h, h, h),
        hv: leakage(alg, h, &v, &v),
        vv: leakage(alg, &v, &v, h),
    }
}

/// Rotation-invariant pieces of `V` under an abelian `K`.
#[derive(Debug, Clone)]
pub struct IsotypicBlocks {
    /// Joint kernel of `ad_eta`, `eta ∈ K`.
    pub v0: Subspace,
    /// Two-dimensional blocks, ordered by increasing frequency.
    pub blocks: Vec<Subspace>,
    pub frequencies: Vec<f64>,
}

fn generic_element(k: &Subspace) -> AlgElement {
    // irrational weights keep distinct characters from colliding
    let mut eta = AlgElement::zeros(k.ambient());
    for (i, b) in k.basis().iter().enumerate() {
        eta.axpy(1.0 + (i as f64) * std::f64::consts::SQRT_2, b, 1.0);
    }
    eta
}

/// Splits `V` into `V_0 = ker ad_K` and two-dimensional eigen-blocks of the
/// skew operator `ad_eta|_V` for a generic `eta ∈ K`.
pub fn isotypic_decomposition(alg: &LieAlgebraModel, k: &Subspace, v: &Subspace) -> Result<IsotypicBlocks> {
    let abelian = leakage(alg, k, k, &Subspace::zero(alg.dim()));
    if abelian > PAIR_TOL {
        return Err(Error::Unsupported(format!(
            "isotypic decomposition needs an abelian K (commutator norm {abelian:.3e})"
        )));
    }
    for b in k.basis() {
        for w in v.basis() {
            if v.distance(&alg.bracket(b, w)) > 1e-10 {
                return Err(Error::Precondition("ad_K does not preserve V".into()));
            }
        }
    }
    if v.dim() == 0 {
        return Ok(IsotypicBlocks {
            v0: v.clone(),
            blocks: vec![],
            frequencies: vec![],
        });
    }
    let q = v.basis_matrix();
    let s = q.transpose() * alg.ad(&generic_element(k)) * &q;
    let neg_sq = linalg::symmetrize(&(-(&s * &s)));
    let (vals, vecs) = linalg::sorted_eigen(&neg_sq);
    let scale = vals.last().copied().unwrap_or(0.0).abs().max(1.0);
    let tol = 1e-9 * scale;

    let mut v0_vecs = Vec::new();
    let mut clusters: Vec<(f64, Vec<AlgElement>)> = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        let u = vecs.column(i).into_owned();
        if lam.abs() <= tol {
            v0_vecs.push(u);
            continue;
        }
        match clusters.last_mut() {
            Some((l, members)) if (lam - *l).abs() <= tol => members.push(u),
            _ => clusters.push((lam, vec![u])),
        }
    }
    let v0 = Subspace::new(alg.dim(), &v0_vecs.iter().map(|c| &q * c).collect::<Vec<_>>());

    let mut blocks = Vec::new();
    let mut frequencies = Vec::new();
    for (lam, members) in clusters {
        let space = Subspace::new(v.dim(), &members);
        let mut taken = Subspace::zero(v.dim());
        // candidate vectors in V-basis order give a reproducible split of repeated frequencies
        for i in 0..v.dim() {
            if taken.dim() == space.dim() {
                break;
            }
            let c = space.project(&linalg::unit(v.dim(), i));
            let c = &c - taken.project(&c);
            if c.norm() < 1e-6 {
                continue;
            }
            let c = c.normalize();
            let sc = &s * &c;
            let block = Subspace::new(v.dim(), &[c, sc]);
            taken = taken.sum(&block);
            let ambient: Vec<AlgElement> = block.basis().iter().map(|b| &q * b).collect();
            blocks.push(Subspace::new(alg.dim(), &ambient));
            frequencies.push(lam.sqrt());
        }
        if taken.dim() != space.dim() {
            return Err(Error::Precondition("eigen-block split did not exhaust a frequency cluster".into()));
        }
    }
    Ok(IsotypicBlocks {
        v0,
        blocks,
        frequencies,
    })
}

/// The subspaces of a symmetric-pair integrable instance: `G = H + V`, `K ⊂ H`,
/// `D = U + W_0 + W_1 + ... + W_n` with `U = D ∩ K` and `W_k = D ∩ V_k`.
#[derive(Debug, Clone)]
pub struct PairDecomposition {
    pub h: Subspace,
    pub v: Subspace,
    pub k: Subspace,
    pub d: Subspace,
    pub l: Subspace,
    pub u: Subspace,
    pub w0: Subspace,
    /// Nonzero `W_k`, `k = 1..n`.
    pub w: Vec<Subspace>,
    /// The `V_k` the `W_k` came from.
    pub v_blocks: Vec<Subspace>,
}

fn meet(d: &Subspace, v: &Subspace) -> Subspace {
    if d.contains_subspace(v, 1e-10) {
        v.clone()
    } else {
        d.intersection(v)
    }
}

impl PairDecomposition {
    pub fn new(alg: &LieAlgebraModel, h: &Subspace, k: &Subspace, d: &Subspace) -> Result<Self> {
        let pr = check_symmetric_pair(alg, h);
        if !pr.is_pair() {
            return Err(Error::Precondition(format!(
                "(G, H) is not a symmetric pair (residual {:.3e})",
                pr.max()
            )));
        }
        if !h.contains_subspace(k, 1e-12) {
            return Err(Error::Precondition("K is not contained in H".into()));
        }
        let v = h.complement();
        let iso = isotypic_decomposition(alg, k, &v)?;
        let u = meet(d, k);
        if u.dim() == 0 {
            return Err(Error::Precondition("U = D ∩ K is trivial (H lies in L)".into()));
        }
        let w0 = meet(d, &iso.v0);
        let mut w = Vec::new();
        let mut v_blocks = Vec::new();
        for b in &iso.blocks {
            let wk = meet(d, b);
            if wk.dim() > 0 {
                w.push(wk);
                v_blocks.push(b.clone());
            }
        }
        let total = u.dim() + w0.dim() + w.iter().map(Subspace::dim).sum::<usize>();
        if total != d.dim() {
            return Err(Error::Precondition(format!(
                "D is not adapted: U + W_0 + ... + W_n has dimension {total}, D has {}",
                d.dim()
            )));
        }
        Ok(Self {
            h: h.clone(),
            v,
            k: k.clone(),
            d: d.clone(),
            l: d.complement(),
            u,
            w0,
            w,
            v_blocks,
        })
    }

    /// `A = s Id_U + A_{W_0} + (B_1 + s Id) + ... + A_L`, blocks given in the
    /// bases of the respective subspaces.
    pub fn metric(&self, s: f64, a_w0: &DMatrix<f64>, b: &[DMatrix<f64>], a_l: &DMatrix<f64>) -> Result<MetricOperator> {
        if b.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                found: b.len(),
            });
        }
        let mut decomp = vec![self.u.clone()];
        let mut blocks = vec![DMatrix::identity(self.u.dim(), self.u.dim()) * s];
        if self.w0.dim() > 0 {
            decomp.push(self.w0.clone());
            blocks.push(a_w0.clone());
        }
        for (wk, bk) in self.w.iter().zip(b) {
            decomp.push(wk.clone());
            blocks.push(bk + DMatrix::identity(wk.dim(), wk.dim()) * s);
        }
        if self.l.dim() > 0 {
            decomp.push(self.l.clone());
            blocks.push(a_l.clone());
        }
        make_block_metric(&decomp, &blocks)
    }
}

/// A symmetric-pair decomposition together with a metric satisfying the
/// hypotheses under which the split integrals exist.
#[derive(Debug, Clone)]
pub struct SymmetricPairSetup<'a> {
    alg: &'a LieAlgebraModel,
    parts: PairDecomposition,
    metric: MetricOperator,
    s: f64,
    b: Vec<DMatrix<f64>>,
}

impl<'a> SymmetricPairSetup<'a> {
    pub fn new(alg: &'a LieAlgebraModel, parts: PairDecomposition, metric: MetricOperator) -> Result<Self> {
        let scale = metric.matrix().norm().max(1.0);
        let mut pieces = vec![&parts.d, &parts.u, &parts.w0];
        pieces.extend(parts.w.iter());
        for p in pieces {
            let defect = metric.preservation_defect(p);
            if defect > PRESERVE_TOL * scale {
                return Err(Error::NotPreserved(defect));
            }
        }
        let au = metric.restrict(&parts.u)?;
        let s = au.trace() / parts.u.dim() as f64;
        let off = (&au - DMatrix::identity(parts.u.dim(), parts.u.dim()) * s).norm();
        if off > PRESERVE_TOL * scale {
            return Err(Error::Precondition(format!("A_D is not scalar on U (defect {off:.3e})")));
        }
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
        }
        let mut b = Vec::with_capacity(parts.w.len());
        for wk in &parts.w {
            b.push(metric.restrict(wk)? - DMatrix::identity(wk.dim(), wk.dim()) * s);
        }
        Ok(Self {
            alg,
            parts,
            metric,
            s,
            b,
        })
    }

    pub fn algebra(&self) -> &'a LieAlgebraModel {
        self.alg
    }

    pub fn parts(&self) -> &PairDecomposition {
        &self.parts
    }

    pub fn metric(&self) -> &MetricOperator {
        &self.metric
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `B_{W_k}` in the basis of `W_k`.
    pub fn b_blocks(&self) -> &[DMatrix<f64>] {
        &self.b
    }

    /// The reduced field `xi' = [xi, A_D xi]_D`.
    pub fn reduced_field(&self) -> ReducedField<'a> {
        ReducedField::new(self.alg, &self.parts.d, &self.metric)
    }

    fn b_apply(&self, k: usize, x: &AlgElement) -> AlgElement {
        let wk = &self.parts.w[k];
        wk.embed(&(&self.b[k] * wk.coords(x)))
    }
}

/// The split-metric reduced field `xi' = P_D [xi, A xi]`.
#[derive(Debug, Clone)]
pub struct ReducedField<'a> {
    alg: &'a LieAlgebraModel,
    d: Subspace,
    metric: MetricOperator,
}

impl<'a> ReducedField<'a> {
    pub fn new(alg: &'a LieAlgebraModel, d: &Subspace, metric: &MetricOperator) -> Self {
        Self {
            alg,
            d: d.clone(),
            metric: metric.clone(),
        }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.d
    }

    pub fn field(&self, xi: &AlgElement) -> AlgElement {
        self.d.project(&self.alg.bracket(xi, &self.metric.apply(xi)))
    }
}

impl VectorField for ReducedField<'_> {
    fn dim(&self) -> usize {
        self.alg.dim()
    }

    fn eval(&self, x: &AlgElement) -> Result<AlgElement> {
        self.alg.check_element(x)?;
        Ok(self.field(x))
    }
}

/// Values of the first integrals `H_D`, `F`, `F_0`, `F_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairIntegrals {
    pub h_d: f64,
    pub f: f64,
    /// Coordinates of `xi_{W_0}` in the basis of `W_0`.
    pub f0: Vec<f64>,
    pub fk: Vec<f64>,
}

pub fn pair_integrals(setup: &SymmetricPairSetup, xi: &AlgElement) -> PairIntegrals {
    let p = setup.parts();
    let fk = p
        .w
        .iter()
        .enumerate()
        .map(|(k, wk)| {
            let c = wk.coords(xi);
            c.dot(&(&setup.b[k] * &c))
        })
        .collect();
    PairIntegrals {
        h_d: setup.metric.energy(xi),
        f: xi.norm_squared(),
        f0: p.w0.coords(xi).iter().copied().collect(),
        fk,
    }
}

/// Integration monitors `H_D`, `F`, `F0_i`, `F_k`.
pub fn pair_monitors<'s>(setup: &'s SymmetricPairSetup) -> Vec<Monitor<'s>> {
    let mut out = vec![
        Monitor::new("H_D", move |x: &AlgElement| setup.metric.energy(x)),
        Monitor::new("F", |x: &AlgElement| x.norm_squared()),
    ];
    for (i, e) in setup.parts.w0.basis().iter().enumerate() {
        out.push(Monitor::new(format!("F0_{}", i + 1), move |x: &AlgElement| x.dot(e)));
    }
    for k in 0..setup.parts.w.len() {
        out.push(Monitor::new(format!("F_{}", k + 1), move |x: &AlgElement| {
            let wk = &setup.parts.w[k];
            let c = wk.coords(x);
            c.dot(&(&setup.b[k] * &c))
        }));
    }
    out
}

/// Right-hand sides of the split equations.
#[derive(Debug, Clone)]
pub struct SplitRates {
    pub u: AlgElement,
    pub w0: AlgElement,
    pub wk: Vec<AlgElement>,
}

impl SplitRates {
    pub fn recombine(&self) -> AlgElement {
        let mut total = &self.u + &self.w0;
        for w in &self.wk {
            total += w;
        }
        total
    }
}

pub fn split_equations(setup: &SymmetricPairSetup, xi: &AlgElement) -> SplitRates {
    let p = setup.parts();
    let alg = setup.alg;
    let xi_u = p.u.project(xi);
    let xi_w = xi - &xi_u;
    let u = p.u.project(&alg.bracket(&xi_w, &setup.metric.apply(&xi_w)));
    let wk = (0..p.w.len())
        .map(|k| {
            let xk = p.w[k].project(xi);
            p.w[k].project(&alg.bracket(&xi_u, &setup.b_apply(k, &xk)))
        })
        .collect();
    SplitRates {
        u,
        w0: AlgElement::zeros(xi.len()),
        wk,
    }
}

//! Cochains `Gⁿ → U` and `Gⁿ → 𝔲`, coboundaries, defects and the averaging
//! homotopies.
//!
//! On a finite group a cochain is a full table indexed row-major by the
//! tuple `(s₁, …, sₙ)`. On a Lie group it is a pure evaluator; group-valued
//! iterates additionally memoize their values under the quantized element
//! key and always evaluate at the canonical representative of that key, so
//! cached and uncached results agree bit for bit.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{tuple_label, CompactGroup, GroupElement, HaarScheme};
use crate::linalg::Matrix;
use crate::rng::SeededStream;
use crate::target::{GAction, TargetGroup, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSpace {
    Group,
    Algebra,
}

/// The fixed data every cochain of a computation shares.
#[derive(Debug)]
pub struct Context {
    pub group: CompactGroup,
    pub target: TargetGroup,
    pub action: GAction,
}

impl Context {
    pub fn new(group: CompactGroup, target: TargetGroup, action: GAction) -> Result<Arc<Context>> {
        action.validate(&group, &target)?;
        Ok(Arc::new(Context {
            group,
            target,
            action,
        }))
    }
}

pub type Evaluator = Arc<dyn Fn(&[GroupElement]) -> Result<Value> + Send + Sync>;

type Memo = Arc<RwLock<HashMap<Vec<i64>, Value>>>;

#[derive(Clone)]
enum Body {
    Table(Arc<Vec<Value>>),
    Lazy { eval: Evaluator, memo: Option<Memo> },
}

#[derive(Clone)]
pub struct Cochain {
    arity: usize,
    space: ValueSpace,
    ctx: Arc<Context>,
    body: Body,
}

impl fmt::Debug for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = match &self.body {
            Body::Table(t) => format!("table of {}", t.len()),
            Body::Lazy { memo, .. } => format!("evaluator (memo: {})", memo.is_some()),
        };
        f.debug_struct("Cochain")
            .field("arity", &self.arity)
            .field("space", &self.space)
            .field("target", &self.ctx.target)
            .field("body", &body)
            .finish()
    }
}

/// Row-major index of a tuple of finite-group elements.
fn tuple_index(order: usize, tuple: &[GroupElement]) -> usize {
    tuple
        .iter()
        .fold(0, |acc, s| acc * order + s.index().expect("finite element"))
}

/// All `len`-tuples of `0..order` in row-major order.
pub fn all_tuples(order: usize, len: usize) -> impl Iterator<Item = Vec<GroupElement>> {
    let total = order.pow(len as u32);
    (0..total).map(move |mut k| {
        let mut t = vec![GroupElement::Finite(0); len];
        for slot in t.iter_mut().rev() {
            *slot = GroupElement::Finite(k % order);
            k /= order;
        }
        t
    })
}

impl Cochain {
    /// A tabulated cochain on a finite group.
    pub fn from_table(
        ctx: Arc<Context>,
        arity: usize,
        space: ValueSpace,
        values: Vec<Value>,
    ) -> Result<Cochain> {
        let order = ctx
            .group
            .order()
            .ok_or_else(|| Error::KindMismatch("tables need a finite group".into()))?;
        let want = order.pow(arity as u32);
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "a {arity}-cochain on a group of order {order} needs {want} values, got {}",
                values.len()
            )));
        }
        for (k, v) in values.iter().enumerate() {
            let check = match space {
                ValueSpace::Group => ctx.target.check_point(v),
                ValueSpace::Algebra => ctx.target.check_shape(v),
            };
            check.map_err(|e| Error::Invalid(format!("value {k}: {e}")))?;
        }
        Ok(Cochain {
            arity,
            space,
            ctx,
            body: Body::Table(Arc::new(values)),
        })
    }

    /// An evaluator-backed cochain. With `memoize` the evaluator only ever
    /// sees canonical tuples and each result is computed once.
    pub fn lazy(
        ctx: Arc<Context>,
        arity: usize,
        space: ValueSpace,
        memoize: bool,
        eval: impl Fn(&[GroupElement]) -> Result<Value> + Send + Sync + 'static,
    ) -> Cochain {
        let memo = memoize.then(|| Arc::new(RwLock::new(HashMap::new())));
        Cochain {
            arity,
            space,
            ctx,
            body: Body::Lazy {
                eval: Arc::new(eval),
                memo,
            },
        }
    }

    pub fn constant(ctx: Arc<Context>, arity: usize, space: ValueSpace, value: Value) -> Cochain {
        Cochain::lazy(ctx, arity, space, false, move |_| Ok(value.clone()))
            .settle()
            .expect("constant")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn group(&self) -> &CompactGroup {
        &self.ctx.group
    }

    pub fn target(&self) -> &TargetGroup {
        &self.ctx.target
    }

    pub fn action(&self) -> &GAction {
        &self.ctx.action
    }

    pub fn table(&self) -> Option<&[Value]> {
        match &self.body {
            Body::Table(t) => Some(t),
            Body::Lazy { .. } => None,
        }
    }

    /// Number of memoized values (0 for tables and unmemoized evaluators).
    pub fn memo_len(&self) -> usize {
        match &self.body {
            Body::Lazy { memo: Some(m), .. } => m.read().expect("memo lock").len(),
            _ => 0,
        }
    }

    /// The same cochain with its memo cache detached and empty.
    pub fn without_cache(&self) -> Cochain {
        match &self.body {
            Body::Lazy { eval, .. } => Cochain {
                body: Body::Lazy {
                    eval: eval.clone(),
                    memo: None,
                },
                ..self.clone()
            },
            Body::Table(_) => self.clone(),
        }
    }

    pub fn eval(&self, tuple: &[GroupElement]) -> Result<Value> {
        if tuple.len() != self.arity {
            return Err(Error::Dimension(format!(
                "{}-cochain evaluated at a {}-tuple",
                self.arity,
                tuple.len()
            )));
        }
        for s in tuple {
            self.ctx.group.validate(s)?;
        }
        match &self.body {
            Body::Table(t) => {
                let order = self
                    .ctx
                    .group
                    .order()
                    .expect("tables live on finite groups");
                Ok(t[tuple_index(order, tuple)].clone())
            }
            Body::Lazy { eval, memo: None } => {
                if self.ctx.group.is_finite() {
                    eval(tuple)
                } else {
                    let snapped: Vec<GroupElement> =
                        tuple.iter().map(|s| self.ctx.group.snap(s)).collect();
                    eval(&snapped)
                }
            }
            Body::Lazy {
                eval,
                memo: Some(memo),
            } => {
                let g = &self.ctx.group;
                let mut key = Vec::new();
                let mut canonical = Vec::with_capacity(tuple.len());
                for s in tuple {
                    let k = g.key(s);
                    canonical.push(g.from_key(&k));
                    key.extend(k);
                }
                if let Some(v) = memo.read().expect("memo lock").get(&key) {
                    return Ok(v.clone());
                }
                let v = eval(&canonical)?;
                memo.write()
                    .expect("memo lock")
                    .entry(key)
                    .or_insert_with(|| v.clone());
                Ok(v)
            }
        }
    }

    /// Tabulates on finite groups; Lie-group cochains are returned as is.
    pub fn settle(self) -> Result<Cochain> {
        let Some(order) = self.ctx.group.order() else {
            return Ok(self);
        };
        if matches!(self.body, Body::Table(_)) {
            return Ok(self);
        }
        let values = all_tuples(order, self.arity)
            .map(|t| self.eval(&t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cochain {
            body: Body::Table(Arc::new(values)),
            ..self
        })
    }

    fn derived(
        &self,
        arity: usize,
        space: ValueSpace,
        memoize: bool,
        eval: impl Fn(&[GroupElement]) -> Result<Value> + Send + Sync + 'static,
    ) -> Result<Cochain> {
        let memoize = memoize && !self.ctx.group.is_finite();
        Cochain::lazy(self.ctx.clone(), arity, space, memoize, eval).settle()
    }

    /// Applies `f` pointwise, keeping arity.
    pub fn map(
        &self,
        space: ValueSpace,
        memoize: bool,
        f: impl Fn(&[GroupElement], Value) -> Result<Value> + Send + Sync + 'static,
    ) -> Result<Cochain> {
        let src = self.clone();
        self.derived(self.arity, space, memoize, move |t| f(t, src.eval(t)?))
    }
}

/// Tuples on which sup norms are estimated.
#[derive(Clone, Debug)]
pub struct EvaluationSet {
    pub tuples: Vec<Vec<GroupElement>>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exhaustive,
    NodesPlusRandom {
        node_tuples: usize,
        node_tuples_total: usize,
        random: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Seeded Haar-random tuples added for Lie groups.
    pub random_tuples: usize,
    /// Node tuples beyond this count are subsampled (seeded).
    pub max_node_tuples: usize,
    /// Set from the scenario's perturbation seed; reports carry it at top level.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            random_tuples: 256,
            max_node_tuples: 4096,
            seed: 0,
        }
    }
}

impl EvaluationSet {
    /// Exhaustive for finite groups; for Lie groups all node tuples of the
    /// Haar scheme (seeded subsample above the cap) followed by random tuples.
    pub fn build(group: &CompactGroup, len: usize, cfg: &EvalConfig) -> EvaluationSet {
        if let Some(order) = group.order() {
            return EvaluationSet {
                tuples: all_tuples(order, len).collect(),
                provenance: Provenance::Exhaustive,
            };
        }
        let nodes: Vec<GroupElement> = group
            .haar_scheme()
            .nodes
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        let total = nodes.len().saturating_pow(len as u32);
        let decode = |mut k: usize| {
            let mut t = vec![GroupElement::Finite(0); len];
            for slot in t.iter_mut().rev() {
                *slot = nodes[k % nodes.len()].clone();
                k /= nodes.len();
            }
            t
        };
        let mut rng = SeededStream::new(cfg.seed, 0xe7a1);
        let mut tuples: Vec<Vec<GroupElement>> = if total <= cfg.max_node_tuples {
            (0..total).map(decode).collect()
        } else {
            // Floyd's algorithm for a uniform subset, kept in index order.
            let mut chosen = std::collections::BTreeSet::new();
            for j in total - cfg.max_node_tuples..total {
                let r = (rng.uniform() * (j + 1) as f64) as usize % (j + 1);
                if !chosen.insert(r) {
                    chosen.insert(j);
                }
            }
            chosen.into_iter().map(decode).collect()
        };
        let node_tuples = tuples.len();
        for _ in 0..cfg.random_tuples {
            tuples.push((0..len).map(|_| group.sample(&mut rng)).collect());
        }
        EvaluationSet {
            tuples,
            provenance: Provenance::NodesPlusRandom {
                node_tuples,
                node_tuples_total: total,
                random: cfg.random_tuples,
                seed: cfg.seed,
            },
        }
    }

    /// The distinct elements occurring in the tuples, in first-seen order.
    pub fn elements(&self, group: &CompactGroup) -> Vec<GroupElement> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for t in &self.tuples {
            for s in t {
                if seen.insert(group.key(s)) {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// The distinct `len`-prefixes of the tuples (for measuring a cochain
    /// of arity `len` on the points its coboundary touched).
    pub fn prefixes(&self, group: &CompactGroup, len: usize) -> Vec<Vec<GroupElement>> {
        if let Some(order) = group.order() {
            return all_tuples(order, len).collect();
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for t in &self.tuples {
            let p = t[..len.min(t.len())].to_vec();
            let key: Vec<i64> = p.iter().flat_map(|s| group.key(s)).collect();
            if seen.insert(key) {
                out.push(p);
            }
        }
        out
    }
}

fn require_group_valued(rho: &Cochain) -> Result<()> {
    if rho.space != ValueSpace::Group {
        return Err(Error::KindMismatch(
            "expected a group-valued cochain".into(),
        ));
    }
    Ok(())
}

fn require_abelian(c: &Cochain, what: &str) -> Result<()> {
    if !c.target().is_abelian() {
        return Err(Error::NonAbelian(what.into()));
    }
    Ok(())
}

fn require_arity(c: &Cochain, n: usize) -> Result<()> {
    if c.arity != n {
        return Err(Error::Dimension(format!(
            "expected a {n}-cochain, got a {}-cochain",
            c.arity
        )));
    }
    Ok(())
}

/// The alternating sum
/// `δρ(s₀,…,sₙ) = ˢ⁰ρ(s₁,…,sₙ) + Σᵢ (−1)ⁱ ρ(…, sᵢ₋₁sᵢ, …) + (−1)ⁿ⁺¹ ρ(s₀,…,sₙ₋₁)`
/// on an abelian target; works for group- and algebra-valued cochains.
fn abelian_coboundary_at(rho: &Cochain, t: &[GroupElement]) -> Result<Value> {
    let g = rho.group();
    let n = rho.arity;
    let mut acc = rho.action().act(&t[0], &rho.eval(&t[1..])?);
    let mut sign = -1.0;
    for i in 1..=n {
        let mut merged = Vec::with_capacity(n);
        merged.extend_from_slice(&t[..i - 1]);
        merged.push(g.mul(&t[i - 1], &t[i])?);
        merged.extend_from_slice(&t[i + 1..]);
        acc.axpy(sign, &rho.eval(&merged)?);
        sign = -sign;
    }
    acc.axpy(sign, &rho.eval(&t[..n])?);
    Ok(acc)
}

/// `δρ` at one tuple: abelian alternating sum, or the non-abelian forms
/// `δx(s) = x⁻¹·ˢx` and `δρ(s, t) = ρ(s)·ˢρ(t)·ρ(st)⁻¹`.
pub fn coboundary_at(rho: &Cochain, t: &[GroupElement]) -> Result<Value> {
    if rho.target().is_abelian() {
        return abelian_coboundary_at(rho, t);
    }
    require_group_valued(rho)?;
    let target = rho.target();
    match rho.arity {
        0 => {
            let x = rho.eval(&[])?;
            Ok(target.mul(&target.inv(&x)?, &rho.action().act(&t[0], &x)))
        }
        1 => {
            let st = rho.group().mul(&t[0], &t[1])?;
            let lhs = target.mul(
                &rho.eval(&t[..1])?,
                &rho.action().act(&t[0], &rho.eval(&t[1..])?),
            );
            Ok(target.mul(&lhs, &target.inv(&rho.eval(&[st])?)?))
        }
        n => Err(Error::NonAbelian(format!("a {n}-cochain coboundary"))),
    }
}

pub fn coboundary(rho: &Cochain) -> Result<Cochain> {
    if !rho.target().is_abelian() {
        require_group_valued(rho)?;
        if rho.arity >= 2 {
            return Err(Error::NonAbelian(format!(
                "a {}-cochain coboundary",
                rho.arity
            )));
        }
    }
    let src = rho.clone();
    rho.derived(rho.arity + 1, rho.space, false, move |t| {
        coboundary_at(&src, t)
    })
}

/// `‖log δρ‖` at one tuple, chart failures tagged with the tuple.
fn defect_at(rho: &Cochain, t: &[GroupElement]) -> Result<f64> {
    let d = coboundary_at(rho, t)?;
    let x = rho.target().log(&d).map_err(|e| Error::Chart {
        tuple: tuple_label(t),
        source: Box::new(e),
    })?;
    Ok(x.norm())
}

/// Sup over the evaluation set of `‖log δρ‖` (matrix targets) or `‖δρ‖`
/// (abelian), with the first tuple attaining it.
pub fn defect(rho: &Cochain, eval: &EvaluationSet) -> Result<(f64, Vec<GroupElement>)> {
    require_group_valued(rho)?;
    sup_over(&eval.tuples, |t| defect_at(rho, t))
}

fn sup_over(
    tuples: &[Vec<GroupElement>],
    f: impl Fn(&[GroupElement]) -> Result<f64>,
) -> Result<(f64, Vec<GroupElement>)> {
    let mut best = (0.0, tuples.first().cloned().unwrap_or_default());
    for t in tuples {
        let v = f(t)?;
        if v > best.0 || v.is_nan() {
            best = (v, t.clone());
        }
    }
    Ok(best)
}

/// `β(s, t) = log(ρ(s)·ˢρ(t)·ρ(st)⁻¹)`.
pub fn beta_of(rho: &Cochain) -> Result<Cochain> {
    require_group_valued(rho)?;
    require_arity(rho, 1)?;
    let src = rho.clone();
    rho.derived(2, ValueSpace::Algebra, false, move |t| {
        let d = coboundary_at(&src, t)?;
        src.target().log(&d).map_err(|e| Error::Chart {
            tuple: tuple_label(t),
            source: Box::new(e),
        })
    })
}

/// `s ▷ x = ρ(s)·ˢx·ρ(s)⁻¹`: the adjoint action of `ρ(s)` composed with the
/// induced action on the algebra. On abelian targets it is just `ˢx`.
pub fn almost_action(rho: &Cochain, s: &GroupElement, x: &Value) -> Result<Value> {
    let twisted = rho.action().act_alg(s, x);
    match (&twisted, rho.eval(std::slice::from_ref(s))?) {
        (Value::Matrix(y), Value::Matrix(r)) => {
            let rinv = rho.target().matrix_inverse(&r)?;
            Ok(Value::Matrix(&(&r * y) * &rinv))
        }
        _ => Ok(twisted),
    }
}

/// `δ▷β(s, t, u) = s▷β(t, u) − β(st, u) + β(s, tu) − β(s, t)` at one triple.
pub fn twisted_coboundary2_at(beta: &Cochain, rho: &Cochain, t: &[GroupElement]) -> Result<Value> {
    let g = rho.group();
    let (s, t1, u) = (&t[0], &t[1], &t[2]);
    let mut acc = almost_action(rho, s, &beta.eval(&[t1.clone(), u.clone()])?)?;
    acc.axpy(-1.0, &beta.eval(&[g.mul(s, t1)?, u.clone()])?);
    acc.axpy(1.0, &beta.eval(&[s.clone(), g.mul(t1, u)?])?);
    acc.axpy(-1.0, &beta.eval(&[s.clone(), t1.clone()])?);
    Ok(acc)
}

/// `δ▷α(s, t) = s▷α(t) − α(st) + α(s)` at one pair.
pub fn twisted_coboundary1_at(alpha: &Cochain, rho: &Cochain, t: &[GroupElement]) -> Result<Value> {
    let st = rho.group().mul(&t[0], &t[1])?;
    let mut acc = almost_action(rho, &t[0], &alpha.eval(&t[1..2])?)?;
    acc.axpy(-1.0, &alpha.eval(&[st])?);
    acc.axpy(1.0, &alpha.eval(&t[..1])?);
    Ok(acc)
}

/// Sup over triples of `‖δ▷β‖`.
pub fn twisted_cocycle_defect(beta: &Cochain, rho: &Cochain, eval: &EvaluationSet) -> Result<f64> {
    require_arity(beta, 2)?;
    require_arity(rho, 1)?;
    Ok(sup_over(&eval.tuples, |t| {
        Ok(twisted_coboundary2_at(beta, rho, t)?.norm())
    })?
    .0)
}

/// `α₁(t) = −Σ_s w_s · s▷β(s⁻¹, t)` over the Haar nodes.
pub fn homotopy_average(beta: &Cochain, rho: &Cochain, scheme: &HaarScheme) -> Result<Cochain> {
    require_arity(beta, 2)?;
    require_arity(rho, 1)?;
    let (b, r) = (beta.clone(), rho.clone());
    let nodes: Arc<Vec<(GroupElement, GroupElement, f64)>> = Arc::new(
        scheme
            .nodes
            .iter()
            .map(|(s, w)| Ok((s.clone(), rho.group().inv(s)?, *w)))
            .collect::<Result<_>>()?,
    );
    rho.derived(1, ValueSpace::Algebra, false, move |t| {
        let mut acc = r.target().zero_algebra();
        for (s, sinv, w) in nodes.iter() {
            let x = almost_action(&r, s, &b.eval(&[sinv.clone(), t[0].clone()])?)?;
            acc.axpy(-w, &x);
        }
        Ok(acc)
    })
}

/// `(hγ)(s₁,…,sₙ) = (−1)ⁿ⁺¹ Σ_u w_u γ(s₁,…,sₙ,u)` for abelian targets.
pub fn homotopy_last_slot(gamma: &Cochain, scheme: &HaarScheme) -> Result<Cochain> {
    require_abelian(gamma, "the last-slot homotopy")?;
    if gamma.arity == 0 {
        return Err(Error::Invalid(
            "the last-slot homotopy needs arity at least 1".into(),
        ));
    }
    let n = gamma.arity - 1;
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let src = gamma.clone();
    let nodes = Arc::new(scheme.nodes.clone());
    gamma.derived(n, ValueSpace::Algebra, false, move |t| {
        let mut acc = src.target().zero_algebra();
        let mut full = t.to_vec();
        full.push(GroupElement::Finite(0));
        for (u, w) in nodes.iter() {
            full[n] = u.clone();
            acc.axpy(sign * w, &src.eval(&full)?);
        }
        Ok(acc)
    })
}

/// Sup over pairs of `‖β₀ + δ▷α‖`: how far the accumulated correction is
/// from cancelling the initial defect.
pub fn near_coboundary_residual(
    beta0: &Cochain,
    rho: &Cochain,
    alpha: &Cochain,
    eval: &EvaluationSet,
) -> Result<f64> {
    Ok(sup_over(&eval.tuples, |t| {
        let mut v = twisted_coboundary1_at(alpha, rho, t)?;
        v.axpy(1.0, &beta0.eval(t)?);
        Ok(v.norm())
    })?
    .0)
}

/// `log(ρ'(t)·ρ(t)⁻¹)` (matrix) or `ρ'(t) − ρ(t)` (abelian), pointwise.
pub fn correction(rho_new: &Cochain, rho_old: &Cochain) -> Result<Cochain> {
    let (a, b) = (rho_new.clone(), rho_old.clone());
    rho_new.derived(rho_new.arity, ValueSpace::Algebra, false, move |t| {
        let target = a.target();
        let q = target.mul(&a.eval(t)?, &target.inv(&b.eval(t)?)?);
        target.log(&q)
    })
}

/// Encodes a value: matrices as rows of entries (numbers for real matrices,
/// `[re, im]` pairs otherwise), vectors as arrays of numbers.
pub fn value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Vector(x) => serde_json::json!(x),
        Value::Matrix(m) => matrix_to_json(m),
    }
}

pub fn matrix_to_json(m: &Matrix) -> serde_json::Value {
    let real = m.field() == crate::linalg::Field::Real;
    let rows: Vec<serde_json::Value> = (0..m.rows())
        .map(|i| {
            let row: Vec<serde_json::Value> = (0..m.cols())
                .map(|j| {
                    let z = m[(i, j)];
                    if real {
                        serde_json::json!(z.re)
                    } else {
                        serde_json::json!([z.re, z.im])
                    }
                })
                .collect();
            serde_json::Value::Array(row)
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Decodes a matrix from rows whose entries are numbers or `[re, im]` pairs.
pub fn matrix_from_json(v: &serde_json::Value) -> Result<Matrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Invalid("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut data = Vec::new();
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Invalid(format!("matrix row {i} is not an array")))?;
        if *cols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Invalid(format!(
                "matrix row {i} has a different length"
            )));
        }
        for (j, z) in row.iter().enumerate() {
            let entry = match z {
                serde_json::Value::Number(x) => {
                    x.as_f64().map(|re| crate::linalg::C64::new(re, 0.0))
                }
                serde_json::Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64())
                {
                    (Some(re), Some(im)) => Some(crate::linalg::C64::new(re, im)),
                    _ => None,
                },
                _ => None,
            };
            data.push(entry.ok_or_else(|| {
                Error::Invalid(format!(
                    "matrix entry ({i}, {j}) is not a number or [re, im]"
                ))
            })?);
        }
    }
    let cols = cols.unwrap_or(0);
    if n == 0 || cols == 0 {
        return Err(Error::Invalid("matrix must be non-empty".into()));
    }
    Matrix::new(n, cols, data)
}

pub fn value_from_json(target: &TargetGroup, v: &serde_json::Value) -> Result<Value> {
    match target {
        TargetGroup::Matrix { .. } => Ok(Value::Matrix(matrix_from_json(v)?)),
        TargetGroup::Abelian { .. } => {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::Invalid("vector must be an array".into()))?;
            let xs = arr
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Invalid("vector entries must be numbers".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::Vector(xs))
        }
    }
}

impl Cochain {
    /// `{"arity": n, "values": [...]}` with the row-major table.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let settled = self.clone().settle()?;
        let table = settled.table().ok_or_else(|| {
            Error::KindMismatch("only finite-group cochains serialize as tables".into())
        })?;
        Ok(serde_json::json!({
            "arity": self.arity,
            "values": table.iter().map(value_to_json).collect::<Vec<_>>(),
        }))
    }

    pub fn from_json(
        ctx: Arc<Context>,
        space: ValueSpace,
        v: &serde_json::Value,
    ) -> Result<Cochain> {
        let arity =
            v.get("arity").and_then(|a| a.as_u64()).ok_or_else(|| {
                Error::Invalid("field `arity`: expected a nonnegative integer".into())
            })? as usize;
        let values = v
            .get("values")
            .and_then(|a| a.as_array())
            .ok_or_else(|| Error::Invalid("field `values`: expected an array".into()))?;
        let values = values
            .iter()
            .enumerate()
            .map(|(k, x)| {
                value_from_json(&ctx.target, x)
                    .map_err(|e| Error::Invalid(format!("values[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Cochain::from_table(ctx, arity, space, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_cyclic, build_symmetric};
    use crate::linalg::Field;

    fn c2_line() -> Arc<Context> {
        Context::new(
            CompactGroup::Finite(build_cyclic(2).unwrap()),
            TargetGroup::abelian(1),
            GAction::Trivial,
        )
        .unwrap()
    }

    fn scalars(xs: &[f64]) -> Vec<Value> {
        xs.iter().map(|x| Value::Vector(vec![*x])).collect()
    }

    #[test]
    fn c2_nontrivial_two_cocycle_is_closed() {
        // ρ(g, g) = 1, else 0: δρ vanishes on all 8 triples.
        let rho = Cochain::from_table(
            c2_line(),
            2,
            ValueSpace::Group,
            scalars(&[0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let d = coboundary(&rho).unwrap();
        assert_eq!(d.arity(), 3);
        for v in d.table().unwrap() {
            assert_eq!(v, &Value::Vector(vec![0.0]));
        }
    }

    #[test]
    fn constant_abelian_cochain_has_defect_of_its_norm() {
        let ctx = c2_line();
        let rho = Cochain::constant(ctx.clone(), 1, ValueSpace::Group, Value::Vector(vec![-0.7]));
        let eval = EvaluationSet::build(&ctx.group, 2, &EvalConfig::default());
        assert_eq!(defect(&rho, &eval).unwrap().0, 0.7);
    }

    #[test]
    fn nonabelian_low_degree_coboundaries() {
        let g = CompactGroup::Finite(build_symmetric(3).unwrap());
        let ctx = Context::new(
            g,
            TargetGroup::general_linear(2, Field::Real),
            GAction::Trivial,
        )
        .unwrap();
        let x = Value::Matrix(Matrix::real(2, 2, &[2.0, 1.0, 0.5, 3.0]).unwrap());
        let zero = Cochain::constant(ctx.clone(), 0, ValueSpace::Group, x);
        for v in coboundary(&zero).unwrap().table().unwrap() {
            assert!(v.max_abs_diff(&Value::Matrix(Matrix::identity(2))) < 1e-15);
        }
        let one = Cochain::constant(
            ctx.clone(),
            1,
            ValueSpace::Group,
            Value::Matrix(Matrix::identity(2)),
        );
        for v in coboundary(&one).unwrap().table().unwrap() {
            assert_eq!(v, &Value::Matrix(Matrix::identity(2)));
        }
        let two = Cochain::constant(
            ctx,
            2,
            ValueSpace::Group,
            Value::Matrix(Matrix::identity(2)),
        );
        assert!(matches!(coboundary(&two), Err(Error::NonAbelian(_))));
    }

    #[test]
    fn sign_example_beta_and_average() {
        // ρ(g) = −e^{0.1} in GL₁(ℝ): β(g, g) = 0.2, α₁(g) = −0.1.
        let g = CompactGroup::Finite(build_cyclic(2).unwrap());
        let ctx = Context::new(
            g,
            TargetGroup::general_linear(1, Field::Real),
            GAction::Trivial,
        )
        .unwrap();
        let m = |x: f64| Value::Matrix(Matrix::real(1, 1, &[x]).unwrap());
        let rho = Cochain::from_table(
            ctx.clone(),
            1,
            ValueSpace::Group,
            vec![m(1.0), m(-(0.1f64).exp())],
        )
        .unwrap();
        let beta = beta_of(&rho).unwrap();
        let b = beta.table().unwrap();
        assert!(b[3].max_abs_diff(&m(0.2)) < 1e-14);
        for k in 0..3 {
            assert!(b[k].max_abs_diff(&m(0.0)) < 1e-15);
        }
        let alpha = homotopy_average(&beta, &rho, &ctx.group.haar_scheme()).unwrap();
        let a = alpha.table().unwrap();
        assert!(a[0].max_abs_diff(&m(0.0)) < 1e-15);
        assert!(a[1].max_abs_diff(&m(-0.1)) < 1e-14);
        let eval = EvaluationSet::build(&ctx.group, 2, &EvalConfig::default());
        assert!((defect(&rho, &eval).unwrap().0 - 0.2).abs() < 1e-14);
    }

    #[test]
    fn last_slot_hand_example() {
        // γ(s, t) = f(s) + f(t) − f(st), f(g) = 0.3.
        let gamma = Cochain::from_table(
            c2_line(),
            2,
            ValueSpace::Algebra,
            scalars(&[0.0, 0.0, 0.0, 0.6]),
        )
        .unwrap();
        let scheme = gamma.group().haar_scheme();
        let h = homotopy_last_slot(&gamma, &scheme).unwrap();
        assert_eq!(h.table().unwrap(), &scalars(&[0.0, 0.3])[..]);
        let dh = coboundary(&h).unwrap();
        for (a, b) in dh.table().unwrap().iter().zip(gamma.table().unwrap()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }

    #[test]
    fn json_roundtrip_and_arity_check() {
        let ctx = c2_line();
        let rho =
            Cochain::from_table(ctx.clone(), 1, ValueSpace::Group, scalars(&[0.5, -1.5])).unwrap();
        let j = rho.to_json().unwrap();
        let back = Cochain::from_json(ctx.clone(), ValueSpace::Group, &j).unwrap();
        assert_eq!(back.table(), rho.table());
        let bad = serde_json::json!({"arity": 2, "values": [[0.5], [-1.5]]});
        assert!(Cochain::from_json(ctx, ValueSpace::Group, &bad).is_err());
        let m = matrix_from_json(&serde_json::json!([[1, [0, 2]], [3.5, 4]])).unwrap();
        assert_eq!(m.field(), Field::Complex);
        assert_eq!(matrix_from_json(&matrix_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn lie_evaluation_sets() {
        let g = CompactGroup::U1 { nodes: 8 };
        let e = EvaluationSet::build(&g, 2, &EvalConfig::default());
        assert_eq!(e.tuples.len(), 64 + 256);
        let cfg = EvalConfig {
            max_node_tuples: 100,
            ..EvalConfig::default()
        };
        let e = EvaluationSet::build(&g, 3, &cfg);
        assert_eq!(e.tuples.len(), 100 + 256);
        assert!(matches!(
            e.provenance,
            Provenance::NodesPlusRandom {
                node_tuples: 100,
                node_tuples_total: 512,
                ..
            }
        ));
    }

    #[test]
    fn memoization_is_transparent() {
        let g = CompactGroup::U1 { nodes: 8 };
        let ctx = Context::new(g, TargetGroup::unitary(1), GAction::Trivial).unwrap();
        let rho = Cochain::lazy(ctx.clone(), 1, ValueSpace::Group, true, |t| {
            let GroupElement::Coords(c) = &t[0] else {
                unreachable!()
            };
            let z = crate::linalg::C64::new(0.0, 3.0 * c[0] + 0.01 * (5.0 * c[0]).sin()).exp();
            Ok(Value::Matrix(Matrix::scalar(z)))
        });
        let plain = rho.without_cache();
        let mut rng = SeededStream::new(1, 1);
        for _ in 0..50 {
            let s = ctx.group.sample(&mut rng);
            let a = rho.eval(std::slice::from_ref(&s)).unwrap();
            let b = rho.eval(std::slice::from_ref(&s)).unwrap();
            let c = plain.eval(std::slice::from_ref(&s)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
        assert_eq!(rho.memo_len(), 50);
    }
}

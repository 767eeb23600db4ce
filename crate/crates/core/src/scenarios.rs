//! Scenario files: ground-truth cocycles, seeded perturbations, sweeps and
//! the built-in templates.
//!
//! A scenario is a JSON document
//!
//! ```json
//! {"schema": 1, "group": {...}, "target": {...}, "action": ..., "base": {...},
//!  "perturbation": {"epsilon": e, "seed": s, "profile": p}, "settings": {...}}
//! ```
//!
//! whose fields are described on the types below and in the README.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cochain::{
    all_tuples, defect, value_from_json, Cochain, Context, EvaluationSet, ValueSpace,
};
use crate::error::{Error, Result};
use crate::groups::{
    build_cyclic, build_dihedral, build_from_cayley, build_quaternion8, build_symmetric,
    direct_product, permutations, su2_matrix, CompactGroup, FiniteGroup, GroupElement,
    Su2Resolution,
};
use crate::linalg::{Field, Matrix};
use crate::rectify::{rectify, Rectified, RectifySettings, Status};
use crate::rng::SeededStream;
use crate::target::{GAction, Representation, TargetGroup, Value};

/// Poisson-kernel radius of the built-in U(1) perturbation; its Fourier
/// coefficients decay like `rᵏ`, which sets the quadrature floor.
pub const POISSON_R: f64 = 0.65;
/// Number of kernel bumps in the U(1) perturbation.
const POISSON_TERMS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic {
        n: usize,
    },
    Dihedral {
        n: usize,
    },
    Symmetric {
        n: usize,
    },
    Quaternion8,
    Cayley {
        order: usize,
        table: Vec<Vec<usize>>,
    },
    Product {
        factors: Vec<GroupSpec>,
    },
    U1 {
        nodes: usize,
    },
    Su2 {
        #[serde(default = "default_su2_alpha")]
        alpha: usize,
        #[serde(default = "default_su2_beta")]
        beta: usize,
        #[serde(default = "default_su2_alpha")]
        gamma: usize,
    },
}

fn default_su2_alpha() -> usize {
    Su2Resolution::default().alpha
}

fn default_su2_beta() -> usize {
    Su2Resolution::default().beta
}

impl GroupSpec {
    pub fn build(&self) -> Result<CompactGroup> {
        Ok(match self {
            GroupSpec::Cyclic { n } => CompactGroup::Finite(build_cyclic(*n)?),
            GroupSpec::Dihedral { n } => CompactGroup::Finite(build_dihedral(*n)?),
            GroupSpec::Symmetric { n } => CompactGroup::Finite(build_symmetric(*n)?),
            GroupSpec::Quaternion8 => CompactGroup::Finite(build_quaternion8()?),
            GroupSpec::Cayley { order, table } => {
                if table.len() != *order {
                    return Err(Error::Invalid(format!(
                        "group.table has {} rows but group.order is {order}",
                        table.len()
                    )));
                }
                CompactGroup::Finite(build_from_cayley(table.clone())?)
            }
            GroupSpec::U1 { nodes } => {
                if *nodes == 0 {
                    return Err(Error::Invalid("group.nodes must be positive".into()));
                }
                CompactGroup::U1 { nodes: *nodes }
            }
            GroupSpec::Su2 { alpha, beta, gamma } => {
                if *alpha == 0 || *beta == 0 || *gamma == 0 {
                    return Err(Error::Invalid("SU(2) resolutions must be positive".into()));
                }
                CompactGroup::Su2(Su2Resolution {
                    alpha: *alpha,
                    beta: *beta,
                    gamma: *gamma,
                })
            }
            GroupSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::Invalid("group.factors must be non-empty".into()));
                }
                let built = factors
                    .iter()
                    .map(GroupSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                if built.iter().all(CompactGroup::is_finite) {
                    let mut it = built
                        .into_iter()
                        .map(|g| g.finite().cloned().expect("finite"));
                    let first = it.next().expect("non-empty");
                    CompactGroup::Finite(it.try_fold(first, |acc, g| direct_product(&acc, &g))?)
                } else {
                    CompactGroup::Product(built)
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    GeneralLinear {
        dim: usize,
        #[serde(default = "default_field")]
        field: Field,
    },
    Unitary {
        dim: usize,
    },
    Abelian {
        dim: usize,
    },
}

fn default_field() -> Field {
    Field::Real
}

impl TargetSpec {
    pub fn build(&self) -> Result<TargetGroup> {
        let t = match self {
            TargetSpec::GeneralLinear { dim, field } => TargetGroup::general_linear(*dim, *field),
            TargetSpec::Unitary { dim } => TargetGroup::unitary(*dim),
            TargetSpec::Abelian { dim } => TargetGroup::abelian(*dim),
        };
        if t.dim() == 0 || t.dim() > 16 {
            return Err(Error::Invalid(format!(
                "target.dim must lie in 1..=16, got {}",
                t.dim()
            )));
        }
        Ok(t)
    }
}

/// A homomorphism `G → GL_m`: a named built-in or explicit matrices, one
/// per finite-group element in index order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Character weights (`C_n` characters, U(1) characters and rotations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<serde_json::Value>>,
}

impl RepSpec {
    pub fn named(name: &str) -> RepSpec {
        RepSpec {
            name: Some(name.into()),
            ..RepSpec::default()
        }
    }

    pub fn build(&self, group: &CompactGroup, dim: usize) -> Result<Representation> {
        match (&self.name, &self.matrices) {
            (Some(name), None) => named_representation(group, name, self.weights.as_deref(), dim),
            (None, Some(mats)) => {
                if !group.is_finite() {
                    return Err(Error::Invalid(
                        "explicit matrices need a finite group".into(),
                    ));
                }
                let mats = mats
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        crate::cochain::matrix_from_json(m)
                            .map_err(|e| Error::Invalid(format!("matrices[{k}]: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Representation::from_table(mats.into_iter().map(|m| m.realify(0.0)).collect())
            }
            _ => Err(Error::Invalid(
                "a representation needs exactly one of `name` or `matrices`".into(),
            )),
        }
    }
}

/// Actions: `"trivial"`, or `{"kind": "conjugation" | "linear", "rep": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionSpec {
    Keyword(String),
    Detailed(ActionDetail),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDetail {
    pub kind: String,
    #[serde(default)]
    pub rep: Option<RepSpec>,
}

impl ActionSpec {
    pub fn trivial() -> ActionSpec {
        ActionSpec::Keyword("trivial".into())
    }

    pub fn build(&self, group: &CompactGroup, target: &TargetGroup) -> Result<GAction> {
        let (kind, rep) = match self {
            ActionSpec::Keyword(k) => (k.as_str(), None),
            ActionSpec::Detailed(d) => (d.kind.as_str(), d.rep.as_ref()),
        };
        let rep = || {
            rep.ok_or_else(|| Error::Invalid(format!("action `{kind}` needs a `rep`")))?
                .build(group, target.dim())
        };
        match kind {
            "trivial" => Ok(GAction::Trivial),
            "conjugation" => Ok(GAction::Conjugation(rep()?)),
            "linear" => Ok(GAction::Linear(rep()?)),
            other => Err(Error::Invalid(format!(
                "unknown action kind `{other}` (expected trivial, conjugation, linear)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// A homomorphism used directly as a 1-cocycle.
    Representation { rep: RepSpec },
    /// The principal coboundary `s ↦ u⁻¹·ˢu` (or `ˢu − u` on vectors).
    Coboundary { point: serde_json::Value },
    /// The identity cochain of the given arity.
    Zero { arity: usize },
    Table {
        arity: usize,
        values: Vec<serde_json::Value>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    UniformBall,
    SinglePair,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    pub profile: Profile,
    /// Tuple index carrying the single-pair perturbation (default: last).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<usize>,
    /// Fixed single-pair direction, normalized before scaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub group: GroupSpec,
    pub target: TargetSpec,
    pub action: ActionSpec,
    pub base: BaseSpec,
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub settings: RectifySettings,
}

fn schema_version() -> u32 {
    1
}

/// A scenario with every piece constructed.
pub struct Built {
    pub context: Arc<Context>,
    pub base: Cochain,
    pub input: Cochain,
    pub scheme: crate::groups::HaarScheme,
    pub settings: RectifySettings,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(s)?;
        if sc.schema != 1 {
            return Err(Error::Invalid(format!(
                "unsupported schema version {}",
                sc.schema
            )));
        }
        Ok(sc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    pub fn context(&self) -> Result<Arc<Context>> {
        let group = self.group.build()?;
        let target = self.target.build()?;
        let action = self
            .action
            .build(&group, &target)
            .map_err(|e| Error::Invalid(format!("action: {e}")))?;
        Context::new(group, target, action).map_err(|e| Error::Invalid(format!("action: {e}")))
    }

    pub fn build(&self) -> Result<Built> {
        self.settings.validate()?;
        let context = self.context()?;
        let base = base_cocycle(&context, &self.base)?;
        let p = &self.perturbation;
        let input = perturb(
            &base,
            p.epsilon,
            p.seed,
            p.profile,
            p.element,
            p.direction.as_ref(),
        )?;
        let mut settings = self.settings.clone();
        settings.eval.seed = p.seed;
        let scheme = context.group.haar_scheme();
        Ok(Built {
            context,
            base,
            input,
            scheme,
            settings,
        })
    }

    pub fn run(&self) -> Result<Rectified> {
        let b = self.build()?;
        rectify(&b.input, &b.settings, &b.scheme)
    }
}

fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::real(2, 2, &[c, -s, s, c]).expect("finite")
}

fn permutation_matrix(p: &[usize]) -> Matrix {
    let n = p.len();
    let mut data = vec![0.0; n * n];
    for (i, &pi) in p.iter().enumerate() {
        data[pi * n + i] = 1.0;
    }
    Matrix::real(n, n, &data).expect("finite")
}

fn parity(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Orthonormal basis (columns) of the sum-zero hyperplane of `ℝⁿ`.
fn helmert(n: usize) -> Matrix {
    let mut data = vec![0.0; n * (n - 1)];
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            data[i * (n - 1) + (k - 1)] = 1.0 / norm;
        }
        data[k * (n - 1) + (k - 1)] = -(k as f64) / norm;
    }
    Matrix::real(n, n - 1, &data).expect("finite")
}

const Q8_UNITS: [[f64; 4]; 8] = [
    [1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 0.0, -1.0],
];

/// Left multiplication by a quaternion on `ℝ⁴ = ℍ`.
fn quaternion_left(q: [f64; 4]) -> Matrix {
    let cols: Vec<[f64; 4]> = (0..4)
        .map(|k| {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            crate::groups::quaternion_mul(q, e)
        })
        .collect();
    let mut data = [0.0; 16];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..4 {
            data[i * 4 + j] = col[i];
        }
    }
    Matrix::real(4, 4, &data).expect("finite")
}

/// Built-in representations.
///
/// Finite groups: `trivial` (dimension of the target), `regular`,
/// `standard` (`C_n`: rotations of the plane; `D_n`: symmetries of the
/// n-gon; `S_n`: the (n−1)-dimensional standard representation), `sign`
/// (`S_n`, `D_n`, even `C_n`), `permutation` (`S_n` on `ℝⁿ`), `character`
/// (`C_n`, weight `k`: `e^{2πik/n}`), `quaternion` (`Q₈ ⊂ SU(2)`), `real4`
/// (`Q₈` acting on `ℍ = ℝ⁴`). U(1): `characters` (diagonal `e^{ikθ}` for
/// each weight), `rotation` (rotation by `kθ`). SU(2): `fundamental`.
pub fn named_representation(
    group: &CompactGroup,
    name: &str,
    weights: Option<&[i64]>,
    dim: usize,
) -> Result<Representation> {
    let unknown = || Error::Invalid(format!("unknown representation `{name}` for this group"));
    match group {
        CompactGroup::Finite(g) => Representation::from_table(
            finite_representation(g, name, weights, dim)?.ok_or_else(unknown)?,
        ),
        CompactGroup::U1 { .. } => {
            let ws: Vec<i64> = weights.map(<[i64]>::to_vec).unwrap_or_else(|| vec![1]);
            let angle = |s: &GroupElement| match s {
                GroupElement::Coords(c) => c[0],
                GroupElement::Finite(_) => unreachable!("validated element"),
            };
            match name {
                "characters" => {
                    let (w1, w2) = (ws.clone(), ws);
                    let diag = move |ws: &[i64], th: f64| {
                        Matrix::diag(
                            &ws.iter()
                                .map(|&k| Complex64::new(0.0, k as f64 * th).exp())
                                .collect::<Vec<_>>(),
                        )
                    };
                    Ok(Representation::function(
                        "characters",
                        move |s| diag(&w1, angle(s)),
                        move |s| diag(&w2, -angle(s)),
                    ))
                }
                "rotation" => {
                    let k = ws[0] as f64;
                    Ok(Representation::function(
                        "rotation",
                        move |s| rotation(k * angle(s)),
                        move |s| rotation(-k * angle(s)),
                    ))
                }
                _ => Err(unknown()),
            }
        }
        CompactGroup::Su2(_) => match name {
            "fundamental" => {
                let q = |s: &GroupElement| match s {
                    GroupElement::Coords(c) => c.clone(),
                    GroupElement::Finite(_) => unreachable!("validated element"),
                };
                Ok(Representation::function(
                    "fundamental",
                    move |s| su2_matrix(&q(s)),
                    move |s| su2_matrix(&q(s)).adjoint(),
                ))
            }
            _ => Err(unknown()),
        },
        CompactGroup::Product(_) => Err(unknown()),
    }
}

fn finite_representation(
    g: &FiniteGroup,
    name: &str,
    weights: Option<&[i64]>,
    dim: usize,
) -> Result<Option<Vec<Matrix>>> {
    let order = g.order();
    let gname = g.name();
    let family = |prefix: &str| {
        gname
            .strip_prefix(prefix)
            .and_then(|r| r.parse::<usize>().ok())
    };
    let mats: Vec<Matrix> = match name {
        "trivial" => vec![Matrix::identity(dim); order],
        "regular" => {
            if order > 16 {
                return Err(Error::Invalid(
                    "regular representation limited to order 16".into(),
                ));
            }
            (0..order)
                .map(|a| {
                    let mut data = vec![0.0; order * order];
                    for h in 0..order {
                        data[g.mul(a, h) * order + h] = 1.0;
                    }
                    Matrix::real(order, order, &data).expect("finite")
                })
                .collect()
        }
        "standard" => {
            if let Some(n) = family("C") {
                (0..n)
                    .map(|k| rotation(TAU * k as f64 / n as f64))
                    .collect()
            } else if let Some(n) = family("D") {
                let flip = Matrix::diag_real(&[1.0, -1.0]);
                (0..2 * n)
                    .map(|i| {
                        let r = rotation(TAU * (i % n) as f64 / n as f64);
                        if i < n {
                            r
                        } else {
                            &r * &flip
                        }
                    })
                    .collect()
            } else if let Some(n) = family("S") {
                if n < 2 {
                    return Ok(None);
                }
                let b = helmert(n);
                permutations(n)
                    .iter()
                    .map(|p| &(&b.transpose() * &permutation_matrix(p)) * &b)
                    .collect()
            } else {
                return Ok(None);
            }
        }
        "permutation" => match family("S") {
            Some(n) => permutations(n)
                .iter()
                .map(|p| permutation_matrix(p))
                .collect(),
            None => return Ok(None),
        },
        "sign" => {
            if let Some(n) = family("S") {
                permutations(n)
                    .iter()
                    .map(|p| Matrix::diag_real(&[parity(p)]))
                    .collect()
            } else if let Some(n) = family("D") {
                (0..2 * n)
                    .map(|i| Matrix::diag_real(&[if i < n { 1.0 } else { -1.0 }]))
                    .collect()
            } else if let Some(n) = family("C").filter(|n| n % 2 == 0) {
                (0..n)
                    .map(|k| Matrix::diag_real(&[if k % 2 == 0 { 1.0 } else { -1.0 }]))
                    .collect()
            } else {
                return Ok(None);
            }
        }
        "character" => match family("C") {
            Some(n) => {
                let k = weights.and_then(|w| w.first().copied()).unwrap_or(1);
                (0..n)
                    .map(|j| {
                        Matrix::scalar(
                            Complex64::new(0.0, TAU * (k * j as i64) as f64 / n as f64).exp(),
                        )
                    })
                    .collect()
            }
            None => return Ok(None),
        },
        "quaternion" if gname == "Q8" => Q8_UNITS.iter().map(|q| su2_matrix(q)).collect(),
        "real4" if gname == "Q8" => Q8_UNITS.iter().map(|q| quaternion_left(*q)).collect(),
        _ => return Ok(None),
    };
    Ok(Some(mats.into_iter().map(|m| m.realify(1e-15)).collect()))
}

/// A canonical orthogonal representation of each built-in finite group,
/// used to twist abelian coefficients.
pub fn orthogonal_action(g: &FiniteGroup) -> Representation {
    let name = if g.name() == "Q8" {
        "real4"
    } else if ["C", "D", "S"].iter().any(|p| {
        g.name()
            .strip_prefix(p)
            .is_some_and(|r| r.parse::<usize>().is_ok_and(|n| n >= 3))
    }) {
        "standard"
    } else {
        "regular"
    };
    Representation::from_table(
        finite_representation(g, name, None, 0)
            .ok()
            .flatten()
            .expect("built-in representation"),
    )
    .expect("invertible")
}

/// Ground-truth cocycle of the scenario. Finite-group outputs are checked
/// to have defect at most `1e-10`.
pub fn base_cocycle(ctx: &Arc<Context>, spec: &BaseSpec) -> Result<Cochain> {
    let target = ctx.target;
    let rho = match spec {
        BaseSpec::Representation { rep } => {
            let pi = rep.build(&ctx.group, target.dim())?;
            if pi.dim(&ctx.group) != target.dim() || target.is_abelian() {
                return Err(Error::Invalid(format!(
                    "base.rep has dimension {} but the target is {target}",
                    pi.dim(&ctx.group)
                )));
            }
            let t = target;
            Cochain::lazy(ctx.clone(), 1, ValueSpace::Group, true, move |s| {
                let m = pi.at(&s[0]);
                t.check_shape(&Value::Matrix(m.clone()))?;
                Ok(Value::Matrix(m))
            })
            .settle()?
        }
        BaseSpec::Coboundary { point } => {
            let u = value_from_json(&target, point)
                .map_err(|e| Error::Invalid(format!("base.point: {e}")))?;
            let u = match u {
                Value::Matrix(m)
                    if target == TargetGroup::general_linear(target.dim(), Field::Real) =>
                {
                    Value::Matrix(m.realify(0.0))
                }
                other => other,
            };
            target
                .check_point(&u)
                .map_err(|e| Error::Invalid(format!("base.point: {e}")))?;
            let uinv = target.inv(&u)?;
            let c = ctx.clone();
            Cochain::lazy(ctx.clone(), 1, ValueSpace::Group, true, move |s| {
                Ok(c.target.mul(&uinv, &c.action.act(&s[0], &u)))
            })
            .settle()?
        }
        BaseSpec::Zero { arity } => {
            if *arity != 1 && !target.is_abelian() {
                return Err(Error::NonAbelian(format!("a {arity}-cochain")));
            }
            Cochain::constant(ctx.clone(), *arity, ValueSpace::Group, target.identity())
        }
        BaseSpec::Table { arity, values } => {
            let values = values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    value_from_json(&target, v)
                        .map_err(|e| Error::Invalid(format!("base.values[{k}]: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Cochain::from_table(ctx.clone(), *arity, ValueSpace::Group, values);
        }
    };
    if ctx.group.is_finite() && (rho.arity() == 1 || target.is_abelian()) {
        let eval = EvaluationSet::build(&ctx.group, rho.arity() + 1, &Default::default());
        let (d, at) = defect(&rho, &eval)?;
        if d > 1e-10 {
            return Err(Error::Invalid(format!(
                "base is not a cocycle for this action: defect {d:e} at {}",
                crate::groups::tuple_label(&at)
            )));
        }
    }
    Ok(rho)
}

/// Normalized Poisson kernel, `1` at `θ = 0`.
fn poisson(theta: f64) -> f64 {
    let r = POISSON_R;
    (1.0 - r) / (1.0 + r) * (1.0 - r * r) / (1.0 - 2.0 * r * theta.cos() + r * r)
}

/// `ρ̃(t) = exp(η(t))·ρ(t)` (matrix) or `ρ(t) + η(t)` (abelian).
///
/// `uniform_ball`: `η(t) = ε·u_t·X_t` with `u_t` uniform on `[0, 1]` and
/// `X_t` a unit Gaussian direction, both from stream `t` (the tuple index).
/// `single_pair`: `η = ε·X` on one tuple only. `analytic` (Lie groups):
/// on U(1) a sum of three Poisson bumps `ε/3 · Σ u_j g(θ − φ_j) X_j`; on
/// SU(2) the linear map `ε/2 · Σ q_i X_i` in the quaternion coordinates.
pub fn perturb(
    rho: &Cochain,
    epsilon: f64,
    seed: u64,
    profile: Profile,
    element: Option<usize>,
    direction: Option<&serde_json::Value>,
) -> Result<Cochain> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!(
            "perturbation.epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let ctx = rho.context().clone();
    let target = ctx.target;
    let apply = move |v: &Value, eta: &Value| -> Result<Value> {
        match v {
            Value::Matrix(_) => Ok(target.mul(&target.exp(eta)?, v)),
            Value::Vector(_) => Ok(v.add(eta)),
        }
    };
    match (&ctx.group, profile) {
        (CompactGroup::Finite(g), Profile::UniformBall | Profile::SinglePair) => {
            let order = g.order();
            let count = order.pow(rho.arity() as u32);
            let chosen = match profile {
                Profile::SinglePair => {
                    let k = element.unwrap_or(count - 1);
                    if k >= count {
                        return Err(Error::Invalid(format!(
                            "perturbation.element {k} out of range (< {count})"
                        )));
                    }
                    Some(k)
                }
                _ => None,
            };
            let fixed = match direction {
                Some(d) => {
                    let v = value_from_json(&target, d)
                        .map_err(|e| Error::Invalid(format!("perturbation.direction: {e}")))?;
                    target
                        .check_shape(&v)
                        .map_err(|e| Error::Invalid(format!("perturbation.direction: {e}")))?;
                    let n = v.norm();
                    if n == 0.0 {
                        return Err(Error::Invalid(
                            "perturbation.direction must be nonzero".into(),
                        ));
                    }
                    Some(v.scale(1.0 / n))
                }
                None => None,
            };
            let values = all_tuples(order, rho.arity())
                .enumerate()
                .map(|(k, t)| {
                    let v = rho.eval(&t)?;
                    let mut rng = SeededStream::new(seed, k as u64);
                    let eta = match chosen {
                        Some(c) if c != k => return Ok(v),
                        Some(_) => fixed
                            .clone()
                            .unwrap_or_else(|| target.random_direction(&mut rng))
                            .scale(epsilon),
                        None => {
                            let u = rng.uniform();
                            target.random_direction(&mut rng).scale(epsilon * u)
                        }
                    };
                    apply(&v, &eta)
                })
                .collect::<Result<Vec<_>>>()?;
            Cochain::from_table(ctx.clone(), rho.arity(), ValueSpace::Group, values)
        }
        (CompactGroup::U1 { .. }, Profile::Analytic) => {
            let mut rng = SeededStream::new(seed, 0);
            let bumps: Vec<(f64, f64, Value)> = (0..POISSON_TERMS)
                .map(|_| {
                    let u = rng.uniform();
                    let phi = TAU * rng.uniform();
                    (u, phi, target.random_direction(&mut rng))
                })
                .collect();
            let src = rho.clone();
            Ok(Cochain::lazy(
                ctx.clone(),
                rho.arity(),
                ValueSpace::Group,
                true,
                move |t| {
                    let theta = coords(&t[0])[0];
                    let mut eta = target.zero_algebra();
                    for (u, phi, x) in &bumps {
                        eta.axpy(epsilon * u * poisson(theta - phi) / POISSON_TERMS as f64, x);
                    }
                    apply(&src.eval(t)?, &eta)
                },
            ))
        }
        (CompactGroup::Su2(_), Profile::Analytic) => {
            let mut rng = SeededStream::new(seed, 0);
            let dirs: Vec<Value> = (0..4).map(|_| target.random_direction(&mut rng)).collect();
            let src = rho.clone();
            Ok(Cochain::lazy(
                ctx.clone(),
                rho.arity(),
                ValueSpace::Group,
                true,
                move |t| {
                    let q = coords(&t[0]);
                    let mut eta = target.zero_algebra();
                    for (qi, x) in q.iter().zip(&dirs) {
                        eta.axpy(0.5 * epsilon * qi, x);
                    }
                    apply(&src.eval(t)?, &eta)
                },
            ))
        }
        (CompactGroup::Finite(_), Profile::Analytic) => Err(Error::Invalid(
            "perturbation.profile `analytic` needs a U(1) or SU(2) group".into(),
        )),
        _ if epsilon == 0.0 => Ok(rho.clone()),
        _ => Err(Error::Invalid(format!(
            "perturbation.profile `{}` is not available for this group",
            serde_json::to_value(profile)
                .expect("profile")
                .as_str()
                .unwrap_or("?")
        ))),
    }
}

fn coords(s: &GroupElement) -> Vec<f64> {
    match s {
        GroupElement::Coords(c) => c.clone(),
        GroupElement::Finite(i) => vec![*i as f64],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub final_defect: Option<f64>,
    pub distance: Option<f64>,
    pub fitted_order: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log distance` against `log ε`.
    pub slope: Option<f64>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let mut out = String::from("epsilon,final_defect,distance,fitted_order,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{},{},{},{}\n",
                r.epsilon,
                opt(r.final_defect),
                opt(r.distance),
                opt(r.fitted_order),
                r.status
            ));
        }
        out
    }
}

/// One rectification per epsilon with seeds `seed + i`, on up to `jobs`
/// threads. A failing row is recorded with its status and does not stop
/// the sweep.
pub fn sweep(scenario: &Scenario, epsilons: &[f64], jobs: usize) -> SweepResult {
    let run_row = |i: usize| -> SweepRow {
        let eps = epsilons[i];
        let mut sc = scenario.clone();
        sc.perturbation.epsilon = eps;
        sc.perturbation.seed = scenario.perturbation.seed.wrapping_add(i as u64);
        let seed = sc.perturbation.seed;
        match sc.run() {
            Ok(out) => {
                let r = out.report;
                SweepRow {
                    epsilon: eps,
                    seed,
                    final_defect: r.final_defect.is_finite().then_some(r.final_defect),
                    distance: Some(r.distance),
                    fitted_order: r.fitted_order,
                    status: format!("{:?}", r.status),
                }
            }
            Err(e) => SweepRow {
                epsilon: eps,
                seed,
                final_defect: None,
                distance: None,
                fitted_order: None,
                status: if e.is_chart_error() {
                    "ChartError".into()
                } else {
                    format!("Error: {e}")
                },
            },
        }
    };
    let jobs = jobs.clamp(1, epsilons.len().max(1));
    let mut rows: Vec<Option<SweepRow>> = vec![None; epsilons.len()];
    if jobs == 1 {
        for (i, slot) in rows.iter_mut().enumerate() {
            *slot = Some(run_row(i));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done = std::sync::Mutex::new(&mut rows);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= epsilons.len() {
                        break;
                    }
                    let row = run_row(i);
                    done.lock().expect("sweep rows")[i] = Some(row);
                });
            }
        });
    }
    let rows: Vec<SweepRow> = rows
        .into_iter()
        .map(|r| r.expect("every row ran"))
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == format!("{:?}", Status::Converged) && r.epsilon > 0.0)
        .filter_map(|r| {
            r.distance
                .filter(|d| *d > 0.0)
                .map(|d| (r.epsilon.ln(), d.ln()))
        })
        .collect();
    SweepResult {
        rows,
        slope: loglog_slope(&pts),
    }
}

fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub const TEMPLATES: [&str; 6] = [
    "s3-gl2",
    "q8-u2",
    "c4-twisted-r2",
    "u1-u2",
    "su2-u2",
    "c2c2-abelian-n2",
];

/// A complete runnable scenario for each built-in template.
pub fn template(name: &str) -> Option<Scenario> {
    let uniform = |epsilon: f64| PerturbationSpec {
        epsilon,
        seed: 42,
        profile: Profile::UniformBall,
        element: None,
        direction: None,
    };
    let analytic = |epsilon: f64| PerturbationSpec {
        profile: Profile::Analytic,
        ..uniform(epsilon)
    };
    let rep = |name: &str| BaseSpec::Representation {
        rep: RepSpec::named(name),
    };
    let sc = |group, target, action, base, perturbation, settings| Scenario {
        schema: 1,
        name: Some(name.to_string()),
        group,
        target,
        action,
        base,
        perturbation,
        settings,
    };
    let gl2 = TargetSpec::GeneralLinear {
        dim: 2,
        field: Field::Real,
    };
    Some(match name {
        "s3-gl2" => sc(
            GroupSpec::Symmetric { n: 3 },
            gl2,
            ActionSpec::trivial(),
            rep("standard"),
            uniform(1e-2),
            RectifySettings::default(),
        ),
        "q8-u2" => sc(
            GroupSpec::Quaternion8,
            TargetSpec::Unitary { dim: 2 },
            ActionSpec::trivial(),
            rep("quaternion"),
            uniform(1e-2),
            RectifySettings::default(),
        ),
        "c4-twisted-r2" => sc(
            GroupSpec::Cyclic { n: 4 },
            gl2,
            ActionSpec::Detailed(ActionDetail {
                kind: "conjugation".into(),
                rep: Some(RepSpec::named("standard")),
            }),
            BaseSpec::Coboundary {
                point: serde_json::json!([[1.0, 0.3], [0.0, 1.0]]),
            },
            uniform(1e-2),
            RectifySettings::default(),
        ),
        "u1-u2" => sc(
            GroupSpec::U1 { nodes: 64 },
            TargetSpec::Unitary { dim: 2 },
            ActionSpec::trivial(),
            BaseSpec::Representation {
                rep: RepSpec {
                    name: Some("characters".into()),
                    weights: Some(vec![1, 2]),
                    matrices: None,
                },
            },
            analytic(1e-2),
            RectifySettings {
                tol: 1e-10,
                max_iter: 8,
                ..RectifySettings::default()
            },
        ),
        "su2-u2" => sc(
            GroupSpec::Su2 {
                alpha: 4,
                beta: 16,
                gamma: 4,
            },
            TargetSpec::Unitary { dim: 2 },
            ActionSpec::trivial(),
            rep("fundamental"),
            analytic(1e-4),
            RectifySettings {
                tol: 1e-6,
                max_iter: 1,
                ..RectifySettings::default()
            },
        ),
        "c2c2-abelian-n2" => {
            let id = serde_json::json!([[1.0, 0.0], [0.0, 1.0]]);
            let swap = serde_json::json!([[0.0, 1.0], [1.0, 0.0]]);
            sc(
                GroupSpec::Product {
                    factors: vec![GroupSpec::Cyclic { n: 2 }, GroupSpec::Cyclic { n: 2 }],
                },
                TargetSpec::Abelian { dim: 2 },
                ActionSpec::Detailed(ActionDetail {
                    kind: "linear".into(),
                    rep: Some(RepSpec {
                        matrices: Some(vec![id.clone(), id, swap.clone(), swap]),
                        ..RepSpec::default()
                    }),
                }),
                BaseSpec::Zero { arity: 2 },
                uniform(1e-2),
                RectifySettings::default(),
            )
        }
        _ => return None,
    })
}

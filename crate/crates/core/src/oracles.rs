//! Brute-force oracles behind `selftest`: exhaustive identity checks on
//! every finite group of order at most 12 (up to isomorphism) and seeded
//! numerical roundtrips.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cochain::{
    all_tuples, beta_of, coboundary, twisted_cocycle_defect, Cochain, Context, EvaluationSet,
    ValueSpace,
};
use crate::error::Result;
use crate::groups::{
    build_cyclic, build_dihedral, build_quaternion8, build_symmetric, direct_product, permutations,
    tuple_label, CompactGroup, FiniteGroup, GroupElement,
};
use crate::linalg::{bch4, expm, logm, Matrix, C64};
use crate::rng::SeededStream;
use crate::scenarios::{orthogonal_action, template};
use crate::target::{GAction, TargetGroup, Value};

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub name: String,
    pub cases: usize,
    /// Largest error seen (or the quantity compared against `tolerance`).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The first failing case, serialized.
    pub failure: Option<serde_json::Value>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl OracleResult {
    fn new(name: &str, tolerance: f64) -> OracleResult {
        OracleResult {
            name: name.into(),
            cases: 0,
            worst: 0.0,
            tolerance,
            passed: true,
            failure: None,
            elapsed: Duration::ZERO,
        }
    }

    fn record(&mut self, err: f64, case: impl FnOnce() -> serde_json::Value) {
        self.cases += 1;
        if err > self.worst || err.is_nan() {
            self.worst = err;
        }
        if !(err <= self.tolerance) && self.failure.is_none() {
            self.passed = false;
            let mut c = case();
            c["error"] = serde_json::json!(err);
            self.failure = Some(c);
        }
    }

    fn fail(&mut self, case: serde_json::Value) {
        self.passed = false;
        self.failure.get_or_insert(case);
    }
}

fn timed(f: impl FnOnce() -> OracleResult) -> OracleResult {
    let start = Instant::now();
    let mut r = f();
    r.elapsed = start.elapsed();
    r
}

/// Dicyclic group of order `4n`: `a^k x^e` at index `2k + e`, with
/// `a^{2n} = 1`, `x² = aⁿ`, `x a x⁻¹ = a⁻¹`.
pub fn build_dicyclic(n: usize) -> Result<FiniteGroup> {
    let m = 2 * n;
    let order = 2 * m;
    let table = (0..order)
        .map(|i| {
            (0..order)
                .map(|j| {
                    let (k, e) = (i / 2, i % 2);
                    let (l, f) = (j / 2, j % 2);
                    let mut p = if e == 0 { k + l } else { k + m - l };
                    if e == 1 && f == 1 {
                        p += n;
                    }
                    2 * (p % m) + (e ^ f)
                })
                .collect()
        })
        .collect();
    FiniteGroup::from_cayley(format!("Dic{n}"), table)
}

/// The alternating group `A₄` as even permutations of four points.
pub fn build_alternating4() -> Result<FiniteGroup> {
    let even: Vec<Vec<usize>> = permutations(4)
        .into_iter()
        .filter(|p| {
            (0..4)
                .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count()
                % 2
                == 0
        })
        .collect();
    let index = |p: &[usize]| {
        even.iter()
            .position(|q| q == p)
            .expect("closed under composition")
    };
    let table = even
        .iter()
        .map(|a| {
            even.iter()
                .map(|b| index(&b.iter().map(|&x| a[x]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    FiniteGroup::from_cayley("A4", table)
}

/// One representative of every isomorphism class of groups of order
/// `1..=max_order` (`max_order ≤ 12`).
pub fn small_groups(max_order: usize) -> Vec<FiniteGroup> {
    let c = |n| build_cyclic(n).expect("cyclic");
    let prod = |a: &FiniteGroup, b: &FiniteGroup| direct_product(a, b).expect("product");
    let all = vec![
        c(1),
        c(2),
        c(3),
        c(4),
        prod(&c(2), &c(2)),
        c(5),
        c(6),
        build_symmetric(3).expect("S3"),
        c(7),
        c(8),
        prod(&c(4), &c(2)),
        prod(&prod(&c(2), &c(2)), &c(2)),
        build_dihedral(4).expect("D4"),
        build_quaternion8().expect("Q8"),
        c(9),
        prod(&c(3), &c(3)),
        c(10),
        build_dihedral(5).expect("D5"),
        c(11),
        c(12),
        prod(&c(6), &c(2)),
        build_dihedral(6).expect("D6"),
        build_alternating4().expect("A4"),
        build_dicyclic(3).expect("Dic3"),
    ];
    all.into_iter().filter(|g| g.order() <= max_order).collect()
}

/// Contexts on `ℝ^d`: the trivial action on `ℝ²` and the group's
/// canonical orthogonal action.
fn abelian_contexts(g: &FiniteGroup) -> Vec<(String, std::sync::Arc<Context>)> {
    let group = CompactGroup::Finite(g.clone());
    let rep = orthogonal_action(g);
    let dim = rep.dim(&group);
    vec![
        (
            "trivial".into(),
            Context::new(group.clone(), TargetGroup::abelian(2), GAction::Trivial)
                .expect("trivial"),
        ),
        (
            "orthogonal".into(),
            Context::new(group, TargetGroup::abelian(dim), GAction::Linear(rep))
                .expect("orthogonal"),
        ),
    ]
}

fn random_cochain(ctx: &std::sync::Arc<Context>, arity: usize, seed: u64) -> Result<Cochain> {
    let order = ctx.group.order().expect("finite");
    let dim = ctx.target.dim();
    let mut rng = SeededStream::new(seed, arity as u64);
    let values = (0..order.pow(arity as u32))
        .map(|_| Value::Vector((0..dim).map(|_| rng.gaussian()).collect()))
        .collect();
    Cochain::from_table(ctx.clone(), arity, ValueSpace::Group, values)
}

fn case(g: &FiniteGroup, action: &str, arity: usize, tuple: &[GroupElement]) -> serde_json::Value {
    serde_json::json!({"group": g.name(), "action": action, "arity": arity, "tuple": tuple_label(tuple)})
}

/// `δδρ = 0` on every tuple, for random abelian `n`-cochains.
pub fn coboundary_squared(max_order: usize, max_arity: usize) -> OracleResult {
    coboundary_squared_on(&small_groups(max_order), max_arity)
}

pub fn coboundary_squared_on(groups: &[FiniteGroup], max_arity: usize) -> OracleResult {
    timed(|| {
        let mut out = OracleResult::new("coboundary squared is zero", 1e-13);
        for g in groups {
            for (action, ctx) in abelian_contexts(g) {
                for n in 1..=max_arity {
                    let mut run = || -> Result<()> {
                        let rho = random_cochain(&ctx, n, 7)?;
                        let d1 = coboundary(&rho)?.settle()?;
                        let d2 = coboundary(&d1)?;
                        for t in all_tuples(g.order(), n + 2) {
                            let err = d2.eval(&t)?.norm();
                            out.record(err, || case(g, &action, n, &t));
                        }
                        Ok(())
                    };
                    if let Err(e) = run() {
                        out.fail(serde_json::json!({"group": g.name(), "action": action, "arity": n, "error": e.to_string()}));
                    }
                }
            }
        }
        out
    })
}

/// `δ(hγ) + h(δγ) = γ` on every tuple, for random abelian `m`-cochains.
pub fn homotopy_identity(max_order: usize, max_arity: usize) -> OracleResult {
    homotopy_identity_on(&small_groups(max_order), max_arity)
}

pub fn homotopy_identity_on(groups: &[FiniteGroup], max_arity: usize) -> OracleResult {
    timed(|| {
        let mut out = OracleResult::new("last-slot homotopy identity", 1e-12);
        for g in groups {
            let scheme = CompactGroup::Finite(g.clone()).haar_scheme();
            for (action, ctx) in abelian_contexts(g) {
                for m in 1..=max_arity {
                    let mut run = || -> Result<()> {
                        let gamma = random_cochain(&ctx, m, 11)?;
                        let dh = coboundary(
                            &crate::cochain::homotopy_last_slot(&gamma, &scheme)?.settle()?,
                        )?;
                        let hd = crate::cochain::homotopy_last_slot(
                            &coboundary(&gamma)?.settle()?,
                            &scheme,
                        )?;
                        for t in all_tuples(g.order(), m) {
                            let lhs = dh.eval(&t)?.add(&hd.eval(&t)?);
                            let err = lhs.sub(&gamma.eval(&t)?).norm();
                            out.record(err, || case(g, &action, m, &t));
                        }
                        Ok(())
                    };
                    if let Err(e) = run() {
                        out.fail(serde_json::json!({"group": g.name(), "action": action, "arity": m, "error": e.to_string()}));
                    }
                }
            }
        }
        out
    })
}

/// The twisted coboundary of `β = log δρ̃` is `O(ε²)`: for each finite
/// template, `sup ‖δ▷β‖ ≤ 10·ε²` at `ε ∈ {1e−2, 1e−3}`, with the two
/// measurements a factor of at least 30 apart.
pub fn twisted_cocycle_bound() -> OracleResult {
    timed(|| {
        let mut out = OracleResult::new("twisted coboundary of beta is O(eps^2)", 10.0);
        for name in ["s3-gl2", "q8-u2", "c4-twisted-r2"] {
            let mut measured = Vec::new();
            for eps in [1e-2, 1e-3] {
                let run = || -> Result<(f64, f64)> {
                    let mut sc = template(name).expect("template");
                    sc.perturbation.epsilon = eps;
                    let b = sc.build()?;
                    let eval3 = EvaluationSet::build(&b.context.group, 3, &Default::default());
                    let eval2 = EvaluationSet::build(&b.context.group, 2, &Default::default());
                    let beta = beta_of(&b.input)?;
                    let eps_measured = crate::cochain::defect(&b.input, &eval2)?.0;
                    Ok((
                        eps_measured,
                        twisted_cocycle_defect(&beta, &b.input, &eval3)?,
                    ))
                };
                match run() {
                    Ok((e, tw)) => {
                        out.record(tw / (e * e), || serde_json::json!({"template": name, "epsilon": eps, "defect": e, "twisted": tw}));
                        measured.push(tw);
                    }
                    Err(e) => out.fail(serde_json::json!({"template": name, "epsilon": eps, "error": e.to_string()})),
                }
            }
            if let [a, b] = measured[..] {
                if !(a >= 30.0 * b) {
                    out.fail(serde_json::json!({"template": name, "twisted": [a, b], "error": "not quadratic in epsilon"}));
                }
            }
        }
        out
    })
}

/// Random `x` with `‖x‖₂ = r ≤ 1`, real or complex, dimension `1..=8`.
fn random_small_matrix(rng: &mut SeededStream) -> Matrix {
    let n = 1 + rng.below(8);
    let complex = rng.below(2) == 1;
    let data = (0..n * n)
        .map(|_| C64::new(rng.gaussian(), if complex { rng.gaussian() } else { 0.0 }))
        .collect();
    let x = Matrix::new(n, n, data).expect("finite");
    let r = rng.uniform();
    let s = x.spectral();
    let x = x.scale_real(if s > 0.0 { r / s } else { 0.0 });
    if complex {
        x
    } else {
        x.realify(0.0)
    }
}

/// `‖logm(expm(x)) − x‖ ≤ 1e−12` on `count` seeded matrices.
pub fn exp_log_roundtrip(count: usize, seed: u64) -> OracleResult {
    timed(|| {
        let mut out = OracleResult::new("exp/log roundtrip", 1e-12);
        let mut rng = SeededStream::new(seed, 0x10c);
        for k in 0..count {
            let x = random_small_matrix(&mut rng);
            match expm(&x).and_then(|e| logm(&e)) {
                Ok(y) => {
                    let err = (&y - &x).spectral();
                    out.record(err, || serde_json::json!({"index": k, "dim": x.rows(), "matrix": crate::cochain::matrix_to_json(&x)}));
                }
                Err(e) => out.fail(serde_json::json!({"index": k, "error": e.to_string()})),
            }
        }
        out
    })
}

/// Halving `t` divides `‖log(eᵃeᵇ) − bch4(a, b)‖` by `2⁵` within a factor
/// of 4. `worst` is the largest `|log₂(ratio) − 5|`; the tolerance is 2.
pub fn bch_order(count: usize, seed: u64) -> OracleResult {
    timed(|| {
        let mut out = OracleResult::new("bch4 error is fifth order", 2.0);
        let mut rng = SeededStream::new(seed, 0xbc4);
        for k in 0..count {
            let n = 2 + rng.below(3);
            let mut unit = || {
                let data: Vec<f64> = (0..n * n).map(|_| rng.gaussian()).collect();
                let m = Matrix::real(n, n, &data).expect("finite");
                let s = m.spectral();
                m.scale_real(1.0 / s)
            };
            let (a, b) = (unit(), unit());
            let err_at = |t: f64| -> Result<f64> {
                let (ta, tb) = (a.scale_real(t), b.scale_real(t));
                let exact = logm(&(&expm(&ta)? * &expm(&tb)?))?;
                Ok((&exact - &bch4(&ta, &tb)?).spectral())
            };
            match err_at(0.2).and_then(|e1| err_at(0.1).map(|e2| (e1, e2))) {
                Ok((e1, e2)) => {
                    let dev = ((e1 / e2).log2() - 5.0).abs();
                    out.record(
                        dev,
                        || serde_json::json!({"index": k, "dim": n, "errors": [e1, e2]}),
                    );
                }
                Err(e) => out.fail(serde_json::json!({"index": k, "error": e.to_string()})),
            }
        }
        out
    })
}

/// The full suite run by `selftest`. `extra` groups join the two
/// exhaustive oracles (order at most 12, resp. 8 for the homotopy).
pub fn suite(extra: &[FiniteGroup]) -> Vec<OracleResult> {
    let mut dd = small_groups(12);
    dd.extend(extra.iter().filter(|g| g.order() <= 12).cloned());
    let mut hom = small_groups(8);
    hom.extend(extra.iter().filter(|g| g.order() <= 8).cloned());
    vec![
        coboundary_squared_on(&dd, 3),
        homotopy_identity_on(&hom, 4),
        twisted_cocycle_bound(),
        exp_log_roundtrip(1000, 2024),
        bch_order(50, 2024),
    ]
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::time::Instant;

use cocycle_rectifier::cochain::{
    all_tuples, beta_of, coboundary, defect, homotopy_average, homotopy_last_slot, Cochain,
    Context, EvaluationSet, ValueSpace,
};
use cocycle_rectifier::groups::{
    build_cyclic, build_dihedral, build_quaternion8, build_symmetric, direct_product,
};
use cocycle_rectifier::groups::{CompactGroup, FiniteGroup, GroupElement};
use cocycle_rectifier::linalg::{Field, Matrix};
use cocycle_rectifier::oracles;
use cocycle_rectifier::rectify::{
    quadratic_law_holds, rectify_abelian, rectify_step, RectifySettings, Status,
};
use cocycle_rectifier::rng::SeededStream;
use cocycle_rectifier::scenarios::{
    orthogonal_action, sweep, template, ActionSpec, BaseSpec, GroupSpec, PerturbationSpec, Profile,
    RepSpec, Scenario, TargetSpec, TEMPLATES,
};
use cocycle_rectifier::target::{GAction, TargetGroup, Value};

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, title: &str, outcome: &Outcome) {
    println!(
        "criterion {id} [{title}]: {} ({})",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.detail
    );
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dd = oracles::coboundary_squared(12, 3);
    let h = oracles::homotopy_identity(8, 4);
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: dd.passed && h.passed && dd.worst <= 1e-13 && h.worst <= 1e-12 && secs < 60.0,
        detail: format!(
            "dd worst {:.2e} <= 1e-13 over {} tuples, homotopy worst {:.2e} <= 1e-12 over {} tuples, {secs:.1}s < 60s{}",
            dd.worst,
            dd.cases,
            h.worst,
            h.cases,
            dd.failure.or(h.failure).map(|f| format!(", first failure {f}")).unwrap_or_default()
        ),
    }
}

/// Converged outputs of the quadratic-contraction runs, reused by criterion 3.
fn criterion_2(converged: &mut Vec<(String, Cochain)>) -> Outcome {
    let start = Instant::now();
    let names = ["s3-gl2", "q8-u2", "c4-twisted-r2"];
    let mut failures = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..20 {
        let name = names[i % 3];
        let eps = [1e-2, 1e-3][(i / 3) % 2];
        let mut sc = template(name).unwrap();
        sc.perturbation.epsilon = eps;
        sc.perturbation.seed = 1000 + i as u64;
        let out = sc.run().unwrap();
        let r = &out.report;
        let order = r.fitted_order.unwrap_or(f64::NAN);
        lo = lo.min(order);
        hi = hi.max(order);
        let ok = r.status == Status::Converged
            && quadratic_law_holds(&r.defect_trace, 10.0, 1e-12)
            && (1.7..=2.3).contains(&order);
        if !ok {
            failures.push(format!(
                "{name} eps={eps:e} seed={} trace={:?} order={order}",
                sc.perturbation.seed, r.defect_trace
            ));
        }
        if r.status == Status::Converged {
            converged.push((format!("{name}/seed {}", sc.perturbation.seed), out.cochain));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        passed: failures.is_empty() && secs < 10.0,
        detail: format!(
            "20 runs, eps_k+1 <= 10 eps_k^2 above 1e-12, fitted order in [{lo:.3}, {hi:.3}] vs [1.7, 2.3], {secs:.2}s < 10s{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    }
}

fn matrix_at(c: &Cochain, s: usize) -> Matrix {
    c.eval(&[GroupElement::Finite(s)])
        .unwrap()
        .matrix()
        .unwrap()
        .clone()
}

fn criterion_3(converged: &[(String, Cochain)]) -> Outcome {
    let mut worst_defect: f64 = 0.0;
    let mut worst_hom: f64 = 0.0;
    let mut homomorphism_checks = 0;
    for (_, rho) in converged {
        let g = rho.group().finite().unwrap();
        let n = g.order();
        let pairs = EvaluationSet::build(rho.group(), 2, &Default::default());
        assert_eq!(pairs.tuples.len(), n * n);
        worst_defect = worst_defect.max(defect(rho, &pairs).unwrap().0);
        if rho.action().is_trivial() {
            homomorphism_checks += 1;
            for s in 0..n {
                for t in 0..n {
                    let lhs = matrix_at(rho, g.mul(s, t));
                    let rhs = &matrix_at(rho, s) * &matrix_at(rho, t);
                    worst_hom = worst_hom.max(lhs.max_abs_diff(&rhs));
                }
            }
        }
    }
    Outcome {
        passed: !converged.is_empty() && worst_defect <= 1e-12 && worst_hom <= 1e-12,
        detail: format!(
            "{} converged outputs, exhaustive sup |log d rho'| = {worst_defect:.2e} <= 1e-12, \
             {homomorphism_checks} trivial-action outputs with max |rho'(st) - rho'(s)rho'(t)| = {worst_hom:.2e} <= 1e-12",
            converged.len()
        ),
    }
}

fn criterion_4() -> Outcome {
    let eps = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
    let res = sweep(&template("s3-gl2").unwrap(), &eps, 1);
    let slope = res.slope.unwrap_or(f64::NAN);
    Outcome {
        passed: (0.9..=1.1).contains(&slope) && res.rows.iter().all(|r| r.status == "Converged"),
        detail: format!(
            "s3-gl2 log-log slope of distance vs eps = {slope:.4} in [0.9, 1.1]; distances {:?}",
            res.rows
                .iter()
                .map(|r| r.distance.unwrap_or(f64::NAN))
                .collect::<Vec<_>>()
        ),
    }
}

fn random_vectors(count: usize, dim: usize, scale: f64, rng: &mut SeededStream) -> Vec<Value> {
    (0..count)
        .map(|_| Value::Vector((0..dim).map(|_| scale * rng.gaussian()).collect()))
        .collect()
}

fn criterion_5() -> Outcome {
    let groups: Vec<FiniteGroup> = vec![
        build_cyclic(3).unwrap(),
        build_symmetric(3).unwrap(),
        build_dihedral(4).unwrap(),
        build_quaternion8().unwrap(),
        direct_product(&build_cyclic(2).unwrap(), &build_cyclic(2).unwrap()).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut runs = 0;
    for (gi, g) in groups.iter().enumerate() {
        let group = CompactGroup::Finite(g.clone());
        let rep = orthogonal_action(g);
        let dim = rep.dim(&group);
        let ctx = Context::new(
            group.clone(),
            TargetGroup::abelian(dim),
            GAction::Linear(rep),
        )
        .unwrap();
        let scheme = group.haar_scheme();
        for n in 1..=3usize {
            let mut rng = SeededStream::new(77, (10 * gi + n) as u64);
            let order = g.order();
            // An exact cocycle δc (zero for n = 1) plus small noise.
            let exact = if n >= 2 {
                let c = Cochain::from_table(
                    ctx.clone(),
                    n - 1,
                    ValueSpace::Group,
                    random_vectors(order.pow(n as u32 - 1), dim, 1.0, &mut rng),
                )
                .unwrap();
                coboundary(&c).unwrap()
            } else {
                Cochain::constant(
                    ctx.clone(),
                    1,
                    ValueSpace::Group,
                    Value::Vector(vec![0.0; dim]),
                )
            };
            let noise = random_vectors(order.pow(n as u32), dim, 2e-3, &mut rng);
            let values = all_tuples(order, n)
                .zip(noise)
                .map(|(t, e)| exact.eval(&t).unwrap().add(&e))
                .collect();
            let rho = Cochain::from_table(ctx.clone(), n, ValueSpace::Group, values).unwrap();
            let out = rectify_abelian(&rho, &RectifySettings::default(), &scheme).unwrap();
            let d = coboundary(&out.cochain).unwrap();
            let sup = all_tuples(order, n + 1)
                .map(|t| d.eval(&t).unwrap().norm())
                .fold(0.0, f64::max);
            worst = worst.max(sup);
            runs += 1;
            if out.report.iterations != 1 || out.report.defect_trace.len() != 2 || !(sup <= 1e-12) {
                failures.push(format!(
                    "{} n={n}: iterations {} sup {sup:e}",
                    g.name(),
                    out.report.iterations
                ));
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!(
            "{runs} runs (n = 1..3, orthogonal twisted actions), one step each, exhaustive sup |d rho'| = {worst:.2e} <= 1e-12{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    }
}

fn criterion_6() -> Outcome {
    // C₂ sign representation with ρ(g) = −e^{0.1}.
    let sc = Scenario {
        schema: 1,
        name: None,
        group: GroupSpec::Cyclic { n: 2 },
        target: TargetSpec::GeneralLinear {
            dim: 1,
            field: Field::Real,
        },
        action: ActionSpec::trivial(),
        base: BaseSpec::Representation {
            rep: RepSpec::named("sign"),
        },
        perturbation: PerturbationSpec {
            epsilon: 0.1,
            seed: 0,
            profile: Profile::SinglePair,
            element: Some(1),
            direction: Some(serde_json::json!([[1.0]])),
        },
        settings: RectifySettings::default(),
    };
    let b = sc.build().unwrap();
    let g = GroupElement::Finite(1);
    let scalar = |v: Value| v.matrix().unwrap().data()[0].re;
    let beta = beta_of(&b.input).unwrap();
    let beta_gg = scalar(beta.eval(&[g.clone(), g.clone()]).unwrap());
    let alpha_g = scalar(
        homotopy_average(&beta, &b.input, &b.scheme)
            .unwrap()
            .eval(std::slice::from_ref(&g))
            .unwrap(),
    );
    let eval = EvaluationSet::build(&b.context.group, 2, &Default::default());
    let (stepped, _) = rectify_step(&b.input, &b.scheme, &eval).unwrap();
    let rho_g = scalar(stepped.eval(std::slice::from_ref(&g)).unwrap());
    let sign_err = (beta_gg - 0.2)
        .abs()
        .max((alpha_g + 0.1).abs())
        .max((rho_g + 1.0).abs());

    // C₂ → ℝ with ρ(1) = 0.1, ρ(g) = 0.3: one step lands on the zero map.
    let ctx = Context::new(
        CompactGroup::Finite(build_cyclic(2).unwrap()),
        TargetGroup::abelian(1),
        GAction::Trivial,
    )
    .unwrap();
    let rho = Cochain::from_table(
        ctx.clone(),
        1,
        ValueSpace::Group,
        vec![Value::Vector(vec![0.1]), Value::Vector(vec![0.3])],
    )
    .unwrap();
    // Its defect (0.5) is above the admission bound, so the one-shot
    // formula ρ' = ρ − h(δρ) is applied directly.
    let h = homotopy_last_slot(&coboundary(&rho).unwrap(), &ctx.group.haar_scheme()).unwrap();
    let alpha: Vec<f64> = (0..2)
        .map(|k| {
            h.eval(&[GroupElement::Finite(k)])
                .unwrap()
                .vector()
                .unwrap()[0]
        })
        .collect();
    let corrected: Vec<Value> = (0..2)
        .map(|k| {
            rho.eval(&[GroupElement::Finite(k)])
                .unwrap()
                .sub(&h.eval(&[GroupElement::Finite(k)]).unwrap())
        })
        .collect();
    let abelian_err = corrected
        .iter()
        .map(Value::norm)
        .fold(0.0, f64::max)
        .max((alpha[0] - 0.1).abs())
        .max((alpha[1] - 0.3).abs());
    Outcome {
        passed: sign_err <= 1e-14 && abelian_err <= 1e-14,
        detail: format!(
            "sign: beta(g,g) = {beta_gg:.16}, alpha1(g) = {alpha_g:.16}, rho'(g) = {rho_g:.16}, max error {sign_err:.1e}; \
             abelian: h(d rho) = {alpha:?}, max error {abelian_err:.1e}; tolerance 1e-14"
        ),
    }
}

fn u1_scenario(nodes: usize) -> Scenario {
    let mut sc = template("u1-u2").unwrap();
    sc.group = GroupSpec::U1 { nodes };
    sc
}

fn criterion_7() -> Outcome {
    let mut floors = Vec::new();
    let mut statuses = Vec::new();
    for n in [16, 32, 64] {
        let r = u1_scenario(n).run().unwrap().report;
        floors.push(r.final_defect);
        statuses.push(r.status);
    }
    let su2 = template("su2-u2").unwrap().run().unwrap().report;
    let decreasing = floors.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        passed: decreasing && floors[2] <= 1e-10 && su2.final_defect < 1e-6,
        detail: format!(
            "U(1) floors at N = 16, 32, 64: {:.2e}, {:.2e}, {:.2e} ({:?}), last <= 1e-10; SU(2) final defect {:.2e} < 1e-6 ({:?})",
            floors[0], floors[1], floors[2], statuses, su2.final_defect, su2.status
        ),
    }
}

fn criterion_8() -> Outcome {
    let rt = oracles::exp_log_roundtrip(1000, 8);
    let bch = oracles::bch_order(50, 8);
    Outcome {
        passed: rt.passed && bch.passed,
        detail: format!(
            "exp/log roundtrip worst {:.2e} <= 1e-12 over {} matrices; bch4 |log2(error ratio) - 5| worst {:.3} <= 2 over {} pairs",
            rt.worst, rt.cases, bch.worst, bch.cases
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut mismatched = Vec::new();
    for name in TEMPLATES {
        let sc = template(name).unwrap();
        let a = sc.run().unwrap().report.to_json_string();
        let b = sc.run().unwrap().report.to_json_string();
        if a != b {
            mismatched.push(name);
        }
    }
    Outcome {
        passed: mismatched.is_empty(),
        detail: format!(
            "{} templates run twice, mismatched reports: {mismatched:?}",
            TEMPLATES.len()
        ),
    }
}

#[test]
fn acceptance() {
    let mut converged = Vec::new();
    let outcomes = [
        (1, "oracle suite", criterion_1()),
        (2, "quadratic contraction", criterion_2(&mut converged)),
        (3, "exact output", criterion_3(&converged)),
        (4, "linear closeness law", criterion_4()),
        (5, "abelian one-shot", criterion_5()),
        (6, "hand-checkable fixtures", criterion_6()),
        (7, "continuous-group floor", criterion_7()),
        (8, "numerics", criterion_8()),
        (9, "determinism", criterion_9()),
    ];
    for (id, title, o) in &outcomes {
        report(*id, title, o);
    }
    let failed: Vec<usize> = outcomes
        .iter()
        .filter(|o| !o.2.passed)
        .map(|o| o.0)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

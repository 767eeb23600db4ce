//! Successive approximation of almost-cocycles by exact cocycles.
//!
//! One step replaces `ρ` by `e^{α₁}ρ`, where `α₁` is the Haar average of the
//! defect `β = log δρ` twisted by the almost-action. Each step squares the
//! defect up to a constant, so the defect trace is checked against a
//! quadratic law. Abelian targets are corrected exactly in a single step by
//! the last-slot homotopy.

use serde::{Deserialize, Serialize, Serializer};

use crate::cochain::{
    almost_action, beta_of, coboundary, correction, defect, homotopy_average, homotopy_last_slot,
    near_coboundary_residual, Cochain, EvalConfig, EvaluationSet, Provenance, ValueSpace,
};
use crate::error::{Error, Result};
use crate::groups::{tuple_label, HaarScheme};
use crate::target::Value;

/// Trace entries at or below this are treated as roundoff by the fit.
pub const FIT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RectifySettings {
    pub tol: f64,
    pub max_iter: usize,
    pub input_defect_max: f64,
    pub ad_bound_max: f64,
    pub stagnation_window: usize,
    pub eval: EvalConfig,
}

impl Default for RectifySettings {
    fn default() -> Self {
        RectifySettings {
            tol: 1e-12,
            max_iter: 30,
            input_defect_max: 1.0 / 16.0,
            ad_bound_max: 1e3,
            stagnation_window: 2,
            eval: EvalConfig::default(),
        }
    }
}

impl RectifySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Invalid(format!(
                "settings.tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.input_defect_max > 0.0 && self.input_defect_max <= 0.25) {
            return Err(Error::Invalid(format!(
                "settings.input_defect_max must lie in (0, 0.25], got {}",
                self.input_defect_max
            )));
        }
        if !(self.ad_bound_max >= 1.0) {
            return Err(Error::Invalid(format!(
                "settings.ad_bound_max must be at least 1, got {}",
                self.ad_bound_max
            )));
        }
        if self.stagnation_window == 0 {
            return Err(Error::Invalid(
                "settings.stagnation_window must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    QuadratureFloor,
    MaxIterations,
    Diverged,
    ChartError,
    GateRejected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateRejection {
    /// `"defect"` or `"ad_bound"`.
    pub bound: &'static str,
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub limit: f64,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Pass { defect: f64, ad_max: f64 },
    Reject(GateRejection),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub alpha_sup: f64,
    pub pre_defect: f64,
    pub post_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RectifyReport {
    pub schema: u32,
    pub status: Status,
    pub iterations: usize,
    #[serde(serialize_with = "finite_or_null_vec")]
    pub defect_trace: Vec<f64>,
    #[serde(rename = "fitted_K")]
    pub fitted_k: Option<f64>,
    pub fitted_order: Option<f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub final_defect: f64,
    pub distance: f64,
    /// `distance / ε₀`, the measured Hyers–Ulam constant.
    pub closeness_ratio: Option<f64>,
    /// Sup of `‖β₀ + δ▷α‖` for the accumulated correction `α`.
    pub near_coboundary_residual: Option<f64>,
    pub argmax: String,
    pub gate: Option<GateRejection>,
    pub message: Option<String>,
    pub evaluation: Provenance,
    pub seed: u64,
    pub settings: RectifySettings,
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn finite_or_null_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Option<f64>> = xs.iter().map(|x| x.is_finite().then_some(*x)).collect();
    v.serialize(s)
}

impl RectifyReport {
    /// `iteration,defect` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,defect\n");
        for (k, e) in self.defect_trace.iter().enumerate() {
            out.push_str(&format!("{k},{e:e}\n"));
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Admission: defect at most `input_defect_max` (a chart failure counts as
/// too large) and `‖Ad ρ(s)‖ ≤ ad_bound_max` on every Haar node.
pub fn gate_check(
    rho: &Cochain,
    settings: &RectifySettings,
    scheme: &HaarScheme,
    eval: &EvaluationSet,
) -> Result<Gate> {
    let mut ad_max: f64 = 1.0;
    if rho.arity() == 1 {
        for (s, _) in &scheme.nodes {
            let v = rho.eval(std::slice::from_ref(s))?;
            let ad = match rho.target().ad_operator_norm(&v) {
                Ok(a) => a,
                Err(Error::Singular { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if ad > settings.ad_bound_max {
                return Ok(Gate::Reject(GateRejection {
                    bound: "ad_bound",
                    value: ad,
                    limit: settings.ad_bound_max,
                    witness: s.to_string(),
                }));
            }
            ad_max = ad_max.max(ad);
        }
    }
    match defect(rho, eval) {
        Ok((d, arg)) if d > settings.input_defect_max || d.is_nan() => {
            Ok(Gate::Reject(GateRejection {
                bound: "defect",
                value: d,
                limit: settings.input_defect_max,
                witness: tuple_label(&arg),
            }))
        }
        Ok((d, _)) => Ok(Gate::Pass { defect: d, ad_max }),
        Err(Error::Chart { tuple, .. }) => Ok(Gate::Reject(GateRejection {
            bound: "defect",
            value: f64::INFINITY,
            limit: settings.input_defect_max,
            witness: tuple,
        })),
        Err(e) => Err(e),
    }
}

/// One correction `ρ ↦ e^{α₁}ρ`. The new cochain is tabulated on finite
/// groups and a memoized evaluator on Lie groups.
pub fn rectify_step(
    rho: &Cochain,
    scheme: &HaarScheme,
    eval: &EvaluationSet,
) -> Result<(Cochain, StepDiagnostics)> {
    if rho.target().is_abelian() {
        return Err(Error::KindMismatch(
            "use the abelian one-shot path for vector targets".into(),
        ));
    }
    let pre_defect = defect(rho, eval)?.0;
    let next = correct(rho, scheme)?;
    let post_defect = defect(&next.0, eval)?.0;
    let alpha_sup = eval
        .elements(rho.group())
        .iter()
        .map(|s| next.1.eval(std::slice::from_ref(s)).map(|a| a.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((
        next.0,
        StepDiagnostics {
            alpha_sup,
            pre_defect,
            post_defect,
        },
    ))
}

fn correct(rho: &Cochain, scheme: &HaarScheme) -> Result<(Cochain, Cochain)> {
    let beta = beta_of(rho)?;
    let alpha = homotopy_average(&beta, rho, scheme)?;
    let (a, r) = (alpha.clone(), rho.clone());
    let next = rho.map(ValueSpace::Group, true, move |t, v| {
        let target = r.target();
        Ok(target.mul(&target.exp(&a.eval(t)?)?, &v))
    })?;
    Ok((next, alpha))
}

/// Result of a rectification run: the best iterate and its report.
pub struct Rectified {
    pub cochain: Cochain,
    pub report: RectifyReport,
}

/// Iterates [`rectify_step`] until the defect drops to `tol`, stagnates,
/// grows, or the iteration budget runs out. The iterate with the smallest
/// defect is returned. Abelian targets take the one-shot path.
pub fn rectify(
    rho: &Cochain,
    settings: &RectifySettings,
    scheme: &HaarScheme,
) -> Result<Rectified> {
    settings.validate()?;
    if rho.space() != ValueSpace::Group {
        return Err(Error::KindMismatch(
            "rectify needs a group-valued cochain".into(),
        ));
    }
    if rho.target().is_abelian() {
        return rectify_abelian(rho, settings, scheme);
    }
    if rho.arity() != 1 {
        return Err(Error::NonAbelian(format!("a {}-cochain", rho.arity())));
    }
    let eval = EvaluationSet::build(rho.group(), 2, &settings.eval);
    let mut report = empty_report(settings, &eval);
    let eps0 = match gate_check(rho, settings, scheme, &eval)? {
        Gate::Reject(r) => {
            report.status = Status::GateRejected;
            report.defect_trace = vec![if r.bound == "defect" {
                r.value
            } else {
                defect_or_inf(rho, &eval)
            }];
            report.final_defect = report.defect_trace[0];
            report.message = Some(format!(
                "gate rejected: {} {:e} exceeds {:e} at {}",
                r.bound, r.value, r.limit, r.witness
            ));
            report.gate = Some(r);
            return Ok(Rectified {
                cochain: rho.clone(),
                report,
            });
        }
        Gate::Pass { defect, .. } => defect,
    };
    let mut trace = vec![eps0];
    let mut best = (rho.clone(), eps0);
    let mut current = rho.clone();
    let mut status = if eps0 <= settings.tol {
        Status::Converged
    } else {
        Status::MaxIterations
    };
    let mut message = None;
    let mut iterations = 0;
    while status != Status::Converged && iterations < settings.max_iter {
        let next = match correct(&current, scheme)
            .and_then(|(c, _)| defect(&c, &eval).map(|d| (c, d.0)))
        {
            Ok(n) => n,
            Err(e) if e.is_chart_error() => {
                status = Status::ChartError;
                message = Some(e.to_string());
                break;
            }
            Err(Error::Overflow { norm }) => {
                status = Status::Diverged;
                message = Some(format!(
                    "correction overflowed the exponential range (norm {norm:e})"
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let eps = next.1;
        trace.push(eps);
        current = next.0;
        if eps < best.1 {
            best = (current.clone(), eps);
        }
        let k = trace.len() - 1;
        if eps <= settings.tol {
            status = Status::Converged;
        } else if k >= 2 && eps > trace[k - 1] && trace[k - 1] > trace[k - 2] && eps > eps0 {
            status = Status::Diverged;
            break;
        } else if k >= settings.stagnation_window
            && eps > trace[k - settings.stagnation_window] / 2.0
        {
            status = Status::QuadratureFloor;
            break;
        }
    }
    let rho_out = best.0;
    report.status = status;
    report.iterations = iterations;
    report.final_defect = best.1;
    report.message = message;
    if let Some((k, order)) = fit_contraction(&trace) {
        report.fitted_k = Some(k);
        report.fitted_order = Some(order);
    }
    report.defect_trace = trace;
    report.argmax = defect(&rho_out, &eval)
        .map(|(_, t)| tuple_label(&t))
        .unwrap_or_default();
    let alpha = correction(&rho_out, rho)?;
    // With no step taken the output is the input and the distance is exactly zero.
    report.distance = if iterations == 0 {
        0.0
    } else {
        eval.elements(rho.group())
            .iter()
            .map(|s| alpha.eval(std::slice::from_ref(s)).map(|a| a.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max)
    };
    report.closeness_ratio = (eps0 > 0.0).then(|| report.distance / eps0);
    report.near_coboundary_residual = beta_of(rho)
        .and_then(|b0| near_coboundary_residual(&b0, rho, &alpha, &eval))
        .ok();
    Ok(Rectified {
        cochain: rho_out,
        report,
    })
}

fn defect_or_inf(rho: &Cochain, eval: &EvaluationSet) -> f64 {
    defect(rho, eval).map(|d| d.0).unwrap_or(f64::INFINITY)
}

fn empty_report(settings: &RectifySettings, eval: &EvaluationSet) -> RectifyReport {
    RectifyReport {
        schema: 1,
        status: Status::Converged,
        iterations: 0,
        defect_trace: Vec::new(),
        fitted_k: None,
        fitted_order: None,
        final_defect: 0.0,
        distance: 0.0,
        closeness_ratio: None,
        near_coboundary_residual: None,
        argmax: String::new(),
        gate: None,
        message: None,
        evaluation: eval.provenance.clone(),
        seed: settings.eval.seed,
        settings: settings.clone(),
    }
}

/// One-shot correction on an abelian target: `ρ' = ρ − h(δρ)`.
pub fn rectify_abelian(
    rho: &Cochain,
    settings: &RectifySettings,
    scheme: &HaarScheme,
) -> Result<Rectified> {
    settings.validate()?;
    if !rho.target().is_abelian() {
        return Err(Error::KindMismatch(
            "the one-shot path needs an abelian target".into(),
        ));
    }
    if rho.arity() == 0 {
        return Err(Error::Invalid(
            "the one-shot path needs arity at least 1".into(),
        ));
    }
    let eval = EvaluationSet::build(rho.group(), rho.arity() + 1, &settings.eval);
    let mut report = empty_report(settings, &eval);
    let eps0 = match gate_check(rho, settings, scheme, &eval)? {
        Gate::Reject(r) => {
            report.status = Status::GateRejected;
            report.defect_trace = vec![r.value];
            report.final_defect = r.value;
            report.message = Some(format!(
                "gate rejected: {} {:e} exceeds {:e} at {}",
                r.bound, r.value, r.limit, r.witness
            ));
            report.gate = Some(r);
            return Ok(Rectified {
                cochain: rho.clone(),
                report,
            });
        }
        Gate::Pass { defect, .. } => defect,
    };
    let gamma = coboundary(rho)?;
    let h = homotopy_last_slot(&gamma, scheme)?;
    let hh = h.clone();
    let out = rho.map(ValueSpace::Group, true, move |t, v| Ok(v.sub(&hh.eval(t)?)))?;
    let (eps1, arg) = defect(&out, &eval)?;
    report.defect_trace = vec![eps0, eps1];
    report.iterations = 1;
    report.final_defect = eps1;
    report.argmax = tuple_label(&arg);
    report.status = if eps1 <= settings.tol {
        Status::Converged
    } else {
        Status::QuadratureFloor
    };
    report.distance = eval
        .prefixes(rho.group(), rho.arity())
        .iter()
        .map(|t| h.eval(t).map(|x| x.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.closeness_ratio = (eps0 > 0.0).then(|| report.distance / eps0);
    Ok(Rectified {
        cochain: out,
        report,
    })
}

/// Least-squares fit of `log ε_{k+1} = order·log ε_k + log K` over the
/// leading trace entries above [`FIT_FLOOR`]. Needs at least three such
/// entries. A flat trace fits with order 0.
pub fn fit_contraction(trace: &[f64]) -> Option<(f64, f64)> {
    let usable: Vec<f64> = trace
        .iter()
        .copied()
        .take_while(|e| e.is_finite() && *e > FIT_FLOOR)
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = usable[..usable.len() - 1].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = usable[1..].iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = if sxx <= 1e-24 * (1.0 + mx * mx) {
        0.0
    } else {
        sxy / sxx
    };
    let log_k = my - order * mx;
    Some((log_k.exp(), order))
}

/// `ε_{k+1} ≤ c·ε_k²` for consecutive pairs, where a pair whose bound falls
/// under `floor` only needs `ε_{k+1} ≤ floor`.
pub fn quadratic_law_holds(trace: &[f64], c: f64, floor: f64) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] <= (c * w[0] * w[0]).max(floor))
}

/// `s ▷ x`, re-exported for diagnostics that need the almost-action.
pub fn almost_action_at(
    rho: &Cochain,
    s: &crate::groups::GroupElement,
    x: &Value,
) -> Result<Value> {
    almost_action(rho, s, x)
}

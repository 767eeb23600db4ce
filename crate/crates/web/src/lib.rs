//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point takes plain strings and numbers and returns a JSON
//! string; errors come back as a string message.

use cocycle_rectifier::scenarios::{sweep, template, Scenario, TEMPLATES};
use wasm_bindgen::prelude::*;

fn scenario_for(name: &str, epsilon: f64, seed: u64) -> Result<Scenario, String> {
    let mut sc = template(name).ok_or_else(|| format!("unknown template `{name}`"))?;
    sc.perturbation.epsilon = epsilon;
    sc.perturbation.seed = seed;
    Ok(sc)
}

fn run(sc: &Scenario) -> Result<String, String> {
    let out = sc.run().map_err(|e| e.to_string())?;
    Ok(out.report.to_json_string())
}

/// Names of the built-in templates as a JSON array.
pub fn template_names() -> String {
    serde_json::to_string(&TEMPLATES).expect("json")
}

/// Rectifies a perturbed template and returns the report.
pub fn rectify_template(name: &str, epsilon: f64, seed: u64) -> Result<String, String> {
    run(&scenario_for(name, epsilon, seed)?)
}

/// Rectifies a scenario given as JSON text and returns the report.
pub fn rectify_scenario(json: &str) -> Result<String, String> {
    run(&Scenario::from_json_str(json).map_err(|e| e.to_string())?)
}

/// Sweeps a template over comma-separated epsilons; returns rows and the
/// fitted log-log slope.
pub fn sweep_template(name: &str, epsilons: &str, seed: u64) -> Result<String, String> {
    let eps = epsilons
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let res = sweep(&scenario_for(name, 0.0, seed)?, &eps, 1);
    Ok(serde_json::json!({"slope": res.slope, "rows": res.rows}).to_string())
}

/// A template's scenario JSON, for editing on the page.
pub fn template_json(name: &str) -> Result<String, String> {
    Ok(template(name)
        .ok_or_else(|| format!("unknown template `{name}`"))?
        .to_json_string())
}

#[wasm_bindgen(js_name = templateNames)]
pub fn js_template_names() -> String {
    template_names()
}

#[wasm_bindgen(js_name = templateJson)]
pub fn js_template_json(name: &str) -> Result<String, JsValue> {
    template_json(name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rectifyTemplate)]
pub fn js_rectify_template(name: &str, epsilon: f64, seed: u32) -> Result<String, JsValue> {
    rectify_template(name, epsilon, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rectifyScenario)]
pub fn js_rectify_scenario(json: &str) -> Result<String, JsValue> {
    rectify_scenario(json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sweepTemplate)]
pub fn js_sweep_template(name: &str, epsilons: &str, seed: u32) -> Result<String, JsValue> {
    sweep_template(name, epsilons, seed.into()).map_err(|e| JsValue::from_str(&e))
}

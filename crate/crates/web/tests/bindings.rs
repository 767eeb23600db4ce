use cocycle_web::{
    rectify_scenario, rectify_template, sweep_template, template_json, template_names,
};

fn parse(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn lists_templates() {
    let names = parse(&template_names());
    assert!(names.as_array().unwrap().iter().any(|n| n == "s3-gl2"));
}

#[test]
fn rectifies_a_template() {
    let r = parse(&rectify_template("q8-u2", 1e-2, 3).unwrap());
    assert_eq!(r["status"], "Converged");
    assert_eq!(r["seed"], 3);
    assert!(rectify_template("nope", 1e-2, 0)
        .unwrap_err()
        .contains("unknown template"));
}

#[test]
fn rectifies_edited_json_and_reports_errors() {
    let json = template_json("c4-twisted-r2").unwrap();
    let r = parse(&rectify_scenario(&json).unwrap());
    assert_eq!(r["status"], "Converged");
    assert!(rectify_scenario("{\"group\": 1}").is_err());
}

#[test]
fn sweeps_a_template() {
    let r = parse(&sweep_template("s3-gl2", "1e-4, 1e-3, 1e-2", 1).unwrap());
    assert_eq!(r["rows"].as_array().unwrap().len(), 3);
    let slope = r["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "{slope}");
    assert!(sweep_template("s3-gl2", "x", 1).is_err());
}

//! `cocycle-rectifier`: generate scenarios, rectify them, verify cochain
//! tables, sweep perturbation sizes and run the oracle self-test.
//!
//! Exit codes: 0 success (Converged, verify within tolerance, sweep
//! finished); 1 self-test or verify failure; 2 malformed input or usage;
//! 3 QuadratureFloor or MaxIterations; 4 Diverged or ChartError;
//! 5 GateRejected.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cocycle_rectifier::cochain::{defect, Cochain, EvaluationSet, ValueSpace};
use cocycle_rectifier::groups::{tuple_label, FiniteGroup};
use cocycle_rectifier::oracles;
use cocycle_rectifier::rectify::{gate_check, Gate, Status};
use cocycle_rectifier::scenarios::{sweep, template, BaseSpec, Scenario, TEMPLATES};
use cocycle_rectifier::Error;

const SEED_ENV: &str = "COCYCLE_RECTIFIER_SEED";

#[derive(Parser)]
#[command(
    name = "cocycle-rectifier",
    version,
    about = "Deform almost-cocycles on compact groups into exact cocycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Target defect.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Perturbation seed (falls back to COCYCLE_RECTIFIER_SEED when the
    /// scenario has none).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scenario template.
    Gen {
        template: String,
        /// Output path (default: standard output).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rectify a scenario; writes the report JSON, the defect-trace CSV and,
    /// on finite groups, the rectified cochain table.
    Rectify {
        scenario: PathBuf,
        /// Report path (default: `<scenario>.report.json`).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Measure the defect of a cochain table in a scenario's setting.
    Verify {
        cochain: PathBuf,
        scenario: PathBuf,
        /// Also write the defect report here.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Rectify once per epsilon and fit the distance law.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated perturbation sizes (may be empty).
        #[arg(long, allow_hyphen_values = true)]
        epsilons: String,
        /// CSV path (default: `<scenario>.sweep.csv`); the fit goes next to it
        /// with a `.json` extension.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the oracle suite.
    Selftest {
        /// Validate a Cayley table fixture and add it to the exhaustive oracles.
        #[arg(long)]
        cayley: Option<PathBuf>,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Chart { .. }
        | Error::BranchCut { .. }
        | Error::Overflow { .. }
        | Error::NoConvergence(_)
        | Error::NonFinite { .. }
        | Error::Singular { .. } => 4,
        _ => 2,
    }
}

fn fail_with(context: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure {
        code: error_code(&e),
        message: format!("{context}: {e}"),
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Converged => 0,
        Status::QuadratureFloor | Status::MaxIterations => 3,
        Status::Diverged | Status::ChartError => 4,
        Status::GateRejected => 5,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path, overrides: Option<&Overrides>) -> Result<Scenario, Failure> {
    let text = read(path)?;
    let mut sc = Scenario::from_json_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if let Some(o) = overrides {
        let has_seed = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .is_some_and(|v| v["perturbation"].get("seed").is_some());
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| Failure::input(format!("{SEED_ENV}={s:?}: {e}")))?,
            ),
            Err(_) => None,
        };
        if let Some(seed) = o.seed.or(if has_seed { None } else { env_seed }) {
            sc.perturbation.seed = seed;
        }
        if let Some(tol) = o.tol {
            sc.settings.tol = tol;
        }
        if let Some(m) = o.max_iter {
            sc.settings.max_iter = m;
        }
    }
    Ok(sc)
}

/// Writes every file to a temporary sibling first and renames them only
/// once all writes succeeded.
fn write_atomic(files: &[(PathBuf, String)]) -> Result<(), Failure> {
    let io = |p: &Path, e: std::io::Error| Failure::input(format!("{}: {e}", p.display()));
    let mut staged = Vec::new();
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io(path, e))?;
        std::io::Write::write_all(&mut tmp, contents.as_bytes()).map_err(|e| io(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| io(path, e.error))?;
    }
    Ok(())
}

/// `dir/name.json` → `dir/name<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let s = path.to_string_lossy();
    let stem = s
        .strip_suffix(".json")
        .or_else(|| s.strip_suffix(".csv"))
        .unwrap_or(&s);
    PathBuf::from(format!("{stem}{suffix}"))
}

fn cmd_gen(name: &str, output: Option<&Path>) -> Result<u8, Failure> {
    let sc = template(name).ok_or_else(|| {
        Failure::input(format!(
            "unknown template `{name}`; available: {}",
            TEMPLATES.join(", ")
        ))
    })?;
    let text = sc.to_json_string();
    match output {
        Some(p) => write_atomic(&[(p.to_path_buf(), text)])?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_rectify(path: &Path, output: Option<&Path>, overrides: &Overrides) -> Result<u8, Failure> {
    let sc = load_scenario(path, Some(overrides))?;
    let built = sc.build().map_err(fail_with(&path.display().to_string()))?;
    let out = cocycle_rectifier::rectify::rectify(&built.input, &built.settings, &built.scheme)
        .map_err(fail_with("rectify"))?;
    let report_path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sibling(path, ".report.json"));
    let mut files = vec![
        (report_path.clone(), out.report.to_json_string()),
        (sibling(&report_path, ".trace.csv"), out.report.trace_csv()),
    ];
    if built.context.group.is_finite() {
        let table = out
            .cochain
            .to_json()
            .map_err(fail_with("rectified cochain"))?;
        files.push((
            sibling(&report_path, ".cochain.json"),
            serde_json::to_string_pretty(&table).expect("json") + "\n",
        ));
    }
    write_atomic(&files)?;
    let r = &out.report;
    println!(
        "{:?} after {} iteration(s): final defect {:e}, distance {:e}",
        r.status, r.iterations, r.final_defect, r.distance
    );
    if let Some(m) = &r.message {
        println!("{m}");
    }
    println!("report: {}", report_path.display());
    Ok(status_code(r.status))
}

fn cmd_verify(
    cochain: &Path,
    scenario: &Path,
    output: Option<&Path>,
    tol: Option<f64>,
) -> Result<u8, Failure> {
    let sc = load_scenario(scenario, None)?;
    let built = sc
        .build()
        .map_err(fail_with(&scenario.display().to_string()))?;
    let text = read(cochain)?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", cochain.display())))?;
    let rho = Cochain::from_json(built.context.clone(), ValueSpace::Group, &raw)
        .map_err(|e| Failure::input(format!("{}: {e}", cochain.display())))?;
    let expected = match &sc.base {
        BaseSpec::Zero { arity } | BaseSpec::Table { arity, .. } => *arity,
        _ => 1,
    };
    if rho.arity() != expected {
        return Err(Failure::input(format!(
            "{}: arity {} does not match the scenario's arity {expected}",
            cochain.display(),
            rho.arity()
        )));
    }
    let settings = &built.settings;
    let tol = tol.unwrap_or(settings.tol);
    let eval = EvaluationSet::build(&built.context.group, expected + 1, &settings.eval);
    let (value, argmax) = match defect(&rho, &eval) {
        Ok((d, t)) => (Some(d), tuple_label(&t)),
        Err(Error::Chart { tuple, .. }) => (None, tuple),
        Err(e) => return Err(fail_with("verify")(e)),
    };
    let gate =
        match gate_check(&rho, settings, &built.scheme, &eval).map_err(fail_with("verify"))? {
            Gate::Pass { .. } => serde_json::json!({"admitted": true}),
            Gate::Reject(r) => serde_json::json!({"admitted": false, "rejection": r}),
        };
    let within = value.is_some_and(|d| d <= tol);
    let report = serde_json::json!({
        "schema": 1,
        "defect": value,
        "argmax": argmax,
        "tol": tol,
        "within_tol": within,
        "gate": gate,
        "evaluation": eval.provenance,
    });
    let text = serde_json::to_string_pretty(&report).expect("json") + "\n";
    if let Some(p) = output {
        write_atomic(&[(p.to_path_buf(), text.clone())])?;
    }
    print!("{text}");
    Ok(if within { 0 } else { 1 })
}

fn parse_epsilons(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|e| e.is_finite() && *e >= 0.0)
                .ok_or_else(|| {
                    Failure::input(format!("--epsilons: `{t}` is not a nonnegative number"))
                })
        })
        .collect()
}

fn cmd_sweep(
    path: &Path,
    epsilons: &str,
    output: Option<&Path>,
    jobs: usize,
    overrides: &Overrides,
) -> Result<u8, Failure> {
    let sc = load_scenario(path, Some(overrides))?;
    let eps = parse_epsilons(epsilons)?;
    sc.context()
        .map_err(fail_with(&path.display().to_string()))?;
    let res = sweep(&sc, &eps, jobs.max(1));
    let csv_path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sibling(path, ".sweep.csv"));
    let json_path = sibling(&csv_path, ".json");
    let fit = serde_json::json!({"schema": 1, "slope": res.slope, "rows": res.rows});
    write_atomic(&[
        (csv_path.clone(), res.to_csv()),
        (
            json_path,
            serde_json::to_string_pretty(&fit).expect("json") + "\n",
        ),
    ])?;
    match res.slope {
        Some(s) => println!(
            "{} rows, log-log slope of distance vs epsilon {s:.4}",
            res.rows.len()
        ),
        None => println!(
            "{} rows, too few converged rows for a slope",
            res.rows.len()
        ),
    }
    println!("sweep: {}", csv_path.display());
    Ok(0)
}

fn load_cayley(path: &Path) -> Result<Result<FiniteGroup, Error>, Failure> {
    let text = read(path)?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let table = raw.get("table").unwrap_or(&raw);
    let table: Vec<Vec<usize>> = serde_json::from_value(table.clone()).map_err(|e| {
        Failure::input(format!(
            "{}: expected a square table of indices: {e}",
            path.display()
        ))
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FiniteGroup::from_cayley(name, table))
}

fn cmd_selftest(cayley: Option<&Path>) -> Result<u8, Failure> {
    let mut extra = Vec::new();
    if let Some(p) = cayley {
        match load_cayley(p)? {
            Ok(g) => {
                println!(
                    "cayley fixture {}: valid group of order {}",
                    p.display(),
                    g.order()
                );
                extra.push(g);
            }
            Err(e) => {
                println!("FAIL  cayley fixture {}: {e}", p.display());
                return Ok(1);
            }
        }
    }
    let start = std::time::Instant::now();
    let results = oracles::suite(&extra);
    let mut ok = true;
    for r in &results {
        println!(
            "{}  {:<40} {:>8} cases  worst {:.3e} (tolerance {:e})  {:.2}s",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.cases,
            r.worst,
            r.tolerance,
            r.elapsed.as_secs_f64()
        );
        if let Some(f) = &r.failure {
            println!("      failing case: {f}");
        }
        ok &= r.passed;
    }
    println!("total {:.2}s", start.elapsed().as_secs_f64());
    Ok(if ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen { template, output } => cmd_gen(template, output.as_deref()),
        Command::Rectify {
            scenario,
            output,
            overrides,
        } => cmd_rectify(scenario, output.as_deref(), overrides),
        Command::Verify {
            cochain,
            scenario,
            output,
            tol,
        } => cmd_verify(cochain, scenario, output.as_deref(), *tol),
        Command::Sweep {
            scenario,
            epsilons,
            output,
            jobs,
            overrides,
        } => cmd_sweep(scenario, epsilons, output.as_deref(), *jobs, overrides),
        Command::Selftest { cayley } => cmd_selftest(cayley.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

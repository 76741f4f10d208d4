//! `isojet run` drives the embedding and characteristic stages on a metric
//! document; `isojet explain` prints the plan without computing anything.
//!
//! Exit codes: 0 all checks pass, 1 internal error or failed check, 2 invalid
//! input or configuration, 3 characteristic failure at a requested solve.
//! Failures are written to stderr as one JSON object per line.

mod pipeline;
mod plan;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isojet::io::MetricInput;
use isojet::scalar::parse_rational;
use isojet::{Mode, Rational, Scalar};
use serde_json::{json, Value};

use crate::pipeline::{error_json, Config};
use crate::plan::{default_stages, parse_stages, validate, Stage};

#[derive(Parser)]
#[command(name = "isojet", version, about = "Power-series isometric embeddings and characteristic analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected stages and write report.json plus data files.
    Run(RunArgs),
    /// Print the stage plan and dimensions without computing.
    Explain(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Args)]
struct RunArgs {
    /// Metric document (JSON).
    #[arg(long, env = "ISOJET_INPUT")]
    input: PathBuf,
    /// Output directory.
    #[arg(long, env = "ISOJET_OUT", default_value = "isojet-out")]
    out: PathBuf,
    /// Comma-separated stages; all applicable stages when omitted, none when empty.
    #[arg(long, env = "ISOJET_STAGES")]
    stages: Option<String>,
    /// Jet order K (overrides the document).
    #[arg(long = "order", env = "ISOJET_ORDER")]
    order: Option<usize>,
    /// Coefficient field (overrides the document).
    #[arg(long, env = "ISOJET_MODE", value_enum)]
    mode: Option<ModeArg>,
    /// Initial perturbation scale for the singular data, as a rational. Small
    /// values inflate the high-order coefficients of the float point solves.
    #[arg(long, env = "ISOJET_EPS", default_value = "1/2")]
    eps: String,
    /// Hypersurface points x' for base-point solves: coordinates separated by
    /// ',' and points by ';'. Defaults to x' = (±1/10, 0, ...).
    #[arg(long, env = "ISOJET_POINTS")]
    points: Option<String>,
    /// Integrator step for bicharacteristic strips.
    #[arg(long, env = "ISOJET_STEP", default_value_t = 1e-3)]
    step: f64,
    /// Trust radius of the Hamilton-Jacobi phase series.
    #[arg(long, env = "ISOJET_TRUST_RADIUS", default_value_t = isojet::characteristics::DEFAULT_TRUST_RADIUS)]
    trust_radius: f64,
    /// Worker threads for point solves and conoid rays.
    #[arg(long, env = "ISOJET_JOBS")]
    jobs: Option<usize>,
    /// Seed for sampled checks.
    #[arg(long, env = "ISOJET_SEED", default_value_t = 0)]
    seed: u64,
}

/// A failure before any stage runs, with its exit code.
struct Fatal {
    code: u8,
    body: Value,
}

impl Fatal {
    fn usage(kind: &str, message: impl Into<String>) -> Fatal {
        Fatal {
            code: 2,
            body: json!({ "kind": kind, "message": message.into() }),
        }
    }
}

struct Prepared {
    input: MetricInput,
    mode: Mode,
    config: Config,
}

fn prepare(args: &RunArgs) -> Result<Prepared, Fatal> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Fatal::usage("io", format!("{}: {e}", args.input.display())))?;
    let input = MetricInput::from_json(&text).map_err(|e| Fatal {
        code: 2,
        body: error_json(&e),
    })?;
    let k = args.order.unwrap_or(input.k);
    if k < 2 {
        return Err(Fatal::usage("config", "order K must be at least 2"));
    }
    let mode = match args.mode {
        Some(ModeArg::Exact) => Mode::Exact,
        Some(ModeArg::Float) => Mode::Float,
        None => input.mode,
    };
    let singular = input.has_metric()
        && input
            .metric::<Rational>(0)
            .map(|g| Scalar::is_zero(&g.g_nn().constant_term()))
            .map_err(|e| Fatal {
                code: 2,
                body: error_json(&e),
            })?;
    let stages = match &args.stages {
        Some(text) => parse_stages(text).map_err(|m| Fatal::usage("config", m))?,
        None => default_stages(&input, singular),
    };
    validate(&stages, &input).map_err(|e| {
        let kind = match e {
            plan::PlanError::Dependency(_) => "dependency",
            plan::PlanError::MissingInput(_) => "schema",
        };
        Fatal::usage(kind, e.to_string())
    })?;
    let eps = parse_rational(&args.eps)
        .filter(|e| e.is_positive())
        .ok_or_else(|| Fatal::usage("config", format!("eps {:?} is not a positive rational", args.eps)))?;
    let points = match &args.points {
        Some(text) => parse_points(text, input.n)?,
        None if input.n >= 2 => [0.1, -0.1]
            .iter()
            .map(|&v| {
                let mut p = vec![0.0; input.n - 1];
                p[0] = v;
                p
            })
            .collect(),
        None => Vec::new(),
    };
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(Fatal::usage("config", "step must be positive"));
    }
    if !(args.trust_radius > 0.0) {
        return Err(Fatal::usage("config", "trust radius must be positive"));
    }
    Ok(Prepared {
        config: Config {
            stages,
            k,
            eps,
            points,
            step: args.step,
            trust_radius: args.trust_radius,
            jobs: args.jobs,
            seed: args.seed,
        },
        input,
        mode,
    })
}

fn parse_points(text: &str, n: usize) -> Result<Vec<Vec<f64>>, Fatal> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let coords = p
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Fatal::usage("config", format!("point {p:?}: {e}")))?;
            if coords.len() + 1 != n {
                return Err(Fatal::usage(
                    "config",
                    format!("point {p:?} needs {} coordinates", n.saturating_sub(1)),
                ));
            }
            Ok(coords)
        })
        .collect()
}

fn write_outputs(out: &Path, report: &Value, artifacts: &std::collections::BTreeMap<&'static str, String>) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(out.join("report.json"), text + "\n")?;
    for (name, contents) in artifacts {
        std::fs::write(out.join(name), contents)?;
    }
    Ok(())
}

fn emit(line: &Value) {
    eprintln!("{}", serde_json::to_string(line).expect("json line"));
}

fn run(args: &RunArgs) -> Result<u8, Fatal> {
    let p = prepare(args)?;
    let outcome = match p.mode {
        Mode::Exact => pipeline::run::<Rational>(&p.input, &p.config),
        Mode::Float => pipeline::run::<f64>(&p.input, &p.config),
    };
    write_outputs(&args.out, &outcome.report, &outcome.artifacts).map_err(|e| Fatal {
        code: 1,
        body: json!({ "kind": "io", "message": format!("{}: {e}", args.out.display()) }),
    })?;
    for stage in &p.config.stages {
        let name = stage.name();
        let entry = &outcome.report["stages"][name];
        let status = if entry["pass"] == Value::Bool(true) { "pass" } else { "FAIL" };
        println!("{name:<16} {status}");
    }
    println!("report written to {}", args.out.join("report.json").display());
    for f in &outcome.failures {
        emit(f);
    }
    if outcome.exit_code != 0 {
        emit(&json!({ "exit_code": outcome.exit_code }));
    }
    Ok(outcome.exit_code as u8)
}

fn explain(args: &RunArgs) -> Result<u8, Fatal> {
    let p = prepare(args)?;
    print!("{}", plan::explain(&p.config.stages, &p.input, p.config.k, p.mode));
    if p.config.stages.contains(&Stage::SolvePoints) {
        println!("base points: {:?}", p.config.points);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Explain(args) => explain(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let mut body = f.body;
            body["exit_code"] = json!(f.code);
            emit(&body);
            ExitCode::from(f.code)
        }
    }
}

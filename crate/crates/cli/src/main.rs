//! `pkw`: solve the Kazdan-Warner equation and related problems on a graph file.

mod json;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use graph_pkw::analysis::{estimate_poincare_constant, PoincareOptions};
use graph_pkw::elliptic::{default_residual_tol, solve_l, solve_p_poisson, EllipticOptions, EllipticReport, OperatorL};
use graph_pkw::io::{parse_graph, vertex_function_from_json, vertex_function_to_json};
use graph_pkw::kw::{estimate_c_minus, precheck, residual, solve, KwError, SolvabilityVerdict, Status};
use graph_pkw::{Function, Graph, Options, Problem, Report, P};

use json::num;

const OK: u8 = 0;
const USAGE: u8 = 1;
const UNSOLVABLE: u8 = 2;
const FAILED: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Solve,
    Verify,
    Precheck,
    Cmin,
    Poincare,
    Lsolve,
    Poisson,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Verify => "verify",
            Self::Precheck => "precheck",
            Self::Cmin => "cmin",
            Self::Poincare => "poincare",
            Self::Lsolve => "lsolve",
            Self::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pkw",
    version,
    about = "p-Laplacian and Kazdan-Warner solvers on weighted graphs"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Graph file: {"vertices":[{"id","mu"}],"edges":[{"u","v","w"}]}.
    #[arg(long)]
    graph: PathBuf,
    /// Vertex-function file for h.
    #[arg(long, conflicts_with = "h_const")]
    h: Option<PathBuf>,
    /// Constant value for h.
    #[arg(long, allow_hyphen_values = true)]
    h_const: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Residual tolerance; defaults to 1e-8 for p = 2 and 1e-6 otherwise.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Candidate solution for `verify`: a vertex-function file or a `solve` report.
    #[arg(long)]
    u: Option<PathBuf>,
    /// Vertex-function file for k (`lsolve`).
    #[arg(long, conflicts_with = "k_const")]
    k: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    k_const: Option<f64>,
    /// Vertex-function file for the right-hand side f (`lsolve`, `poisson`).
    #[arg(long, conflicts_with = "f_const")]
    f: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    f_const: Option<f64>,
}

/// A failure before any solver ran; exits with status 1.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn read_json(path: &PathBuf, what: &str) -> Result<Value, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("{what}: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Usage(format!("{what}: malformed JSON in {}: {e}", path.display())))
}

fn function(g: &Graph, path: &Option<PathBuf>, constant: Option<f64>, name: &str) -> Result<Function, Usage> {
    match (path, constant) {
        (Some(_), Some(_)) => Err(Usage(format!("give only one of --{name} and --{name}-const"))),
        (Some(p), None) => {
            let doc = read_json(p, name)?;
            vertex_function_from_json(&doc, g).map_err(|e| Usage(format!("{name}: {e}")))
        }
        (None, Some(x)) if x.is_finite() => Ok(Function::constant(g.num_vertices(), x)),
        (None, Some(_)) => Err(Usage(format!("--{name}-const must be finite"))),
        (None, None) => Err(Usage(format!("one of --{name} or --{name}-const is required"))),
    }
}

/// Accepts a bare vertex function or a report with a `solution` object.
fn candidate(g: &Graph, path: &PathBuf) -> Result<Function, Usage> {
    let doc = read_json(path, "u")?;
    let report = doc.get("report").unwrap_or(&doc);
    let inner = match report.get("solution") {
        Some(Value::Null) => return Err(Usage("u: report has no solution".into())),
        Some(s) => s,
        None => &doc,
    };
    vertex_function_from_json(inner, g).map_err(|e| Usage(format!("u: {e}")))
}

fn source_echo(path: &Option<PathBuf>, constant: Option<f64>) -> Value {
    match (path, constant) {
        (Some(p), _) => json!({ "file": p.display().to_string() }),
        (None, Some(x)) => json!({ "const": num(x) }),
        (None, None) => Value::Null,
    }
}

fn echo(cli: &Cli) -> Value {
    json!({
        "command": cli.command.name(),
        "graph": cli.graph.display().to_string(),
        "h": source_echo(&cli.h, cli.h_const),
        "k": source_echo(&cli.k, cli.k_const),
        "f": source_echo(&cli.f, cli.f_const),
        "c": cli.c.map(num),
        "p": num(cli.p),
        "tol": cli.tol.map(num),
        "seed": cli.seed,
    })
}

fn verdict_json(v: &SolvabilityVerdict) -> Value {
    json!({ "status": format!("{:?}", v.status), "reason": v.reason.as_str() })
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Solvable => OK,
        Status::Unsolvable => UNSOLVABLE,
        Status::Unknown => FAILED,
    }
}

fn report_json(g: &Graph, r: &Report) -> Value {
    json!({
        "verdict": verdict_json(&r.verdict),
        "case": format!("{:?}", r.case),
        "converged": r.converged,
        "solution": r.solution.as_ref().map(|u| vertex_function_to_json(g, u)),
        "residual_inf": num(r.residual_inf),
        "residual_tol": num(r.residual_tol),
        "iterations": r.iterations,
        "multiplier": r.multiplier.map(num),
        "monotone_trace": r.monotone_trace.as_ref().map(|t| t.iter().map(|&x| num(x)).collect::<Vec<_>>()),
        "failure": r.failure,
    })
}

fn elliptic_json(g: &Graph, r: &EllipticReport<f64>) -> Value {
    json!({
        "converged": r.converged,
        "solution": vertex_function_to_json(g, &r.solution),
        "residual_inf": num(r.residual_inf),
        "residual_tol": num(r.residual_tol),
        "iterations": r.iterations,
    })
}

fn kw_problem<'a>(cli: &Cli, g: &'a Graph, p: P) -> Result<Problem<'a>, Usage> {
    let h = function(g, &cli.h, cli.h_const, "h")?;
    let c = cli.c.ok_or_else(|| Usage("--c is required".into()))?;
    Ok(Problem::new(g, p, c, h)?)
}

fn kw_options(cli: &Cli) -> Options {
    Options {
        residual_tol: cli.tol,
        ..Options::default()
    }
}

fn elliptic_options(cli: &Cli) -> EllipticOptions<f64> {
    EllipticOptions {
        residual_tol: cli.tol,
        ..EllipticOptions::default()
    }
}

fn run(cli: &Cli) -> Result<(u8, Value), Usage> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Usage("--tol must be positive".into()));
        }
    }
    let text = fs::read_to_string(&cli.graph)
        .map_err(|e| Usage(format!("graph: cannot read {}: {e}", cli.graph.display())))?;
    let g = parse_graph(&text).map_err(|e| Usage(format!("graph: {e}")))?;
    let p = P::new(cli.p).map_err(|e| Usage(format!("--p: {e}")))?;
    let mut out = serde_json::Map::new();
    let code = match cli.command {
        Command::Precheck => {
            let v = precheck(&kw_problem(cli, &g, p)?);
            out.insert("verdict".into(), verdict_json(&v));
            status_code(v.status)
        }
        Command::Solve => match solve(&kw_problem(cli, &g, p)?, &kw_options(cli)) {
            Ok(r) => {
                out.insert("report".into(), report_json(&g, &r));
                if r.converged {
                    OK
                } else if r.verdict.status == Status::Unsolvable {
                    UNSOLVABLE
                } else {
                    FAILED
                }
            }
            Err(e) => {
                out.insert("error".into(), e.to_string().into());
                FAILED
            }
        },
        Command::Verify => {
            let prob = kw_problem(cli, &g, p)?;
            let path = cli
                .u
                .as_ref()
                .ok_or_else(|| Usage("--u is required for verify".into()))?;
            let u = candidate(&g, path)?;
            let tol = cli.tol.unwrap_or_else(|| default_residual_tol(p));
            let res = residual(&prob, &u).sup_norm();
            let ok = res <= tol;
            out.insert("verified".into(), ok.into());
            out.insert("residual_inf".into(), num(res));
            out.insert("residual_tol".into(), num(tol));
            if ok {
                OK
            } else {
                FAILED
            }
        }
        Command::Cmin => {
            let h = function(&g, &cli.h, cli.h_const, "h")?;
            match estimate_c_minus(&g, p, &h, &kw_options(cli)) {
                Ok(e) => {
                    let bound = |x: f64| json!({ "value": num(x), "negative_infinity": x == f64::NEG_INFINITY });
                    out.insert("c_solvable".into(), bound(e.c_solvable));
                    out.insert("c_unresolved".into(), bound(e.c_unresolved));
                    out.insert("probes".into(), e.probes.into());
                    out.insert("note".into(), e.note.into());
                    OK
                }
                Err(KwError::Precondition(why)) => {
                    out.insert("error".into(), why.into());
                    UNSOLVABLE
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Poincare => {
            let opts = PoincareOptions {
                seed: cli.seed,
                ..PoincareOptions::default()
            };
            let est = estimate_poincare_constant(&g, p, &opts);
            out.insert("constant".into(), num(est.constant));
            out.insert("lower_bound".into(), true.into());
            out.insert("witness".into(), vertex_function_to_json(&g, &est.witness));
            out.insert("samples".into(), est.samples.into());
            OK
        }
        Command::Lsolve => {
            let k = function(&g, &cli.k, cli.k_const, "k")?;
            let f = function(&g, &cli.f, cli.f_const, "f")?;
            let op = OperatorL::new(&g, p, k)?;
            let r = solve_l(&op, &f, &elliptic_options(cli))?;
            out.insert("report".into(), elliptic_json(&g, &r));
            if r.converged {
                OK
            } else {
                FAILED
            }
        }
        Command::Poisson => {
            let f = function(&g, &cli.f, cli.f_const, "f")?;
            let r = solve_p_poisson(&g, p, &f, &elliptic_options(cli))?;
            out.insert("report".into(), elliptic_json(&g, &r));
            if r.converged {
                OK
            } else {
                FAILED
            }
        }
    };
    Ok((code, Value::Object(out)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let (code, mut body) = match run(&cli) {
        Ok(r) => r,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(USAGE);
        }
    };
    let obj = body.as_object_mut().expect("report is an object");
    obj.insert("command".into(), echo(&cli));
    obj.insert("exit_code".into(), code.into());
    obj.insert("wall_time_s".into(), num(start.elapsed().as_secs_f64()));
    let text = json::to_string(&body);
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(USAGE);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}

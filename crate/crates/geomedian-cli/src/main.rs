//! Command-line front end: reads an instance from CSV or JSON, runs the
//! requested solver, and prints a JSON report to stdout.
//!
//! Exit codes: 0 for a solved instance, 2 when the iteration budget ran out,
//! 1 for input or usage errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use geomedian::core::{self, Instance, Point};
use geomedian::weiszfeld::{self, EscapePolicy, IterationTrace, SolverConfig};
use geomedian::{exact3, oracle, subdiff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Closed-form three-point solver when it applies, otherwise the
    /// fixed-point iteration.
    Auto,
    Weiszfeld,
    Exact3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Escape {
    /// Step off a capturing non-optimal anchor and keep iterating.
    Nudge,
    /// Report the vertex certificate and stop.
    Stop,
}

#[derive(Debug, Parser)]
#[command(
    name = "geomedian",
    version,
    about = "Minimize the weighted sum of distances to a set of anchor points"
)]
struct Args {
    /// Instance file: CSV rows "x1,...,xn[,weight]" (optional header; a
    /// weight column must be declared by naming the last header field
    /// "weight") or JSON {"anchors": [[...],...], "weights": [...]}
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Solver selection
    #[arg(long, value_enum, default_value_t = Algorithm::Auto)]
    algorithm: Algorithm,

    /// Certificate tolerance (optimality residual at the returned point)
    #[arg(long, value_name = "REAL")]
    tol: Option<f64>,

    /// Relative step-size tolerance of the iteration
    #[arg(long = "step-tol", value_name = "REAL")]
    step_tol: Option<f64>,

    /// Iteration budget
    #[arg(long = "max-iter", value_name = "INT")]
    max_iter: Option<usize>,

    /// Starting point "x1,...,xn" (iterative solver only)
    #[arg(long, value_name = "COORDS")]
    start: Option<String>,

    /// Vertex-capture recovery policy
    #[arg(long, value_enum, default_value_t = Escape::Nudge)]
    escape: Escape,

    /// Write the iteration trace to this CSV file
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,

    /// Re-check the result against the brute-force grid oracle
    #[arg(long)]
    verify: bool,

    /// Suppress diagnostics on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(Serialize)]
struct CertificateOut {
    kind: &'static str,
    residual: f64,
}

#[derive(Serialize)]
struct VerifyOut {
    oracle_value: f64,
    /// Signed difference `value - oracle_value`.
    gap: f64,
}

#[derive(Serialize)]
struct Report {
    point: Vec<f64>,
    value: f64,
    status: String,
    certificate: CertificateOut,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<VerifyOut>,
}

/// JSON number formatter pinning floats to 17 significant digits so reports
/// are byte-stable and round-trip exactly.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<u8, String> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let inst = parse_instance(&text)?;

    let mut cfg = SolverConfig::default();
    if let Some(tol) = args.tol {
        cfg.cert_tol = tol;
    }
    if let Some(tol) = args.step_tol {
        cfg.step_tol = tol;
    }
    if let Some(iters) = args.max_iter {
        cfg.max_iter = iters;
    }
    cfg.escape_policy = match args.escape {
        Escape::Nudge => EscapePolicy::Nudge,
        Escape::Stop => EscapePolicy::CertifyAndStop,
    };

    let start = args
        .start
        .as_deref()
        .map(|s| {
            parse_coords(s)
                .and_then(|c| Point::new(c).map_err(|e| e.to_string()))
                .map_err(|e| format!("bad --start: {e}"))
        })
        .transpose()?;

    let exact3_applicable = inst.len() == 3 && inst.dim() == 2 && inst.is_unweighted();
    let use_exact3 = match args.algorithm {
        Algorithm::Exact3 => {
            if !exact3_applicable {
                return Err(
                    "exact3 needs an unweighted three-point instance in the plane".into(),
                );
            }
            true
        }
        Algorithm::Auto => exact3_applicable,
        Algorithm::Weiszfeld => false,
    };

    let (point, status, iterations, trace) = if use_exact3 {
        let a = inst.anchors();
        let case = exact3::solve_exact3(&a[0].clone(), &a[1].clone(), &a[2].clone())
            .map_err(|e| e.to_string())?;
        let status = match case.kind {
            exact3::TriangleKind::Collinear => "collinear-degenerate",
            _ => "exact",
        };
        (case.point, status.to_string(), 0, None)
    } else {
        let (sol, trace) =
            weiszfeld::solve(&inst, start.as_ref(), &cfg).map_err(|e| e.to_string())?;
        if !args.quiet {
            for note in &sol.notes {
                eprintln!("note: {note}");
            }
        }
        (
            sol.point,
            sol.status.as_str().to_string(),
            sol.iterations,
            Some(trace),
        )
    };

    let value = core::objective(&inst, &point)
        .map_err(|e| e.to_string())?
        .value();
    let certificate = subdiff::certify(&inst, &point, cfg.cert_tol).map_err(|e| e.to_string())?;

    let trace_file = match (&args.trace, &trace) {
        (Some(path), Some(trace)) => {
            write_trace(path, trace)?;
            Some(path.display().to_string())
        }
        (Some(path), None) => {
            // closed-form run: a single-row trace of the returned point
            let single = IterationTrace {
                steps: vec![weiszfeld::TraceStep {
                    k: 0,
                    x: point.clone(),
                    phi: core::objective(&inst, &point)
                        .map_err(|e| e.to_string())?,
                    step_norm: 0.0,
                    vertex_hit: None,
                }],
            };
            write_trace(path, &single)?;
            Some(path.display().to_string())
        }
        _ => None,
    };

    let verify = if args.verify {
        let grid = oracle::grid_minimize(&inst, 6, 48).map_err(|e| e.to_string())?;
        if use_exact3 && args.algorithm == Algorithm::Auto {
            // cross-check the closed form against one iterative run
            let (sol, _) =
                weiszfeld::solve(&inst, None, &cfg).map_err(|e| e.to_string())?;
            let mismatch = (sol.value.value() - value).abs();
            if mismatch > 1e-7 && !args.quiet {
                eprintln!(
                    "warning: closed-form and iterative objectives disagree by {mismatch:.3e}"
                );
            }
        }
        Some(VerifyOut {
            oracle_value: grid.best_value,
            gap: value - grid.best_value,
        })
    } else {
        None
    };

    let exit = if status == "max-iter" { 2 } else { 0 };
    let report = Report {
        point: point.coords().to_vec(),
        value,
        status,
        certificate: CertificateOut {
            kind: certificate.kind.as_str(),
            residual: certificate.residual,
        },
        iterations,
        trace_file,
        verify,
    };

    let mut ser = serde_json::Serializer::with_formatter(Vec::new(), SciFormatter);
    report
        .serialize(&mut ser)
        .map_err(|e| format!("report serialization failed: {e}"))?;
    let mut out = ser.into_inner();
    out.push(b'\n');
    std::io::stdout()
        .write_all(&out)
        .map_err(|e| format!("cannot write report: {e}"))?;
    Ok(exit)
}

fn parse_coords(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .map_err(|_| format!("'{field}' is not a number"))
        })
        .collect()
}

#[derive(serde::Deserialize)]
struct JsonInstance {
    anchors: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

fn parse_instance(text: &str) -> Result<Instance, String> {
    if text.trim_start().starts_with('{') {
        parse_json_instance(text)
    } else {
        parse_csv_instance(text)
    }
}

fn parse_json_instance(text: &str) -> Result<Instance, String> {
    let parsed: JsonInstance =
        serde_json::from_str(text).map_err(|e| format!("bad JSON instance: {e}"))?;
    let anchors = parsed
        .anchors
        .into_iter()
        .map(|coords| Point::new(coords).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    match parsed.weights {
        Some(weights) => Instance::with_weights(anchors, weights),
        None => Instance::new(anchors),
    }
    .map_err(|e| e.to_string())
}

fn parse_csv_instance(text: &str) -> Result<Instance, String> {
    let mut rows = text
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .peekable();

    // header: a first row with any non-numeric field; a trailing "weight"
    // column must be declared there
    let mut weighted = false;
    if let Some(first) = rows.peek() {
        let fields: Vec<&str> = first.split(',').map(str::trim).collect();
        if fields.iter().any(|f| f.parse::<f64>().is_err()) {
            weighted = fields
                .last()
                .map(|f| f.eq_ignore_ascii_case("weight"))
                .unwrap_or(false);
            rows.next();
        }
    }

    let mut anchors = Vec::new();
    let mut weights = Vec::new();
    let mut width = None;
    for (i, row) in rows.enumerate() {
        let mut values = parse_coords(row).map_err(|e| format!("row {}: {e}", i + 1))?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(format!(
                    "row {}: expected {w} fields, found {}",
                    i + 1,
                    values.len()
                ));
            }
            _ => {}
        }
        if weighted {
            if values.len() < 2 {
                return Err(format!("row {}: weight column needs a coordinate", i + 1));
            }
            weights.push(values.pop().expect("checked length"));
        }
        anchors.push(Point::new(values).map_err(|e| format!("row {}: {e}", i + 1))?);
    }
    if anchors.is_empty() {
        return Err("no anchor rows in the input".into());
    }
    if weighted {
        Instance::with_weights(anchors, weights)
    } else {
        Instance::new(anchors)
    }
    .map_err(|e| e.to_string())
}

fn write_trace(path: &PathBuf, trace: &IterationTrace) -> Result<(), String> {
    let dim = trace.steps[0].x.dim();
    let mut out = String::from("iter");
    for j in 1..=dim {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",phi,step_norm\n");
    for step in &trace.steps {
        let _ = write!(out, "{}", step.k);
        for c in step.x.coords() {
            let _ = write!(out, ",{c}");
        }
        let _ = writeln!(out, ",{},{}", step.phi.value(), step.step_norm);
    }
    std::fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

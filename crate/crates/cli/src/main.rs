//! `cartan`: command-line front end to the equivalence engine.
//!
//! Exit codes: 0 success, Compatible or certificate verified; 1 Incompatible,
//! certificate rejected or unlisted discrepancy; 2 usage or parse error;
//! 3 engine error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use cartan_core::cartan::{cached_reduction, verify_paper, CartanError, Whitelist};
use cartan_core::equivalence::{
    check_necessary, generate_equivalent_pair, substituted_invariants, verify_candidate, CandidateReport,
    EquivalenceError, GridConfig, NecessaryConfig, NecessaryReport, SignatureMap, Verdict,
};
use cartan_core::jet::{evaluate, transform_operator};
use cartan_core::syntax::{constant_value, parse_expr, to_expr};
use cartan_core::{ConcreteOperator, FiberTransformation, JetError, JetPoint, Problem, Value};

#[derive(Parser)]
#[command(name = "cartan", version, about = "Cartan equivalence toolkit for third-order linear operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute both reductions and compare them with the published formulas.
    VerifyPaper {
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        /// Known-discrepancy file replacing the shipped list.
        #[arg(long)]
        whitelist: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the fundamental invariants of an operator, symbolically and at points.
    Invariants {
        operator: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
        mode: ModeArg,
        /// Jet point `x,u,p,q,r` with rational entries; repeatable.
        #[arg(long = "at", value_name = "POINT")]
        points: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare two operators: certificate check with `--transform`, sampled
    /// necessary test otherwise.
    Check {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
        mode: ModeArg,
        #[arg(long, value_name = "FILE")]
        transform: Option<PathBuf>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Adds the operator invariant to the gauge signature.
        #[arg(long)]
        include_operator_invariant: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Apply a fiber-preserving transformation, from a file or drawn from `--seed`.
    Transform {
        operator: PathBuf,
        transformation: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
        mode: ModeArg,
        #[arg(long, conflicts_with = "transformation")]
        seed: Option<u64>,
        /// Writes the transformation used to this file.
        #[arg(long, value_name = "FILE")]
        emit_transform: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate an expression in `x, u, p, q, r, f0..f3` and their derivatives.
    Eval {
        expr: String,
        operator: PathBuf,
        #[arg(long = "at", value_name = "POINT")]
        point: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Direct,
    Gauge,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    Usage(String),
    Engine(String),
}

impl From<JetError> for Failure {
    fn from(e: JetError) -> Self {
        match e {
            JetError::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Engine(other.to_string()),
        }
    }
}

impl From<CartanError> for Failure {
    fn from(e: CartanError) -> Self {
        Failure::Engine(e.to_string())
    }
}

impl From<EquivalenceError> for Failure {
    fn from(e: EquivalenceError) -> Self {
        match e {
            EquivalenceError::Jet(j) => j.into(),
            other => Failure::Engine(other.to_string()),
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn single(mode: ModeArg) -> Result<Problem, Failure> {
    match mode {
        ModeArg::Direct => Ok(Problem::Direct),
        ModeArg::Gauge => Ok(Problem::Gauge),
        ModeArg::Both => Err(Failure::Usage("`--mode both` is only accepted by verify-paper".into())),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_operator(path: &Path) -> Result<ConcreteOperator, Failure> {
    ConcreteOperator::parse(&read(path)?).map_err(|e| match e {
        JetError::Parse(p) => Failure::Usage(format!("{}: {p}", path.display())),
        other => Failure::Engine(format!("{}: {other}", path.display())),
    })
}

fn load_transformation(path: &Path) -> Result<FiberTransformation, Failure> {
    FiberTransformation::parse(&read(path)?).map_err(|e| match e {
        JetError::Parse(p) => Failure::Usage(format!("{}: {p}", path.display())),
        other => Failure::Engine(format!("{}: {other}", path.display())),
    })
}

fn parse_point(src: &str) -> Result<JetPoint, Failure> {
    let parts: Vec<&str> = src.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("point `{src}` must be five rationals `x,u,p,q,r`"));
    if parts.len() != 5 {
        return Err(bad());
    }
    let mut coords: Vec<BigRational> = Vec::with_capacity(5);
    for p in parts {
        let ast = parse_expr(p).map_err(|_| bad())?;
        coords.push(constant_value(&ast).ok_or_else(bad)?);
    }
    let c: [BigRational; 5] = coords.try_into().map_err(|_| bad())?;
    Ok(JetPoint::from_coords(c))
}

fn render_point(pt: &JetPoint) -> String {
    format!("({})", pt.coords().map(|c| c.to_string()).join(", "))
}

/// Exact values print as rationals, approximate ones in shortest round-trip form.
fn render_value(v: &Value) -> String {
    match v.as_exact() {
        Some(r) => r.to_string(),
        None => v.to_f64().to_string(),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_verify_paper(mode: ModeArg, whitelist: Option<PathBuf>, format: Format) -> Outcome {
    let whitelist = match whitelist {
        Some(path) => Whitelist::parse(&read(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => Whitelist::shipped(),
    };
    let direct = cached_reduction(Problem::Direct)?;
    let gauge = cached_reduction(Problem::Gauge)?;
    let mut report = verify_paper(direct, gauge, &whitelist)?;
    if let Ok(p) = single(mode) {
        report = report.restrict(p);
    }
    let out = match format {
        Format::Text => report.render_text(),
        Format::Json => to_json(&report),
    };
    Ok((out, report.passed()))
}

fn cmd_invariants(path: &Path, mode: ModeArg, points: &[String], format: Format) -> Outcome {
    let mode = single(mode)?;
    let op = load_operator(path)?;
    let pts = points.iter().map(|p| parse_point(p)).collect::<Result<Vec<_>, _>>()?;
    let map = SignatureMap::new(mode, mode == Problem::Gauge)?;
    let symbolic = substituted_invariants(&map, &op);
    let named = &map.invariants;
    let mut values = Vec::new();
    for pt in &pts {
        let row = named
            .iter()
            .map(|(n, e)| Ok((n.clone(), render_value(&evaluate(e, pt, &op, None)?))))
            .collect::<Result<Vec<_>, JetError>>()
            .map_err(|e| Failure::Engine(format!("at {}: {e}", render_point(pt))))?;
        values.push((pt, row));
    }
    let out = match format {
        Format::Text => {
            let mut s = format!("mode: {mode}\noperator: {op}\n");
            match &symbolic {
                Some(list) => {
                    for (n, e) in list {
                        let _ = writeln!(s, "{n} = {e}");
                    }
                }
                None => s.push_str("symbolic form unavailable: coefficients are not Laurent polynomials in x\n"),
            }
            for (pt, row) in &values {
                let _ = writeln!(s, "at {}:", render_point(pt));
                for (n, v) in row {
                    let _ = writeln!(s, "  {n} = {v}");
                }
            }
            s
        }
        Format::Json => to_json(&json!({
            "mode": mode,
            "operator": op.to_string(),
            "symbolic": symbolic.map(|l| l.into_iter().map(|(n, e)| (n, e.to_string())).collect::<Vec<_>>()),
            "points": values.iter().map(|(pt, row)| json!({
                "point": pt.coords().map(|c| c.to_string()),
                "values": row,
            })).collect::<Vec<_>>(),
        })),
    };
    Ok((out, true))
}

fn render_candidate(r: &CandidateReport) -> String {
    let mut s = format!("mode: {}\n", r.mode);
    let _ = writeln!(s, "certificate: {}", if r.equivalent { "verified" } else { "rejected" });
    for c in &r.residuals {
        let _ = writeln!(s, "  {} mismatch: expected {}, actual {}, difference {}", c.coefficient, c.expected, c.actual, c.difference);
    }
    let _ = writeln!(s, "orbit check: {} samples, max residual {:.3e}", r.orbit.len(), r.orbit_max_residual);
    s
}

fn render_necessary(r: &NecessaryReport) -> String {
    let mut s = format!("mode: {}\ngrid: {}\ntolerance: {:e}\n", r.mode, r.grid, r.tolerance);
    let _ = writeln!(s, "components: {}", r.components.join(", "));
    let _ = writeln!(s, "clouds: {} and {} tuples", r.cloud_sizes[0], r.cloud_sizes[1]);
    let _ = writeln!(s, "matched: {} by sample, {} by search", r.matched_by_sample, r.matched_by_search);
    match &r.verdict {
        Verdict::Compatible => s.push_str("verdict: Compatible (necessary condition only)\n"),
        Verdict::Incompatible(w) => {
            s.push_str("verdict: Incompatible\n");
            let _ = writeln!(s, "  witness from operator {} at ({})", w.side, w.point.join(", "));
            let _ = writeln!(s, "  tuple: {:?}", w.tuple);
            let _ = writeln!(s, "  best residual {:.3e} at {:?}", w.best_residual, w.best_point);
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    first: &Path,
    second: &Path,
    mode: ModeArg,
    transform: Option<&Path>,
    grid: usize,
    tol: f64,
    include_operator_invariant: bool,
    format: Format,
) -> Outcome {
    let mode = single(mode)?;
    if grid < 2 {
        return Err(Failure::Usage("--grid needs at least 2 points per axis".into()));
    }
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let op1 = load_operator(first)?;
    let op2 = load_operator(second)?;
    if let Some(path) = transform {
        let t = load_transformation(path)?;
        let r = verify_candidate(&op1, &op2, &t, mode)?;
        let out = match format {
            Format::Text => render_candidate(&r),
            Format::Json => to_json(&r),
        };
        return Ok((out, r.equivalent));
    }
    let mut cfg = NecessaryConfig { tolerance: tol, ..Default::default() };
    cfg.signature.grid = GridConfig::with_points(grid);
    cfg.signature.include_operator_invariant = include_operator_invariant;
    let r = check_necessary(&op1, &op2, mode, &cfg)?;
    let out = match format {
        Format::Text => render_necessary(&r),
        Format::Json => to_json(&r),
    };
    Ok((out, r.verdict.is_compatible()))
}

fn cmd_transform(
    path: &Path,
    transformation: Option<&Path>,
    mode: ModeArg,
    seed: Option<u64>,
    emit: Option<&Path>,
    format: Format,
) -> Outcome {
    let mode = single(mode)?;
    let op = load_operator(path)?;
    let (image, t) = match (transformation, seed) {
        (Some(p), _) => {
            let t = load_transformation(p)?;
            (transform_operator(&op, &t, mode)?, t)
        }
        (None, Some(seed)) => generate_equivalent_pair(&op, mode, seed)?,
        (None, None) => return Err(Failure::Usage("give a transformation file or --seed".into())),
    };
    if let Some(p) = emit {
        std::fs::write(p, t.to_text()).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    }
    let out = match format {
        Format::Text => image.to_text(),
        Format::Json => to_json(&json!({
            "mode": mode,
            "transformation": { "xi": t.xi().to_string(), "xi_inv": t.xi_inv().to_string(), "phi": t.phi().to_string() },
            "operator": (0..4).rev().map(|i| (format!("f{i}"), image.coefficient(i).to_string())).collect::<Vec<_>>(),
        })),
    };
    Ok((out, true))
}

fn cmd_eval(expr: &str, path: &Path, point: &str, format: Format) -> Outcome {
    let ast = parse_expr(expr).map_err(|e| Failure::Usage(format!("expression: {e}")))?;
    let e = to_expr(&ast, &Default::default()).map_err(|e| Failure::Usage(format!("expression: {e}")))?;
    let op = load_operator(path)?;
    let pt = parse_point(point)?;
    let v = evaluate(&e, &pt, &op, None).map_err(|err| Failure::Engine(format!("at {}: {err}", render_point(&pt))))?;
    let out = match format {
        Format::Text => format!("{}\n", render_value(&v)),
        Format::Json => to_json(&json!({
            "expr": e.to_string(),
            "point": pt.coords().map(|c| c.to_string()),
            "exact": v.as_exact().map(|r| r.to_string()),
            "value": v.to_f64(),
        })),
    };
    Ok((out, true))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::VerifyPaper { mode, whitelist, format } => cmd_verify_paper(mode, whitelist, format),
        Command::Invariants { operator, mode, points, format } => cmd_invariants(&operator, mode, &points, format),
        Command::Check { first, second, mode, transform, grid, tol, include_operator_invariant, format } => {
            cmd_check(&first, &second, mode, transform.as_deref(), grid, tol, include_operator_invariant, format)
        }
        Command::Transform { operator, transformation, mode, seed, emit_transform, format } => {
            cmd_transform(&operator, transformation.as_deref(), mode, seed, emit_transform.as_deref(), format)
        }
        Command::Eval { expr, operator, point, format } => cmd_eval(&expr, &operator, &point, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, ok)) => {
            print!("{out}");
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Engine(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

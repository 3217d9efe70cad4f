//! Command-line front end: `relax`, `solve`, `verify` and `reproduce`.
//!
//! Exit codes: 0 success, 1 a verification or reproduction check failed,
//! 2 unreadable or malformed input, 3 relaxation order too small, 4 the
//! solver did not reach an optimal status.

pub mod files;
pub mod sdpa;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certificates::{classify_multiplier, verify_identity, ConeTag};
use crate::counterexample::{reproduce_with, ReproduceReport, ACTIVE_TOLERANCE, PINNED_TOLERANCE, RANK_TOLERANCE};
use crate::relaxations::{build, ConicProgram, HierarchyKind, PolyProblem, Relaxation, RelaxationError};
use crate::solver::{
    extract_minimizer, kkt_multiplier_from_dual, refined_kkt_multipliers, solve, solved_moment_matrix, Residuals, SolveOptions, SolveStatus,
    DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE,
};
use files::{CertificateFile, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ORDER: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hierarchy-lab", version, about = "Moment/SOS, SDSOS and DSOS relaxations of polynomial programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Lasserre,
    Sdsos,
    Dsos,
}

impl From<KindArg> for Relaxation {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Lasserre => Relaxation::Lasserre,
            KindArg::Sdsos => Relaxation::Sdsos,
            KindArg::Dsos => Relaxation::Dsos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// SDPA sparse (.dat-s)
    Sdpa,
    /// JSON dump of the conic program, readable by `solve`
    Native,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a relaxation and export it.
    Relax {
        /// Problem file (JSON).
        problem: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        order: u32,
        /// Premultiply by (x1^2 + ... + xn^2)^r.
        #[arg(long, default_value_t = 0)]
        r: u32,
        #[arg(long, value_enum, default_value_t = ExportFormat::Sdpa)]
        export: ExportFormat,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build and solve a relaxation, or solve an exported native program.
    Solve {
        /// Problem file, or a program written by `relax --export native`.
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, default_value_t = 0)]
        r: u32,
        #[arg(long, env = "HIERARCHY_LAB_TOL", default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        json: bool,
    },
    /// Check a certificate exactly against a problem.
    Verify {
        certificate: PathBuf,
        problem: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rerun the bundled counterexample and compare against its exact data.
    Reproduce {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3])]
        orders: Vec<u32>,
        /// Agreement required between computed and exact values.
        #[arg(long, default_value_t = PINNED_TOLERANCE)]
        tol: f64,
        /// Interior-point stopping tolerance.
        #[arg(long, env = "HIERARCHY_LAB_TOL", default_value_t = DEFAULT_TOLERANCE)]
        solver_tol: f64,
        #[arg(long)]
        json: bool,
    },
}

/// Outcome of a command: exit code plus what was written.
struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<PolyProblem, Failure> {
    ProblemFile::parse(&read(path)?)
        .and_then(|f| f.to_problem())
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn relaxation_failure(e: RelaxationError) -> Failure {
    match e {
        RelaxationError::OrderTooSmall { .. } => fail(EXIT_ORDER, e.to_string()),
        _ => fail(EXIT_INPUT, e.to_string()),
    }
}

fn build_program(path: &Path, kind: KindArg, order: u32, r: u32) -> Result<(PolyProblem, ConicProgram), Failure> {
    let p = load_problem(path)?;
    let kind = HierarchyKind { relaxation: kind.into(), r };
    let cp = build(&p, kind, order).map_err(relaxation_failure)?;
    Ok((p, cp))
}

/// Parses a program written by `relax --export native`.
pub fn read_native(text: &str) -> Result<ConicProgram, String> {
    let cp: ConicProgram = serde_json::from_str(text).map_err(|e| e.to_string())?;
    cp.validate()?;
    Ok(cp)
}

pub fn write_native(cp: &ConicProgram) -> String {
    serde_json::to_string_pretty(cp).expect("program serializes")
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| fail(EXIT_INPUT, e.to_string()))
}

fn cmd_relax(
    out: &mut dyn Write,
    problem: &Path,
    kind: KindArg,
    order: u32,
    r: u32,
    export: ExportFormat,
    output: Option<&Path>,
) -> Result<i32, Failure> {
    let (_, cp) = build_program(problem, kind, order, r)?;
    let text = match export {
        ExportFormat::Sdpa => sdpa::write_sdpa(&cp),
        ExportFormat::Native => write_native(&cp),
    };
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub kind: HierarchyKind,
    pub order: u32,
    pub status: SolveStatus,
    pub bound: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub minimizer: Option<Vec<f64>>,
    /// Constraint multipliers evaluated at the minimiser.
    pub multipliers: Option<Vec<f64>>,
    pub seconds: f64,
}

fn solve_report(p: Option<&PolyProblem>, cp: &ConicProgram, opts: &SolveOptions) -> Result<SolveReport, Failure> {
    let start = Instant::now();
    let res = solve(cp, opts).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
    let minimizer = res
        .is_optimal()
        .then(|| extract_minimizer(&solved_moment_matrix(cp, &res), RANK_TOLERANCE))
        .flatten();
    let n_constraints = cp.sources.len() - 1;
    // the refinement needs the constraint polynomials and assumes r = 0
    let multipliers = minimizer.as_ref().and_then(|x| match p {
        Some(p) if cp.kind.r == 0 => refined_kkt_multipliers(p, cp, &res.dual_blocks, x, ACTIVE_TOLERANCE).ok(),
        _ => (0..n_constraints)
            .map(|i| kkt_multiplier_from_dual(cp, &res.dual_blocks, i, x).ok())
            .collect::<Option<Vec<f64>>>(),
    });
    Ok(SolveReport {
        kind: cp.kind,
        order: cp.order,
        status: res.status,
        bound: res.bound(),
        primal_value: res.primal_value,
        dual_value: res.dual_value,
        iterations: res.iterations,
        residuals: res.residuals,
        minimizer,
        multipliers,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn render_solve(r: &SolveReport) -> String {
    let mut s = format!(
        "kind        {}\norder       {}\nstatus      {:?}\niterations  {}\nbound       {:.10}\nprimal      {:.10}\ndual        {:.10}\nresiduals   primal {:.1e}  dual {:.1e}  gap {:.1e}\n",
        r.kind, r.order, r.status, r.iterations, r.bound, r.primal_value, r.dual_value,
        r.residuals.primal, r.residuals.dual, r.residuals.gap
    );
    match &r.minimizer {
        Some(x) => {
            let coords: Vec<String> = x.iter().map(|v| format!("{v:.8}")).collect();
            s.push_str(&format!("minimizer   ({})\n", coords.join(", ")));
        }
        None => s.push_str("minimizer   none (moment matrix is not rank one)\n"),
    }
    if let Some(m) = &r.multipliers {
        for (i, v) in m.iter().enumerate() {
            s.push_str(&format!("multiplier  g{} {v:.8}\n", i + 1));
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    out: &mut dyn Write,
    input: &Path,
    kind: Option<KindArg>,
    order: Option<u32>,
    r: u32,
    tol: f64,
    max_iters: usize,
    json: bool,
) -> Result<i32, Failure> {
    let text = read(input)?;
    let is_native = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("blocks").is_some())
        .unwrap_or(false);
    let (p, cp) = if is_native {
        (None, read_native(&text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", input.display())))?)
    } else {
        let (Some(kind), Some(order)) = (kind, order) else {
            return Err(fail(EXIT_INPUT, "--kind and --order are required for a problem file"));
        };
        let (p, cp) = build_program(input, kind, order, r)?;
        (Some(p), cp)
    };
    let report = solve_report(p.as_ref(), &cp, &SolveOptions { tolerance: tol, max_iters })?;
    if json {
        emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")))?;
    } else {
        emit(out, &render_solve(&report))?;
    }
    Ok(if report.status == SolveStatus::Optimal { EXIT_OK } else { EXIT_SOLVER })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierVerdict {
    pub index: usize,
    pub classified: ConeTag,
    pub declared: Option<ConeTag>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub exact: bool,
    pub residual: String,
    pub multipliers: Vec<MultiplierVerdict>,
    pub passed: bool,
}

fn cmd_verify(out: &mut dyn Write, certificate: &Path, problem: &Path, json: bool) -> Result<i32, Failure> {
    let p = load_problem(problem)?;
    let cert = CertificateFile::parse(&read(certificate)?)
        .and_then(|f| f.to_certificate(&p))
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", certificate.display())))?;
    let residual = verify_identity(&p, &cert).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
    let mut multipliers = Vec::new();
    for (index, m) in cert.multipliers.iter().enumerate() {
        let classified = classify_multiplier(&m.squares).map_err(|e| fail(EXIT_CHECK_FAILED, e.to_string()))?;
        let consistent = m.declared.is_none_or(|d| classified <= d);
        multipliers.push(MultiplierVerdict { index, classified, declared: m.declared, consistent });
    }
    let report = VerifyReport {
        exact: residual.is_zero(),
        residual: crate::algebra::text::render(&residual, Some(p.variables())),
        passed: residual.is_zero() && multipliers.iter().all(|m| m.consistent),
        multipliers,
    };
    if json {
        emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")))?;
    } else {
        let mut s = String::new();
        for m in &report.multipliers {
            let members: Vec<String> = [ConeTag::Dsos, ConeTag::Sdsos, ConeTag::Sos]
                .into_iter()
                .filter(|t| *t >= m.classified)
                .map(|t| t.to_string())
                .collect();
            s.push_str(&format!("sigma{}: {} (member of {})", m.index, m.classified, members.join(", ")));
            match m.declared {
                Some(d) if !m.consistent => s.push_str(&format!(", but declared {d}")),
                Some(d) => s.push_str(&format!(", declared {d}")),
                None => {}
            }
            s.push('\n');
        }
        if report.exact {
            s.push_str("EXACT\n");
        } else {
            s.push_str(&format!("residual: {}\n", report.residual));
        }
        emit(out, &s)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn render_reproduce(r: &ReproduceReport) -> String {
    let kinds = crate::counterexample::scenario_kinds();
    let mut s = format!("{:<6}", "order");
    for k in kinds {
        s.push_str(&format!("{:>18}", k.to_string()));
    }
    s.push_str(&format!("{:>12}\n", "gap"));
    for &d in &r.orders {
        s.push_str(&format!("{d:<6}"));
        for k in kinds {
            let cell = match r.cell(k, d) {
                Some(c) => match (c.status, c.bound) {
                    (Some(SolveStatus::Optimal), Some(b)) => format!("{b:.8}"),
                    (Some(st), _) => format!("{st:?}"),
                    _ => "error".to_string(),
                },
                None => "-".to_string(),
            };
            s.push_str(&format!("{cell:>18}"));
        }
        let gap = match (r.cell(HierarchyKind::LASSERRE, d), r.cell(HierarchyKind::SDSOS, d)) {
            (Some(a), Some(b)) => match (a.bound, b.bound) {
                (Some(x), Some(y)) => format!("{:.6}", x - y),
                _ => "-".into(),
            },
            _ => "-".into(),
        };
        s.push_str(&format!("{gap:>12}\n"));
    }
    let refd = &r.reference;
    s.push_str(&format!(
        "reference: global {} = {:.8}, sdsos {} = {:.8}, gap {}\n",
        refd.global_value.exact, refd.global_value.value, refd.sdsos_value.exact, refd.sdsos_value.value, refd.gap.exact
    ));
    let failed: Vec<_> = r.failures().collect();
    s.push_str(&format!("checks: {} passed, {} failed\n", r.checks.len() - failed.len(), failed.len()));
    for c in &failed {
        s.push_str(&format!("FAIL {}: {}\n", c.name, c.detail));
    }
    if r.loose_tolerance {
        let loose = r.checks.iter().filter(|c| c.loose).count();
        s.push_str(&format!(
            "warning: tolerance {:e} is looser than {:e}; {loose} checks pass only at the looser tolerance\n",
            r.tolerance, PINNED_TOLERANCE
        ));
    }
    s.push_str(if r.passed { "PASS\n" } else { "FAIL\n" });
    s
}

fn cmd_reproduce(out: &mut dyn Write, orders: &[u32], tol: f64, solver_tol: f64, json: bool) -> Result<i32, Failure> {
    let opts = SolveOptions { tolerance: solver_tol, max_iters: DEFAULT_MAX_ITERS };
    let report = reproduce_with(orders, tol, &opts).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
    if json {
        emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")))?;
    } else {
        emit(out, &render_reproduce(&report))?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Relax { problem, kind, order, r, export, output } => {
            cmd_relax(out, &problem, kind, order, r, export, output.as_deref())
        }
        Command::Solve { input, kind, order, r, tol, max_iters, json } => {
            cmd_solve(out, &input, kind, order, r, tol, max_iters, json)
        }
        Command::Verify { certificate, problem, json } => cmd_verify(out, &certificate, &problem, json),
        Command::Reproduce { orders, tol, solver_tol, json } => cmd_reproduce(out, &orders, tol, solver_tol, json),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

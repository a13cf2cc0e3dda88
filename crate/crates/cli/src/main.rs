use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use socnewton::bench::{
    run_bench, run_regions, summary_table, write_instances_csv, write_summary_csv, BenchConfig,
    Suite,
};
use socnewton::lsoccp::{lsoccp_certificate, lsoccp_newton_solve, BetaChoice};
use socnewton::probgen::{gen_lsoccp, gen_pwls, GenKind, GenSpec, DEFAULT_DENSITY};
use socnewton::problem_file::{parse_vector_text, Problem, ProblemFile};
use socnewton::pwls::{certificate, newton_solve, SolveOptions, SolveStatus, X0Strategy};

/// Semi-smooth Newton solvers for second-order-cone projection equations and
/// linear second-order-cone complementarity problems.
#[derive(Parser)]
#[command(name = "soc-newton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded problem files.
    Gen(GenArgs),
    /// Solve one problem file.
    Solve(SolveArgs),
    /// Generate and solve a batch, then print a summary.
    Bench(BenchArgs),
    /// Solve each instance from one starting point per region.
    Regions(RegionsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKindArg {
    Dense,
    Sparse,
    Spd,
    Lsoccp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixArg {
    Dense,
    Sparse,
    Spd,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKindArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Matrix family of complementarity instances.
    #[arg(long, value_enum, default_value = "dense")]
    matrix: MatrixArg,
    /// Store the matrix in a Matrix Market side file (always on for sparse kinds).
    #[arg(long)]
    mtx: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    /// `tsolve`, `zero`, `file:PATH`, or an inline vector such as `0,1`.
    #[arg(long, default_value = "tsolve")]
    x0: String,
    /// Complementarity problems only: `one`, `auto` or a positive number.
    #[arg(long, default_value = "one")]
    beta: String,
    /// Scale the tolerance by `1 + ||b||`.
    #[arg(long)]
    relative_tol: bool,
    /// JSON report path; defaults to `<problem>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Keep every iterate in the report (default for n <= 100).
    #[arg(long)]
    record_iterates: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Dense,
    Sparse,
    Spd,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Dense => Suite::Dense,
            SuiteArg::Sparse => Suite::Sparse,
            SuiteArg::Spd => Suite::Spd,
        }
    }
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SOC_NEWTON_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    /// Skip the condition-number column.
    #[arg(long)]
    no_cond: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[command(flatten)]
    batch: BatchArgs,
    /// Directory for `summary.csv` and `instances.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionsArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[command(flatten)]
    batch: BatchArgs,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(UsageError(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|()| true),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a).map(|()| true),
        Command::Regions(a) => cmd_regions(a).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(
                    e.downcast_ref::<socnewton::Error>(),
                    Some(
                        socnewton::Error::InvalidSpec(_)
                            | socnewton::Error::InvalidInput(_)
                            | socnewton::Error::InvalidBeta(_)
                            | socnewton::Error::Parse { .. }
                            | socnewton::Error::DimensionMismatch { .. }
                    )
                );
            ExitCode::from(if is_usage { 2 } else { 1 })
        }
    }
}

fn gen_spec(a: &GenArgs, seed: u64) -> GenSpec {
    let kind = match (a.kind, a.matrix) {
        (GenKindArg::Dense, _) | (GenKindArg::Lsoccp, MatrixArg::Dense) => GenKind::Dense,
        (GenKindArg::Sparse, _) | (GenKindArg::Lsoccp, MatrixArg::Sparse) => {
            GenKind::Sparse { density: a.density }
        }
        (GenKindArg::Spd, _) | (GenKindArg::Lsoccp, MatrixArg::Spd) => GenKind::SpdDense,
    };
    GenSpec::new(a.n, kind, seed)
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    if a.count == 0 {
        return Err(usage(anyhow!("--count must be at least 1")));
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let name = match a.kind {
        GenKindArg::Dense => "dense",
        GenKindArg::Sparse => "sparse",
        GenKindArg::Spd => "spd",
        GenKindArg::Lsoccp => "lsoccp",
    };
    for i in 0..a.count {
        let seed = a.seed.wrapping_add(i as u64);
        let spec = gen_spec(&a, seed);
        let problem = match a.kind {
            GenKindArg::Lsoccp => Problem::Lsoccp(gen_lsoccp(&spec).map_err(usage)?),
            _ => Problem::Pwls(gen_pwls(&spec).map_err(usage)?),
        };
        let stem = format!("{name}_n{}_s{seed}", a.n);
        let side = a.mtx || problem.matrix().is_sparse();
        let file = ProblemFile {
            provenance: Some(spec),
            matrix_path: side.then(|| PathBuf::from(format!("{stem}.mtx"))),
            ..ProblemFile::new(problem)
        };
        let path = a.out.join(format!("{stem}.txt"));
        file.write(&path).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn parse_x0(s: &str) -> anyhow::Result<X0Strategy> {
    match s {
        "tsolve" => Ok(X0Strategy::SolveLinear),
        "zero" => Ok(X0Strategy::Zero),
        _ => {
            let v = if let Some(path) = s.strip_prefix("file:") {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading starting point {path}"))
                    .map_err(usage)?;
                parse_vector_text(&text)
            } else {
                parse_vector_text(s)
            };
            v.map(X0Strategy::Given).map_err(|e| usage(anyhow!("--x0 {s}: {e}")))
        }
    }
}

fn parse_beta(s: &str) -> anyhow::Result<BetaChoice> {
    match s {
        "one" => Ok(BetaChoice::One),
        "auto" => Ok(BetaChoice::Auto),
        _ => s
            .parse::<f64>()
            .map(BetaChoice::Explicit)
            .map_err(|_| usage(anyhow!("--beta must be one, auto or a number, got {s}"))),
    }
}

fn status_line(status: &SolveStatus) -> String {
    match status {
        SolveStatus::SolutionFound => "Solution found".into(),
        SolveStatus::MaxIterations => "Maximum iterations reached".into(),
        SolveStatus::LinearSolveFailure { iteration } => {
            format!("Linear solve failed at iteration {iteration}")
        }
    }
}

fn cmd_solve(a: SolveArgs) -> anyhow::Result<bool> {
    let file = ProblemFile::read(&a.problem)
        .with_context(|| format!("reading {}", a.problem.display()))
        .map_err(usage)?;
    let n = file.problem.dim();
    let opts = SolveOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        x0_strategy: parse_x0(&a.x0)?,
        relative_tol: a.relative_tol,
        record_iterates: a.record_iterates || n <= 100,
        ..Default::default()
    };
    opts.validate().map_err(usage)?;

    let (report, extra) = match &file.problem {
        Problem::Pwls(p) => {
            let cert = certificate(p)?;
            let start = Instant::now();
            let r = newton_solve(p, &opts)?;
            let t = start.elapsed().as_secs_f64();
            (r, json!({ "certificate": cert, "wall_time_s": t }))
        }
        Problem::Lsoccp(p) => {
            let beta = parse_beta(&a.beta)?;
            let cert = lsoccp_certificate(p, beta).map_err(usage)?;
            let start = Instant::now();
            let (r, sol) = lsoccp_newton_solve(p, beta, &opts)?;
            let t = start.elapsed().as_secs_f64();
            (r, json!({ "certificate": cert, "solution": sol, "wall_time_s": t }))
        }
    };

    let mut doc = json!({
        "format": "soc-newton-report",
        "version": 1,
        "problem": a.problem.display().to_string(),
        "kind": file.problem.kind_name(),
        "n": n,
        "tol": a.tol,
        "max_iter": a.max_iter,
    });
    merge(&mut doc, serde_json::to_value(&report)?);
    merge(&mut doc, extra);
    let path = a.report.clone().unwrap_or_else(|| default_report_path(&a.problem));
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;

    println!(
        "{}: {} after {} iteration(s), residual {:.3e}, {:.3} ms (report: {})",
        a.problem.display(),
        status_line(&report.status),
        report.iterations,
        report.final_residual(),
        doc["wall_time_s"].as_f64().unwrap_or(f64::NAN) * 1e3,
        path.display()
    );
    Ok(report.solved())
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn default_report_path(problem: &Path) -> PathBuf {
    let mut s = problem.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn batch_config(suite: SuiteArg, b: &BatchArgs) -> anyhow::Result<BenchConfig> {
    let threads = match b.threads {
        Some(0) => return Err(usage(anyhow!("--threads must be at least 1"))),
        Some(t) => t,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let solve = SolveOptions {
        tol: b.tol,
        max_iter: b.max_iter,
        ..Default::default()
    };
    solve.validate().map_err(usage)?;
    Ok(BenchConfig {
        threads,
        density: b.density,
        solve,
        compute_cond: !b.no_cond,
        ..BenchConfig::new(suite.into(), b.n, b.count, b.seed)
    })
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let cfg = batch_config(a.suite, &a.batch)?;
    let (row, results) = run_bench(&cfg)?;
    print!("{}", summary_table(std::slice::from_ref(&row)));
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_summary_csv(&[row], fs::File::create(dir.join("summary.csv"))?)?;
            write_instances_csv(&results, fs::File::create(dir.join("instances.csv"))?)?;
            println!("wrote {}", dir.join("summary.csv").display());
            println!("wrote {}", dir.join("instances.csv").display());
        }
        None => {
            println!();
            write_summary_csv(&[row], std::io::stdout())?;
        }
    }
    Ok(())
}

fn cmd_regions(a: RegionsArgs) -> anyhow::Result<()> {
    if matches!(a.suite, SuiteArg::Spd) {
        bail!(usage(anyhow!("regions supports the dense and sparse suites")));
    }
    let cfg = batch_config(a.suite, &a.batch)?;
    let report = run_regions(&cfg)?;
    println!("{:<8} {:>8} {:>10} {:>12}", "region", "solved", "avg iters", "avg time (s)");
    for r in &report.regions {
        println!(
            "{:<8} {:>8} {:>10.2} {:>12.4}",
            r.region,
            format!("{}/{}", r.solved, r.total),
            r.avg_iters,
            r.avg_time_s
        );
    }
    println!(
        "identical solutions: {}/{} instances",
        report.identical_solutions, report.compared
    );
    if let Some(path) = &a.report {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

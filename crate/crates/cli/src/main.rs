//! `frac-tau`: run, sweep, estimate and validate distributed-order
//! fractional integro-PDE problems with the Legendre tau solver.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fractau::assembly::{OperatorCache, SolverOptions};
use fractau::problem::{
    builtin_example, validate_source, ExampleParams, Problem, ProblemConfig, ProblemDefinition,
};
use fractau::report::{solve, SolveReport, DEFAULT_GRID};
use fractau::tau1d::{estimate_error_1d_cached, ESTIMATE_GRID};
use rayon::prelude::*;

use output::SweepRow;

/// Environment variable capping sweep parallelism.
const THREADS_VAR: &str = "FRAC_TAU_THREADS";

#[derive(Parser)]
#[command(name = "frac-tau", version, about = "Legendre tau solver for distributed-order fractional integro-PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and report errors on the uniform grid.
    Run(RunArgs),
    /// Solve a list of Λ and P values and print a convergence summary.
    ///
    /// Configurations run in parallel (at most FRAC_TAU_THREADS threads);
    /// the summary is always printed in input order.
    Sweep(RunArgs),
    /// Solve, then run the residual-based a-posteriori error estimate (1D).
    Estimate(RunArgs),
    /// Check the registered source against the exact solution.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Built-in example: ex1, ex2, ex3 or ex4.
    #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
    example: Option<String>,
    /// JSON problem file (unknown keys are rejected).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Example parameter a (ex2, ex3, ex4).
    #[arg(long = "a")]
    a: Option<f64>,
    /// Example parameter b (ex2, ex3, ex4).
    #[arg(long = "b")]
    b: Option<f64>,
    /// Example parameter c (ex3).
    #[arg(long = "c")]
    c: Option<f64>,
    /// Viscosity 𝒦* of a built-in example.
    #[arg(long)]
    viscosity: Option<f64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Polynomial count Λ per direction (comma-separated list for sweep).
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<usize>,
    /// Gauss points P = P* over the orders (comma-separated list for sweep).
    #[arg(long, value_delimiter = ',')]
    pts: Vec<usize>,
    /// Wavelet resolution (only 1 is supported by the fractional operators).
    #[arg(long)]
    resolution: Option<u32>,
    /// Projection nodes per subinterval [default: max(32, 2Λ)].
    #[arg(long)]
    nq: Option<usize>,
    /// Points per axis of the error grid, h = 1/(grid − 1).
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Write per-point results (run) or the summary (sweep) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for gnuplot data files.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Evaluation time of the error metrics [default: 0.5 for ex1–ex3, 1 for ex4, T for files].
    #[arg(long)]
    t_eval: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of interior sample points.
    #[arg(long, default_value_t = 20)]
    samples: usize,
}

fn load(args: &ProblemArgs) -> Result<ProblemDefinition> {
    let params = ExampleParams {
        a: args.a,
        b: args.b,
        c: args.c,
        viscosity: args.viscosity,
    };
    match (&args.example, &args.problem) {
        (Some(name), None) => Ok(builtin_example(name, params)?),
        (None, Some(path)) => {
            if params != ExampleParams::default() {
                bail!(fractau::Error::Config(
                    "--a, --b, --c and --viscosity apply to built-in examples only".into()
                ));
            }
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "problem".into());
            Ok(ProblemConfig::from_file(path)?.into_definition(stem)?)
        }
        _ => bail!(fractau::Error::Config("give exactly one of --example or --problem".into())),
    }
}

fn single(values: &[usize], flag: &str, default: usize) -> Result<usize> {
    match values {
        [] => Ok(default),
        [v] => Ok(*v),
        _ => bail!(fractau::Error::Config(format!("{flag} takes a single value here; use sweep for lists"))),
    }
}

fn options(def: &ProblemDefinition, args: &RunArgs, lambda: usize, points: usize) -> SolverOptions {
    let mut opts = SolverOptions::from(def.solver);
    opts.lambda = lambda;
    opts.points = points;
    opts.points_space = points;
    if let Some(r) = args.resolution {
        opts.resolution = r;
    }
    if args.nq.is_some() {
        opts.nq = args.nq;
    }
    opts
}

fn t_eval(def: &ProblemDefinition, args: &RunArgs) -> f64 {
    args.t_eval.unwrap_or(def.t_eval)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let def = load(&args.problem)?;
    let lambda = single(&args.lambda, "--lambda", def.solver.lambda)?;
    let points = single(&args.pts, "--pts", def.solver.points)?;
    let opts = options(&def, &args, lambda, points);
    let sol = solve(&def.problem, &opts, &OperatorCache::new())?;
    let report = SolveReport::build(&def.problem, &sol, t_eval(&def, &args), args.grid)?;
    output::print_report(&def.name, lambda, points, &report);
    if let Some(path) = &args.csv {
        output::write_field_csv(path, &report)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(dir) = &args.plot_dir {
        for p in output::write_plot_files(dir, &format!("{}_L{lambda}_P{points}", def.name), &report)? {
            eprintln!("wrote {p}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Thread cap from FRAC_TAU_THREADS; unset means rayon's default.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!(fractau::Error::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

fn sweep(args: RunArgs) -> Result<ExitCode> {
    let def = load(&args.problem)?;
    let lambdas = if args.lambda.is_empty() { vec![def.solver.lambda] } else { args.lambda.clone() };
    let pts = if args.pts.is_empty() { vec![def.solver.points] } else { args.pts.clone() };
    let configs: Vec<(usize, usize)> = lambdas
        .iter()
        .flat_map(|&l| pts.iter().map(move |&p| (l, p)))
        .collect();
    let te = t_eval(&def, &args);
    let cache = OperatorCache::new();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("cannot start the worker pool")?;
    let results: Vec<Result<SolveReport>> = pool.install(|| {
        configs
            .par_iter()
            .map(|&(lambda, points)| {
                log::info!("solving Λ = {lambda}, P = {points}");
                let opts = options(&def, &args, lambda, points);
                let sol = solve(&def.problem, &opts, &cache)?;
                Ok(SolveReport::build(&def.problem, &sol, te, args.grid)?)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(configs.len());
    println!("{}: N_p = {}, t_eval = {te}", def.name, args.grid);
    println!(
        "{:>4} {:>4} {:>12} {:>12} {:>12} {:>12} {:>11} {:>9}",
        "Λ", "P", "l2_paper", "l2_rms", "linf", "mean", "condition", "seconds"
    );
    for (&(lambda, points), res) in configs.iter().zip(results) {
        let report = res.with_context(|| format!("Λ = {lambda}, P = {points}"))?;
        let f = |v: Option<f64>| v.map(|v| format!("{v:>12.4e}")).unwrap_or_else(|| format!("{:>12}", "-"));
        let m = report.metrics;
        println!(
            "{lambda:>4} {points:>4} {} {} {} {} {:>11.3e} {:>9}",
            f(m.map(|m| m.l2_paper)),
            f(m.map(|m| m.l2_rms)),
            f(m.map(|m| m.linf)),
            f(m.map(|m| m.mean)),
            report.condition,
            report.seconds.map(|s| format!("{s:.3}")).unwrap_or_else(|| "n/a".into())
        );
        if let Some(dir) = &args.plot_dir {
            output::write_plot_files(dir, &format!("{}_L{lambda}_P{points}", def.name), &report)?;
        }
        rows.push(SweepRow {
            lambda,
            points,
            metrics: report.metrics,
            condition: report.condition,
            residual_norm: report.residual_norm,
        });
    }
    if let Some(path) = &args.csv {
        output::write_sweep_csv(path, &rows)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(dir) = &args.plot_dir {
        eprintln!("wrote {}", output::write_sweep_plot(dir, &def.name, &rows)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn estimate(args: RunArgs) -> Result<ExitCode> {
    let def = load(&args.problem)?;
    let Problem::OneD(p) = &def.problem else {
        bail!(fractau::Error::Config("the error estimator is available for 1D problems only".into()));
    };
    let lambda = single(&args.lambda, "--lambda", def.solver.lambda)?;
    let points = single(&args.pts, "--pts", def.solver.points)?;
    let opts = options(&def, &args, lambda, points);
    let cache = OperatorCache::new();
    let sol = fractau::tau1d::solve_1d_cached(p, &opts, &cache)?;
    let est = estimate_error_1d_cached(p, &sol, &opts, &cache)?;
    println!("{}: Λ = {lambda}, P = {points}", def.name);
    println!("estimated max |U − U_N| on {0}×{0}: {1:.6e}", est.grid, est.max_abs);
    if let Some(exact) = &p.exact {
        let n = ESTIMATE_GRID;
        let t_final = p.coefficients.final_time;
        let mut truth: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let (x, t) = (i as f64 / (n - 1) as f64, t_final * k as f64 / (n - 1) as f64);
                truth = truth.max((exact.eval(&[x, t])? - sol.eval(x, t)?).abs());
            }
        }
        println!("true max |U − U_N| on {n}×{n}:      {truth:.6e}");
        if truth > 0.0 {
            println!("ratio estimate/true: {:.4}", est.max_abs / truth);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let def = load(&args.problem)?;
    let report = validate_source(&def.problem, args.samples)?;
    println!("{}: source consistency at {} interior points", def.name, report.samples.len());
    for s in &report.samples {
        let pt: Vec<String> = s.point.iter().map(|v| format!("{v:.6}")).collect();
        println!(
            "  ({})  registered {:>22.15e}  re-derived {:>22.15e}",
            pt.join(", "),
            s.registered,
            s.rederived
        );
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!("{verdict}: max relative error {:.3e} (tolerance {:.0e})", report.max_error, report.tolerance);
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// 2 for configuration problems, 1 for solver failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    use fractau::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(
            E::Config(_)
            | E::UnknownExample(_)
            | E::Expr(_)
            | E::KernelExponent(_)
            | E::UnsupportedResolution(_)
            | E::NegativeWeight { .. }
            | E::ZeroWeightMass(_)
            | E::Domain { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Estimate(a) => estimate(a),
        Command::Validate(a) => validate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(exit_code(&e))
    })
}

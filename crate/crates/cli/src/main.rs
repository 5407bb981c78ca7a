//! `smax`: score-dynamics simulations, logit-equilibrium solves and operator
//! property verification from the command line.
//!
//! Exit codes: 0 success, 1 numerical failure (non-convergence, divergence,
//! property violations), 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smax_core::dynamics::{integrate, score_field, replicator_field, IntegratorConfig, Trajectory};
use smax_core::equilibrium::{contraction_certificate, solve_fixed_point, EquilibriumRecord, SolverConfig};
use smax_core::io::{load_game, write_json, write_trajectory_csv};
use smax_core::properties::{run_suite, OperatorUnderTest, SuiteConfig};
use smax_core::{Error, MatrixGame, MixedStrategy, ScoreVector, Temperature};

#[derive(Parser)]
#[command(name = "smax", version, about = "Softmax operator toolkit and score-dynamics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the score dynamics and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Solve for the logit equilibrium and write the result JSON.
    Equilibrium(EquilibriumArgs),
    /// Run the sampled operator property suite and write a JSON report.
    Verify(VerifyArgs),
    /// Evaluate the replicator field λ(diag(x) − xxᵀ)u.
    Replicator(ReplicatorArgs),
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        Ok(SolverConfig::new(self.tol, self.max_iter, self.damping)?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Initial scores, comma-separated. Defaults to zeros.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    #[arg(long, default_value_t = 10)]
    record_every: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z0: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result JSON path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,10")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,10")]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    hi: f64,
    /// Report JSON path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Test hook: evaluate softmax at λ·scale while checking claims at λ.
    #[arg(long, hide = true)]
    fault_lambda_scale: Option<f64>,
}

#[derive(Args)]
struct ReplicatorArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Field JSON path; only printed when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn numerical(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IntegrationDiverged { .. }
            | Error::SolverDiverged { .. }
            | Error::NotConverged { .. }
            | Error::InvalidReference { .. } => Failure::numerical(e.to_string()),
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Io(_) | Error::Json(_) => {
                Failure::usage(e.to_string())
            }
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(",")
}

fn load(path: &PathBuf) -> Result<MatrixGame, Failure> {
    load_game(path).map_err(|e| Failure::usage(format!("cannot load game {}: {e}", path.display())))
}

fn initial_scores(z0: &Option<Vec<f64>>, n: usize) -> Result<ScoreVector, Failure> {
    let z = match z0 {
        Some(v) => ScoreVector::new(v.clone())?,
        None => ScoreVector::zeros(n)?,
    };
    if z.len() != n {
        return Err(Failure::usage(format!("--z0 has {} entries, game has {n} actions", z.len())));
    }
    Ok(z)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let game = load(&args.game)?;
    let t = Temperature::new(args.lambda)?;
    let z0 = initial_scores(&args.z0, game.n())?;
    let cfg = IntegratorConfig::new(args.dt, args.t_end, args.record_every)?;
    let solver = args.solver.config()?;

    let mut traj: Trajectory = match integrate(&game, t, &z0, &cfg) {
        Ok(traj) => traj,
        Err(Error::IntegrationDiverged { t: at, partial }) => {
            write_trajectory_csv(&partial, &args.out)?;
            return Err(Failure::numerical(format!(
                "integration diverged at t = {at}; partial trajectory written to {}",
                args.out.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let last = traj.last().expect("trajectory has an initial sample").clone();
    let z_end = ScoreVector::new(last.z.clone())?;

    // Lyapunov reference: the rest point reached from the final state, if any.
    let reference = solve_fixed_point(&game, t, &z_end, &solver)
        .ok()
        .filter(|r| r.converged)
        .map(|r| r.z_star);
    if let Some(z_star) = &reference {
        traj.attach_reference(z_star, t)?;
    }
    write_trajectory_csv(&traj, &args.out)?;

    let field = score_field(&game, t, &z_end)?;
    let residual = field.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("t_end: {}", last.t);
    println!("final_x: {}", fmt_vec(&last.x));
    match traj.last().and_then(|s| s.v) {
        Some(v) => println!("final_V: {v:e}"),
        None => println!("final_V: n/a (no equilibrium reference)"),
    }
    println!("rest_point_residual: {residual:e}");
    println!("trajectory: {}", args.out.display());
    Ok(())
}

fn equilibrium(args: &EquilibriumArgs) -> Result<(), Failure> {
    let game = load(&args.game)?;
    let t = Temperature::new(args.lambda)?;
    let z0 = initial_scores(&args.z0, game.n())?;
    let cfg = args.solver.config()?;
    let result = solve_fixed_point(&game, t, &z0, &cfg)?;
    let cert = contraction_certificate(&game, t);
    let record = EquilibriumRecord::new(&result, &cert, t);
    match &args.out {
        Some(path) => {
            write_json(&record, path)?;
            println!("x_star: {}", fmt_vec(&record.x_star));
            println!("residual: {:e}", record.residual);
            println!("iterations: {}", record.iterations);
            println!("converged: {}", record.converged);
        }
        None => println!("{}", serde_json::to_string_pretty(&record).expect("serializable")),
    }
    if result.converged {
        Ok(())
    } else {
        Err(Failure::numerical(format!(
            "did not converge: residual {:e} after {} iterations",
            result.residual, result.iterations
        )))
    }
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.n.iter().any(|&n| n < 2) {
        return Err(Failure::usage("--n entries must be >= 2"));
    }
    for &l in &args.lambda {
        Temperature::new(l)?;
    }
    let cfg = SuiteConfig {
        dims: args.n.clone(),
        lambdas: args.lambda.clone(),
        samples: args.samples,
        seed: args.seed,
        lo: args.lo,
        hi: args.hi,
        ..SuiteConfig::default()
    };
    let op = match args.fault_lambda_scale {
        Some(s) => OperatorUnderTest::with_lambda_scale(s)?,
        None => OperatorUnderTest::exact(),
    };
    let report = run_suite(&cfg, &op)?;
    match &args.out {
        Some(path) => write_json(&report, path)?,
        None => println!("{}", serde_json::to_string_pretty(&report).expect("serializable")),
    }
    let failed: Vec<_> = report.reports.iter().filter(|r| !r.passed()).collect();
    for r in &failed {
        eprintln!("{}", r.summary());
    }
    eprintln!("{} checks, {} failed", report.reports.len(), failed.len());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::numerical("property violations found"))
    }
}

fn replicator(args: &ReplicatorArgs) -> Result<(), Failure> {
    let x = MixedStrategy::new(args.x.clone())?;
    let t = Temperature::new(args.lambda)?;
    let field = replicator_field(&x, &args.u, t)?;
    if let Some(path) = &args.out {
        write_json(&serde_json::json!({ "field": field, "lambda": t.lambda() }), path)?;
    }
    println!("{}", fmt_vec(&field));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Verify(a) => verify(a),
        Command::Replicator(a) => replicator(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Command-line front end: wires scenario configs to experiment runs and
//! data files.
//!
//! Exit codes: 0 on success, 1 on configuration/usage errors (with a
//! diagnostic naming the offending file), 2 on runtime failures. Progress
//! goes to stderr; data files contain only data.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use specsense::consensus::{write_trace, WeightScheme};
use specsense::detection::Threshold;
use specsense::experiments::output::{
    fmt_float, write_convergence_csv, write_robustness_csv, write_roc_csv, write_sensitivity_csv,
};
use specsense::experiments::{
    convergence_study, estimate_roc, fixed_threshold_robustness, sweep_detection_sensitivity,
    ConfigError, ScenarioConfig,
};
use specsense::spectral::SpectralReport;
use specsense::{analytic_pf_consensus, analytic_pf_or, analytic_pf_single};

#[derive(Parser)]
#[command(
    name = "specsense",
    version,
    about = "Consensus-based cooperative spectrum sensing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print convergence analytics (eigenvalues, alpha, gap, rho) for the
    /// configured topology, step size, and failure probability
    Spectral(RunArgs),
    /// Iteration-count study per step size; writes convergence.csv
    Converge(RunArgs),
    /// Estimate per-rule ROC curves; writes roc.csv
    Roc(RunArgs),
    /// Detection probability vs average SNR at a calibrated false-alarm
    /// target; writes sensitivity.csv
    Sensitivity(RunArgs),
    /// Fixed-threshold robustness study; writes robustness.csv
    Robustness(RunArgs),
    /// Print analytic false-alarm probabilities for a threshold
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the config file seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for data files
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write per-run trace files where the subcommand supports them
    #[arg(long)]
    trace: bool,
    /// Worker threads (0 = auto)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of secondary users
    #[arg(long)]
    n: usize,
    /// Time-bandwidth product
    #[arg(long)]
    m: u32,
    /// Decision threshold in dB
    #[arg(long)]
    lambda_db: f64,
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<specsense::experiments::ExperimentError> for AppError {
    fn from(e: specsense::experiments::ExperimentError) -> Self {
        match e {
            specsense::experiments::ExperimentError::Config(c) => AppError::Config(c.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Oracle(args) => oracle(args),
        Command::Spectral(args) => with_config(args, spectral),
        Command::Converge(args) => with_config(args, converge),
        Command::Roc(args) => with_config(args, roc),
        Command::Sensitivity(args) => with_config(args, sensitivity),
        Command::Robustness(args) => with_config(args, robustness),
    }
}

fn with_config(
    args: RunArgs,
    body: fn(&RunArgs, &ScenarioConfig) -> Result<(), AppError>,
) -> Result<(), AppError> {
    if args.threads > 0 {
        // Ignore the error if a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global();
    }
    let cfg = ScenarioConfig::load(&args.config, args.seed)?;
    fs::create_dir_all(&args.out)?;
    body(&args, &cfg)
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut io::BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), AppError> {
    let file = fs::File::create(path)
        .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    let mut out = io::BufWriter::new(file);
    write(&mut out)?;
    out.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), AppError> {
    if args.n == 0 || args.m == 0 {
        return Err(AppError::Config("oracle needs n >= 1 and m >= 1".into()));
    }
    let threshold = Threshold::from_db(args.lambda_db);
    println!("lambda_db,{}", fmt_float(threshold.db()));
    println!("lambda_linear,{}", fmt_float(threshold.linear()));
    println!(
        "pf_single,{}",
        fmt_float(analytic_pf_single(args.m, &threshold))
    );
    println!(
        "pf_consensus,{}",
        fmt_float(analytic_pf_consensus(args.n, args.m, &threshold))
    );
    println!(
        "pf_or,{}",
        fmt_float(analytic_pf_or(args.n, args.m, &threshold))
    );
    Ok(())
}

fn spectral(_args: &RunArgs, cfg: &ScenarioConfig) -> Result<(), AppError> {
    let WeightScheme::LaplacianEpsilon(epsilon) = cfg.scheme else {
        return Err(AppError::Config(
            "spectral analytics need a laplacian-epsilon scheme (metropolis has no step size)"
                .into(),
        ));
    };
    let p = cfg.failure.map(|f| f.failure_probability());
    let report = SpectralReport::for_topology(&cfg.topology, epsilon, p)
        .map_err(|e| AppError::Runtime(e.to_string()))?;
    let eigenvalues: Vec<String> = report.eigenvalues.iter().map(|&v| fmt_float(v)).collect();
    println!("eigenvalues,{}", eigenvalues.join(","));
    println!("epsilon,{}", fmt_float(report.epsilon));
    println!("alpha,{}", fmt_float(report.alpha));
    println!("gap,{}", fmt_float(report.gap));
    println!("delta_bound,{}", fmt_float(report.delta_bound()));
    if let (Some(p), Some(rho)) = (report.failure_probability, report.rho) {
        println!("failure_probability,{}", fmt_float(p));
        println!("rho,{}", fmt_float(rho));
    }
    Ok(())
}

fn converge(args: &RunArgs, cfg: &ScenarioConfig) -> Result<(), AppError> {
    let study = convergence_study(cfg, &cfg.convergence.epsilons.clone())?;
    write_file(&args.out.join("convergence.csv"), |w| {
        write_convergence_csv(&study, w)
    })?;
    if args.trace {
        for (epsilon, history) in &study.traces {
            let name = format!("trace_eps_{epsilon}.csv");
            write_file(&args.out.join(name), |w| write_trace(history, w))?;
        }
    }
    for row in &study.rows {
        eprintln!(
            "eps={}: median {} iterations (q1 {}, q3 {}), converged {:.1}%",
            row.epsilon,
            row.median_iterations,
            row.q1_iterations,
            row.q3_iterations,
            100.0 * row.converged_fraction
        );
    }
    Ok(())
}

fn roc(args: &RunArgs, cfg: &ScenarioConfig) -> Result<(), AppError> {
    let study = estimate_roc(cfg)?;
    write_file(&args.out.join("roc.csv"), |w| write_roc_csv(&study, w))?;
    if let (Some(mean_it), Some(conv)) = (study.mean_iterations, study.converged_fraction) {
        eprintln!(
            "consensus runs: mean {mean_it:.1} iterations, {:.2}% converged",
            100.0 * conv
        );
    }
    if let Some(disagreement) = &study.disagreement_fraction {
        let worst = disagreement.iter().fold((0.0, 0.0), |acc, &(db, frac)| {
            if frac > acc.1 {
                (db, frac)
            } else {
                acc
            }
        });
        eprintln!(
            "per-node finite-time disagreement with the exact-average decision: worst {:.3e} at {} dB",
            worst.1, worst.0
        );
    }
    Ok(())
}

fn sensitivity(args: &RunArgs, cfg: &ScenarioConfig) -> Result<(), AppError> {
    let table = sweep_detection_sensitivity(cfg, cfg.sensitivity.pf_target)?;
    write_file(&args.out.join("sensitivity.csv"), |w| {
        write_sensitivity_csv(&table, w)
    })?;
    for cell in table.rows.first().map(|r| r.cells.as_slice()).unwrap_or(&[]) {
        eprintln!(
            "{}: lambda calibrated to {} dB for pf target {}",
            cell.rule.label(),
            cell.lambda_db,
            table.pf_target
        );
    }
    Ok(())
}

fn robustness(args: &RunArgs, cfg: &ScenarioConfig) -> Result<(), AppError> {
    let settings = cfg.robustness.ok_or_else(|| {
        AppError::Config("robustness subcommand needs a [robustness] config section".into())
    })?;
    let outcome = fixed_threshold_robustness(cfg, settings.objective)?;
    write_file(&args.out.join("robustness.csv"), |w| {
        write_robustness_csv(&outcome, w)
    })?;
    for curve in &outcome.curves {
        eprintln!(
            "{}: lambda {} dB, worst pm {:.4}, worst pf {:.4}",
            curve.rule.label(),
            curve.lambda_db,
            curve.worst_pm(),
            curve.worst_pf()
        );
    }
    Ok(())
}

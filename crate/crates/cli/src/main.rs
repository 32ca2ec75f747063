//! Experiment runner CLI.
//!
//! Subcommands:
//!
//! * `solve <config.json>` — run one experiment (or a JSON array of them),
//!   writing `trace.csv`, `diagnostics.csv`, and `summary.json` per run.
//!   Exit 0 when the run completed and every enabled diagnostic passed,
//!   exit 2 on diagnostic failure, exit 1 on config or runtime errors.
//! * `compare <a.json> <b.json> --tol T` — run both configs on the identical
//!   problem and report the per-iteration divergence; exit 0 iff within T.
//! * `validate-schedule <config.json> --horizon K` — check the step-size
//!   conditions without running; exit 0 when feasible, 2 otherwise.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use bregmax::experiment::{
    compare_runs, load_configs, run_experiment, schedule_report, summarize, CheckSpec,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "bregmax",
    version,
    about = "Bregman extragradient/extrapolation experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment(s) described by a JSON config.
    Solve(SolveArgs),
    /// Run two configs on the same problem and compare their iterates.
    Compare(CompareArgs),
    /// Validate the step-size schedule of a config without running it.
    ValidateSchedule(ValidateArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Experiment config (a JSON object, or an array of them).
    config: PathBuf,
    /// Output directory (overrides the config's `out_dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the diagnostics selection: `all`, `none`, or a
    /// comma-separated list of check names.
    #[arg(long)]
    check: Option<String>,
    /// Run experiments from a config list with this many worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Suppress progress output.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct CompareArgs {
    config_a: PathBuf,
    config_b: PathBuf,
    /// Max per-iterate coordinate difference to accept.
    #[arg(long)]
    tol: f64,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ValidateArgs {
    config: PathBuf,
    /// Number of iterations to check the schedule conditions for.
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn paint(text: &str, ok: bool) -> String {
    if use_color() {
        let code = if ok { "32" } else { "31" };
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Compare(args) => compare(args),
        Command::ValidateSchedule(args) => validate(args),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_with_overrides(args: &SolveArgs) -> bregmax::Result<Vec<ExperimentConfig>> {
    let mut configs = load_configs(&args.config)?;
    if let Some(check) = &args.check {
        let spec = CheckSpec::parse_cli(check)?;
        for config in &mut configs {
            config.checks = spec.clone();
        }
    }
    Ok(configs)
}

fn out_dir_for(config: &ExperimentConfig, idx: usize, total: usize, args: &SolveArgs) -> PathBuf {
    let base = args
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if total == 1 {
        base
    } else {
        let leaf = config.name.clone().unwrap_or_else(|| format!("exp{idx}"));
        base.join(leaf)
    }
}

fn solve(args: SolveArgs) -> bregmax::Result<ExitCode> {
    let configs = load_with_overrides(&args)?;
    if args.jobs == 0 {
        return Err(bregmax::Error::Config("--jobs must be at least 1".into()));
    }
    let total = configs.len();
    let started = Instant::now();

    // independent experiments fan out over a bounded worker pool; each run is
    // internally sequential
    let jobs = args.jobs.min(total.max(1));
    let (tx, rx) = mpsc::channel::<(usize, bregmax::Result<bool>)>();
    let queue = std::sync::Mutex::new(configs.iter().enumerate().collect::<Vec<_>>());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let queue = &queue;
            let args = &args;
            scope.spawn(move || loop {
                let job = queue.lock().expect("queue lock").pop();
                let Some((idx, config)) = job else { break };
                let dir = out_dir_for(config, idx, total, args);
                let outcome = run_experiment(config, &dir).map(|artifacts| {
                    if !args.quiet {
                        let summary = summarize(&artifacts);
                        let label = config.name.clone().unwrap_or_else(|| format!("exp{idx}"));
                        let status = paint(
                            if summary.all_inequalities_pass { "pass" } else { "FAIL" },
                            summary.all_inequalities_pass,
                        );
                        println!(
                            "[{label}] {} iterations, final residual {:.3e}, checks {} ({} reports) -> {}",
                            summary.iterations,
                            summary.final_residual.unwrap_or(f64::NAN),
                            status,
                            artifacts.reports.len(),
                            dir.display(),
                        );
                    }
                    artifacts.all_checks_pass
                });
                if tx.send((idx, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
    });

    let mut worst = ExitCode::SUCCESS;
    let mut first_error: Option<bregmax::Error> = None;
    for (_, outcome) in rx.iter() {
        match outcome {
            Ok(true) => {}
            Ok(false) => {
                if worst == ExitCode::SUCCESS {
                    worst = ExitCode::from(2);
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    if !args.quiet {
        eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    }
    Ok(worst)
}

fn compare(args: CompareArgs) -> bregmax::Result<ExitCode> {
    let config_a = single_config(&args.config_a)?;
    let config_b = single_config(&args.config_b)?;
    let report = compare_runs(&config_a, &config_b, Some(args.tol))?;
    if !args.quiet {
        for (k, diff) in &report.per_k {
            if *diff > args.tol {
                println!("k={k}: max coordinate diff {diff:.3e}");
            }
        }
    }
    let pass = report.pass == Some(true);
    println!(
        "compared {} iterates: max diff {:.3e} at k={} -> {}",
        report.per_k.len(),
        report.max_diff,
        report.argmax_k,
        paint(if pass { "pass" } else { "FAIL" }, pass),
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn validate(args: ValidateArgs) -> bregmax::Result<ExitCode> {
    let config = single_config(&args.config)?;
    let report = schedule_report(&config, args.horizon)?;
    match &report.first_violation {
        None => {
            println!(
                "schedule feasible for {} over horizon {} -> {}",
                report.method,
                report.horizon,
                paint("pass", true)
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(v) => {
            println!(
                "schedule violation at k={}: {} -> {}",
                v.k,
                v.condition,
                paint("FAIL", false)
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn single_config(path: &Path) -> bregmax::Result<ExperimentConfig> {
    let mut configs = load_configs(path)?;
    if configs.len() != 1 {
        return Err(bregmax::Error::Config(format!(
            "{} must contain exactly one experiment config",
            path.display()
        )));
    }
    Ok(configs.remove(0))
}

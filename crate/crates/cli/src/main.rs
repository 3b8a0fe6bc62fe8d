//! Config-driven runner for maximum-entropy assignment scenarios.
//!
//! Subcommands:
//! - `run <config>`: execute the scenarios in a TOML config, write one text
//!   report per scenario plus a combined `results.csv`.
//! - `check <config>`: parse and validate only, listing every problem found.
//! - `list`: print the scenario registry with required parameters.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 config parse or
//! validation failure, 3 infeasible constraints, 4 solver or oracle
//! non-convergence, 5 violated scenario precondition or inconsistent inputs.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entroprod::scenario::{self, ScenarioReport};
use entroprod::Error as CoreError;

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NON_CONVERGENCE: u8 = 4;
const EXIT_PRECONDITION: u8 = 5;

/// Environment variable overriding the output directory (below the
/// `--output` flag in precedence, above the config file).
const OUTPUT_ENV: &str = "ENTROPROD_OUTPUT";

#[derive(Parser)]
#[command(
    name = "entroprod",
    about = "Maximum-entropy state assignment and entropy production scenarios",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios in a config file and write reports and CSV
    Run {
        /// Path to the TOML configuration
        config: PathBuf,
        /// Output directory (overrides ENTROPROD_OUTPUT and the config)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed override for random states and derived per-scenario seeds
        #[arg(long)]
        seed: Option<u64>,
        /// Constraint tolerance override for every solve
        #[arg(long)]
        tol: Option<f64>,
        /// Fan scenarios out over this many worker threads
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Validate a config file without running anything
    Check {
        /// Path to the TOML configuration
        config: PathBuf,
    },
    /// List available scenarios and their required parameters
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            output,
            seed,
            tol,
            parallel,
        } => run(&config, output, seed, tol, parallel),
        Command::Check { config } => check(&config),
        Command::List => {
            print!("{}", render_list());
            0
        }
    };
    ExitCode::from(code)
}

fn render_list() -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "{:<18} {:<55} summary", "id", "required parameters");
    for info in scenario::REGISTRY {
        let _ = writeln!(
            out,
            "{:<18} {:<55} {}",
            info.id, info.required, info.summary
        );
    }
    out
}

fn load_plan(path: &Path, seed: Option<u64>, tol: Option<f64>) -> Result<config::RunPlan, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_IO);
        }
    };
    let raw = match config::parse_text(&text) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Err(EXIT_PARSE);
        }
    };
    match config::validate(&raw, seed, tol) {
        Ok(plan) => Ok(plan),
        Err(problems) => {
            eprintln!("error: configuration is invalid:");
            for p in &problems {
                eprintln!("  - {p}");
            }
            Err(EXIT_PARSE)
        }
    }
}

fn check(path: &Path) -> u8 {
    match load_plan(path, None, None) {
        Ok(plan) => {
            println!(
                "ok: {} scenario(s), seed {}",
                plan.scenarios.len(),
                plan.seed
            );
            for s in &plan.scenarios {
                println!("  {} ({})", s.name, s.spec.scenario_id());
            }
            0
        }
        Err(code) => code,
    }
}

fn error_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Infeasible(_) => EXIT_INFEASIBLE,
        CoreError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
        _ => EXIT_PRECONDITION,
    }
}

fn run(
    path: &Path,
    output: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    parallel: Option<usize>,
) -> u8 {
    let plan = match load_plan(path, seed, tol) {
        Ok(p) => p,
        Err(code) => return code,
    };

    let out_dir = output
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .or_else(|| plan.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("entroprod-out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_IO;
    }

    let specs: Vec<_> = plan.scenarios.iter().map(|s| s.spec.clone()).collect();
    let results = scenario::run_batch(&specs, parallel);

    let mut reports: Vec<(String, ScenarioReport)> = Vec::new();
    let mut exit = 0u8;
    for (planned, result) in plan.scenarios.iter().zip(results) {
        match result {
            Ok(report) => {
                let report = report.with_seed(planned.seed);
                if !report.converged && exit == 0 {
                    eprintln!(
                        "warning: scenario '{}' did not converge (max oracle delta {:.3e})",
                        planned.name,
                        report.max_oracle_delta()
                    );
                    exit = EXIT_NON_CONVERGENCE;
                }
                reports.push((planned.name.clone(), report));
            }
            Err(e) => {
                eprintln!("error: scenario '{}': {e}", planned.name);
                if exit == 0 {
                    exit = error_exit_code(&e);
                }
            }
        }
    }

    for (name, report) in &reports {
        let path = out_dir.join(format!("{name}.txt"));
        if let Err(e) = std::fs::write(&path, output::render_report(name, report)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_IO;
        }
    }
    let csv_path = out_dir.join("results.csv");
    if let Err(e) = std::fs::write(&csv_path, output::render_csv(&reports)) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_IO;
    }

    for (name, report) in &reports {
        println!(
            "{name}: {} (max oracle delta {:.3e})",
            if report.converged {
                "converged"
            } else {
                "NOT CONVERGED"
            },
            report.max_oracle_delta()
        );
    }
    println!("wrote {}", csv_path.display());
    exit
}

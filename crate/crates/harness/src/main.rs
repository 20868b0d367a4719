use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mlbq::allocation::{mlbq_allocation, mlmc_allocation, AllocationInput, AllocationPlan};
use mlbq_harness::calibration::{calibration_table, write_calibration, DEFAULT_LEVELS};
use mlbq_harness::engine::{run_experiment, ExperimentOutput};
use mlbq_harness::records::{read_records, write_cells, write_records};
use mlbq_harness::{oracle, ExperimentConfig, HarnessError, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mlbq", version, about = "Multilevel Bayesian quadrature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Mlmc,
    Mlbq,
}

#[derive(Subcommand)]
enum Command {
    /// Print the optimal sample sizes per level as JSON.
    Allocate {
        #[arg(long, value_enum)]
        rule: Rule,
        /// Level variances (mlmc) or increment norms (mlbq), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        magnitudes: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        costs: Vec<f64>,
        /// One or more budgets, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        budget: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        smoothness: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        overhead: f64,
    },
    /// Run every estimator in a config once and print the results.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full budget sweep and write one CSV row per estimate.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's output path; `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn an experiment CSV into a coverage table.
    Calibrate {
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check derived reference values against independent oracles.
    Oracle,
}

#[derive(Serialize)]
struct PlanReport {
    budget: f64,
    real: Vec<f64>,
    counts: Vec<usize>,
    realized_cost: f64,
    real_objective: f64,
    objective: f64,
}

impl PlanReport {
    fn new(budget: f64, p: AllocationPlan<f64>) -> Self {
        Self {
            budget,
            real: p.real,
            counts: p.counts,
            realized_cost: p.realized_cost,
            real_objective: p.real_objective,
            objective: p.objective,
        }
    }
}

fn create(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) if p == Path::new("-") => Ok(Box::new(io::stdout().lock())),
        Some(p) => {
            let f = File::create(p).map_err(|source| HarnessError::Io { path: p.to_owned(), source })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report_failures(out: &ExperimentOutput) -> Result<()> {
    for n in &out.notes {
        eprintln!("note: {n}");
    }
    for f in &out.failures {
        eprintln!("cell failure: budget {} replication {} {}: {}", f.budget, f.replication, f.estimator, f.message);
    }
    if out.failures.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::CellFailures(out.failures.len()))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Allocate { rule, magnitudes, costs, budget, smoothness, dim, overhead } => {
            let mut plans = Vec::new();
            for t in budget {
                let plan = match rule {
                    Rule::Mlmc => mlmc_allocation(&AllocationInput::mlmc(magnitudes.clone(), costs.clone(), t)?)?,
                    Rule::Mlbq => mlbq_allocation(&AllocationInput::mlbq(
                        magnitudes.clone(),
                        costs.clone(),
                        t,
                        smoothness,
                        dim,
                        overhead,
                    )?)?,
                };
                plans.push(PlanReport::new(t, plan));
            }
            println!("{}", serde_json::to_string_pretty(&plans)?);
            Ok(())
        }
        Command::Estimate { config, seed, jobs, out } => {
            let mut cfg = load(&config, seed)?;
            cfg.replications = 1;
            let res = run_experiment(&cfg, jobs)?;
            eprintln!("reference {}", res.reference);
            write_records(create(out.as_deref())?, &res.records)?;
            report_failures(&res)
        }
        Command::Experiment { config, seed, jobs, out } => {
            let cfg = load(&config, seed)?;
            let path = out.or_else(|| cfg.output.clone());
            let res = run_experiment(&cfg, jobs)?;
            write_records(create(path.as_deref())?, &res.records)?;
            if let Some(p) = path.filter(|p| p != Path::new("-")) {
                let cells = p.with_extension("cells.csv");
                write_cells(create(Some(&cells))?, &res.cells)?;
            }
            report_failures(&res)
        }
        Command::Calibrate { input, levels, out } => {
            let f = File::open(&input).map_err(|source| HarnessError::Io { path: input.clone(), source })?;
            let records = read_records(f)?;
            let levels = levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
            let rows = calibration_table(&records, &levels)?;
            write_calibration(create(out.as_deref())?, &rows)
        }
        Command::Oracle => {
            let checks = oracle::report()?;
            let mut failed = 0;
            for c in &checks {
                println!("{c}");
                failed += usize::from(!c.passed());
            }
            if failed > 0 {
                return Err(HarnessError::Numerical(mlbq::Error::InvalidParameter(format!("{failed} oracle check(s) failed"))));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

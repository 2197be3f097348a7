use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnrl::agents::BaselineVersion;
use pnrl::harness::{
    cmd_baseline, cmd_eval, cmd_pn_check, cmd_sweep, cmd_train, EvalRequest, Grid, HarnessError,
    RunConfig,
};
use pnrl::metrics::EvalSummary;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "pnrl", version, about = "Petri-net constrained RL on a traffic junction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write model, training log and config snapshot.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set agent.gamma=0.9`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output directory; defaults to `output_dir` from the config, then `runs/train`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a trained model greedily with the shield on.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to the model's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-step trace.
        #[arg(long)]
        trace: bool,
        /// Also write the log of violating requests.
        #[arg(long)]
        violations: bool,
    },
    /// Evaluate a fixed round-robin signal cycle.
    Baseline {
        #[arg(long, value_parser = ["v1", "v2"])]
        version: String,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate one agent per reward-weight grid cell.
    Sweep {
        /// Grid TOML file, or `default` for the 256-cell grid.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value = "runs/sweep")]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        eval_seed: u64,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Petri net tools.
    Pn {
        #[command(subcommand)]
        command: PnCommand,
    },
}

#[derive(Subcommand)]
enum PnCommand {
    /// Bounded reachability analysis; exits 3 on deadlock or truncation.
    Check {
        /// Net JSON file, or `traffic_light`.
        file: String,
        #[arg(long, default_value_t = 10_000)]
        bound: usize,
    },
}

fn load_config(path: Option<&PathBuf>, sets: &[String]) -> Result<RunConfig, HarnessError> {
    match path {
        Some(p) => RunConfig::load(p, sets),
        None => RunConfig::from_overrides(sets),
    }
}

fn print_summary(s: &EvalSummary) {
    println!("{}", EvalSummary::CSV_HEADER);
    println!("{}", s.csv_row());
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Train { config, sets, out } => {
            let cfg = load_config(config.as_ref(), &sets)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs/train"));
            let r = cmd_train(&cfg, &dir)?;
            println!(
                "trained {} steps, {} episodes -> {}",
                r.steps,
                r.episodes,
                r.model.display()
            );
        }
        Command::Eval {
            model,
            episodes,
            seed,
            out,
            trace,
            violations,
        } => {
            let req = EvalRequest {
                out_dir: out,
                trace,
                violation_log: violations,
                ..EvalRequest::new(episodes, seed)
            };
            print_summary(&cmd_eval(&model, &req)?);
        }
        Command::Baseline {
            version,
            episodes,
            seed,
            config,
            sets,
            out,
        } => {
            let cfg = load_config(config.as_ref(), &sets)?;
            let version: BaselineVersion = version.parse().map_err(HarnessError::Config)?;
            let req = EvalRequest {
                out_dir: out,
                ..EvalRequest::new(episodes, seed)
            };
            print_summary(&cmd_baseline(&cfg, version, &req)?);
        }
        Command::Sweep {
            grid,
            config,
            sets,
            out,
            episodes,
            eval_seed,
            jobs,
        } => {
            let cfg = load_config(config.as_ref(), &sets)?;
            let grid = if grid == "default" {
                Grid::full()
            } else {
                Grid::load(std::path::Path::new(&grid))?
            };
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let report = cmd_sweep(&cfg, &grid, &out, &EvalRequest::new(episodes, eval_seed), jobs)?;
            print!("{}", report.leaderboard_csv());
            if !report.failures.is_empty() {
                eprintln!("{} cells failed, see failures.csv", report.failures.len());
            }
        }
        Command::Pn {
            command: PnCommand::Check { file, bound },
        } => {
            let check = cmd_pn_check(&file, bound)?;
            println!("{check}");
            if !check.passed() {
                return Ok(ExitCode::from(EXIT_VERIFY));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}

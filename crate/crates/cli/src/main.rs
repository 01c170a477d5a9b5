use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use overhang_cli::{parse_weights, run, status_name, Overrides, RunConfig};
use overhang_core::planner::{Ablation, Weights};

#[derive(Parser)]
#[command(
    name = "overhang",
    version,
    about = "Overhang-aware path planning in a road corridor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum AblationArg {
    Full,
    NoOverhangObjective,
    CenterOnly,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => Ablation::Full,
            AblationArg::NoOverhangObjective => Ablation::NoOverhangObjective,
            AblationArg::CenterOnly => Ablation::CenterOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write trajectory.csv and summary.json.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write plan.svg.
        #[arg(long)]
        svg: bool,
        #[arg(long, value_enum, default_value = "full")]
        ablation: AblationArg,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Objective weights as `center,smooth,overhang`.
        #[arg(long, value_parser = parse_weights)]
        weights: Option<Weights>,
    },
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for infeasible plans.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Plan {
        scenario,
        out,
        svg,
        ablation,
        max_iter,
        tol,
        weights,
    } = cli.command;
    let config = RunConfig {
        scenario_path: scenario,
        out_dir: out,
        emit_plot: svg,
        ablation: ablation.into(),
        overrides: Overrides { weights, max_iter, tol },
    };
    match run(&config) {
        Ok(outcome) => {
            let exit = outcome
                .report
                .as_ref()
                .map(|r| format!("{:.4}", r.max_overhang_exit))
                .unwrap_or_else(|e| format!("n/a ({e})"));
            match outcome.plan.infeasible_iteration {
                Some(k) => eprintln!("infeasible QP at SQP iteration {k}"),
                None => eprintln!(
                    "{} after {} iterations, overhang exit {exit} m",
                    status_name(outcome.plan.status),
                    outcome.plan.iterations
                ),
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! `clm`: evaluate, trace and synthesise closed-chain leg mechanisms.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clm_core::Error;

#[derive(Parser)]
#[command(name = "clm", version = env!("CLM_GIT_DESCRIBE"), about = "Closed-chain leg mechanism toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Primary,
    Auxiliary,
}

#[derive(Subcommand)]
enum Command {
    /// Print the performance report of a mechanism file.
    Eval {
        mechanism: PathBuf,
        /// Cycloid JSON or trajectory CSV to compare against.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
        /// Seven-bar legs only: evaluate just this mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 3600)]
        n: usize,
        /// Crank period in seconds.
        #[arg(long, default_value_t = 2.0)]
        period: f64,
        /// Leg layout JSON used for the crossing probabilities.
        #[arg(long)]
        layout: Option<PathBuf>,
    },
    /// Write the bench trajectory as CSV, optionally with walking trajectories.
    Trace {
        mechanism: PathBuf,
        #[arg(long, default_value_t = 360)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        period: f64,
        /// Also write the walking trajectory of one swing.
        #[arg(long)]
        wt: bool,
        /// Leg layout JSON: write one positioned walking trajectory per leg plus the Δx summary.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output directory; without it the bench trajectory goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the hierarchical design flow (or the single-level baseline).
    Synth {
        #[arg(long, default_value = "stephenson1")]
        topology: String,
        /// Cycloid target JSON.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Pipeline configuration JSON; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        single_level: bool,
        /// Population 200 instead of the desk-scale 60.
        #[arg(long)]
        full_budget: bool,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Design a reconfigurable seven-bar leg for two crossing heights.
    Rtclm {
        #[arg(long)]
        h6: f64,
        #[arg(long)]
        h4: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render trajectories (CSV) or an archive (JSONL) as SVG.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

/// 1 input, 2 kinematic infeasibility, 3 optimisation failure.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(e) if e.is_kinematic() => 2,
        Some(
            Error::NoFeasibleIndividual { .. }
            | Error::InfeasibleIncumbent(_)
            | Error::DegenerateFront,
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval {
            mechanism,
            target,
            csv,
            json: _,
            mode,
            n,
            period,
            layout,
        } => commands::eval(
            &mechanism,
            target.as_deref(),
            csv,
            mode,
            n,
            period,
            layout.as_deref(),
        ),
        Command::Trace {
            mechanism,
            n,
            period,
            wt,
            layout,
            mode,
            out,
        } => commands::trace(
            &mechanism,
            n,
            period,
            wt,
            layout.as_deref(),
            mode,
            out.as_deref(),
        ),
        Command::Synth {
            topology,
            target,
            config,
            seed,
            out,
            single_level,
            full_budget,
            population,
            generations,
            jobs,
        } => commands::synth(commands::SynthArgs {
            topology,
            target,
            config,
            seed,
            out,
            single_level,
            full_budget,
            population,
            generations,
            jobs,
        }),
        Command::Rtclm {
            h6,
            h4,
            config,
            seed,
            out,
            jobs,
        } => commands::rtclm(h6, h4, config.as_deref(), seed, &out, jobs),
        Command::Plot { inputs, svg, title } => commands::plot(&inputs, &svg, title.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

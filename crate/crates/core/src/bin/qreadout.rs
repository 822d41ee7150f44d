use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qreadout::io::{parse_config, run, Command, RunOptions};
use qreadout::Error;

#[derive(Parser)]
#[command(name = "qreadout", version, about = "Superconducting qubit readout design and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inductance, capacitance and L_k frequency band of one spiral resonator
    DesignResonator(RunArgs),
    /// Frequency band across spiral lengths, optionally against measurements
    SweepSpiral(RunArgs),
    /// Kinetic inductance from quarter-wave CPW test resonators
    FitLk(RunArgs),
    /// Linewidth from a ring-down trace and/or the κ(d) offset model
    FitKappa(RunArgs),
    /// Dielectric quality factor from T1 versus qubit frequency
    FitQdiel(RunArgs),
    /// Dielectric, Purcell and total T1 over qubit frequency
    BudgetT1(RunArgs),
    /// Monte-Carlo single-shot IQ records and histogram SNR
    SimulateReadout(RunArgs),
    /// Closed-form and Monte-Carlo SNR across measurement times
    SnrSweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: run.output_dir, then $QREADOUT_OUT_DIR, then ./qreadout-out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plots: bool,
}

impl Cmd {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Cmd::DesignResonator(a) => (Command::DesignResonator, a),
            Cmd::SweepSpiral(a) => (Command::SweepSpiral, a),
            Cmd::FitLk(a) => (Command::FitLk, a),
            Cmd::FitKappa(a) => (Command::FitKappa, a),
            Cmd::FitQdiel(a) => (Command::FitQdiel, a),
            Cmd::BudgetT1(a) => (Command::BudgetT1, a),
            Cmd::SimulateReadout(a) => (Command::SimulateReadout, a),
            Cmd::SnrSweep(a) => (Command::SnrSweep, a),
        }
    }
}

fn execute(command: Command, args: RunArgs) -> Result<(), Error> {
    let config = parse_config(&args.config)?;
    let options = RunOptions {
        seed: args.seed,
        output_dir: args.out,
        plots: args.plots,
        workers: None,
    };
    let summary = run(command, &config, &options)?;
    for name in &summary.artifacts {
        println!("{}", summary.output_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (command, args) = Cli::parse().command.split();
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One line, tab-separated: error, command, kind, message.
            let message = e.to_string().replace(['\n', '\t'], " ");
            eprintln!("error\t{command}\t{}\t{message}", e.kind());
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use chanproj_cli::config::{BuiltinName, EncodingName};
use chanproj_cli::{exit_code, run, Command, Overrides, RunArgs};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Projections of finite channels onto exponential and mixture families.
#[derive(Parser)]
#[command(name = "chanproj", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Project a channel onto the exponential family of its constraints
    Project(CommonArgs),
    /// Synergy d2 of a two-input, one-output channel
    Synergy(CommonArgs),
    /// Complexities c1 and c2 of a two-input, two-output channel
    Complexity(CommonArgs),
    /// Channel-level against joint-level scaling on one problem, as a CSV trace
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON problem config
    #[arg(long, value_name = "PATH", required_unless_present = "builtin", conflicts_with = "builtin")]
    config: Option<PathBuf>,
    /// Built-in example channel instead of a config
    #[arg(long, value_enum, value_name = "NAME")]
    builtin: Option<BuiltinName>,
    /// Write the result here instead of standard output
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Trace CSV path (default: output path with a .trace.csv extension, or trace.csv)
    #[arg(long, value_name = "PATH")]
    trace_output: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    tolerance: Option<f64>,
    #[arg(long, value_name = "N")]
    max_sweeps: Option<usize>,
    /// Report divergences in bits
    #[arg(long)]
    bits: bool,
    /// Record a per-sweep trace
    #[arg(long)]
    trace: bool,
    /// Gate noise level in [0, 1)
    #[arg(long, value_name = "F")]
    noise: Option<f64>,
    #[arg(long, value_name = "F")]
    alpha: Option<f64>,
    #[arg(long, value_name = "F")]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    encoding: Option<EncodingName>,
    /// Print the resolved config and exit
    #[arg(long)]
    dump_config: bool,
}

impl From<CommonArgs> for RunArgs {
    fn from(a: CommonArgs) -> Self {
        RunArgs {
            config: a.config,
            builtin: a.builtin,
            output: a.output,
            trace_output: a.trace_output,
            dump_config: a.dump_config,
            overrides: Overrides {
                tolerance: a.tolerance,
                max_sweeps: a.max_sweeps,
                bits: a.bits,
                trace: a.trace,
                noise: a.noise,
                alpha: a.alpha,
                beta: a.beta,
                encoding: a.encoding,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // usage errors are config errors here; 2 is reserved for infeasible scaling
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Project(a) => (Command::Project, a),
        Cmd::Synergy(a) => (Command::Synergy, a),
        Cmd::Complexity(a) => (Command::Complexity, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    match run(command, &args.into()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

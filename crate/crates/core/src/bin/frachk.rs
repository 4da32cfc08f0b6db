use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use frachk::output::{run, Mode};
use frachk::{parse_scenario, Bundled, Error, Scenario};

#[derive(Parser)]
#[command(
    name = "frachk",
    version,
    about = "Fractional leader-follower opinion dynamics with bounded optimal control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Controlled,
    Uncontrolled,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Controlled => Mode::Controlled,
            ModeArg::Uncontrolled => Mode::Uncontrolled,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoArg {
    Example1,
    Example2,
}

#[derive(clap::Args)]
struct RunOpts {
    #[arg(long, value_enum, default_value = "compare")]
    mode: ModeArg,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the number of grid intervals.
    #[arg(long)]
    grid: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario file and write CSV trajectories plus summary.json.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run one of the bundled scenarios.
    Demo {
        #[arg(value_enum)]
        which: DemoArg,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a scenario file without solving it.
    Validate { file: PathBuf },
}

fn execute(scenario: Scenario, opts: RunOpts) -> Result<(), Error> {
    let scenario = match opts.grid {
        Some(n) => scenario.with_intervals(n)?,
        None => scenario,
    };
    let (artifacts, summary) = run(&scenario, opts.mode.into(), &opts.out, opts.force)?;
    for path in artifacts.paths() {
        println!("wrote {}", path.display());
    }
    if let Some(cost) = summary.cost {
        println!(
            "cost {cost}  (zero control {})",
            summary.cost_zero_control.unwrap_or(f64::NAN)
        );
    }
    if let Some(ratio) = summary.diameter_ratio {
        println!("terminal diameter ratio {ratio}");
    }
    if summary.converged == Some(false) {
        eprintln!("warning: sweep did not converge");
    }
    Ok(())
}

enum Failure {
    /// The scenario could not be read or is malformed.
    Input(Error),
    /// Solving or writing failed for the named scenario.
    Run(String, Error),
}

fn load(file: &PathBuf) -> Result<Scenario, Failure> {
    parse_scenario(file).map_err(Failure::Input)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { file, opts } => load(&file).and_then(|s| {
            execute(s, opts).map_err(|e| Failure::Run(file.display().to_string(), e))
        }),
        Command::Demo { which, opts } => {
            let bundled = match which {
                DemoArg::Example1 => Bundled::Example1,
                DemoArg::Example2 => Bundled::Example2,
            };
            execute(bundled.scenario(), opts)
                .map_err(|e| Failure::Run(bundled.name().to_string(), e))
        }
        Command::Validate { file } => load(&file).map(|s| {
            println!(
                "ok: {} agents, d = {}, alpha = {}, n = {}",
                s.network().agents(),
                s.network().dim(),
                s.alpha().value(),
                s.grid().intervals()
            );
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(name, e)) => {
            eprintln!("error in scenario {name}: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

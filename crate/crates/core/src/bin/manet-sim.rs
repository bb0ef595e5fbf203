use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use manet_sim::engine::parse_scenario;
use manet_sim::matrix::{write_results, ExperimentMatrix};
use manet_sim::{Mode, ScenarioConfig};

/// Run a speed × mode × seed experiment matrix and write CSV results.
#[derive(Debug, Parser)]
#[command(name = "manet-sim", version)]
struct Args {
    /// Scenario file (key = value); defaults are used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated node speeds in m/s.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 5.0, 10.0, 15.0, 20.0])]
    speeds: Vec<f64>,
    /// Comma-separated modes: clean, attack, attack+detection.
    #[arg(long, value_delimiter = ',', default_value = "clean,attack,attack+detection")]
    modes: Vec<Mode>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write one event trace per run.
    #[arg(long)]
    trace: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let base = match &args.scenario {
        Some(p) => match parse_scenario(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => ScenarioConfig::default(),
    };
    let matrix =
        ExperimentMatrix { base, speeds: args.speeds, modes: args.modes, seeds: args.seeds, traces: args.trace };
    for key in matrix.cells() {
        if let Err(e) = matrix.config_for(&key).validate() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let cells = match matrix.run() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_results(&args.out, &cells) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    println!("{} runs written to {}", cells.len(), args.out.display());
    ExitCode::SUCCESS
}

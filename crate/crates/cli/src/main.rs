use std::process::ExitCode;

use clap::Parser;
use log::info;
use wallsim::runner::{run_headless_with, RunError, Simulation};
use wallsim::server::run_realtime;
use wallsim::{Cli, RunConfig};

fn run(cli: &Cli) -> Result<(), RunError> {
    let config = RunConfig::from_cli(cli)?;
    let mut sim = Simulation::from_config(&config)?;
    if config.headless {
        let summary = run_headless_with(&mut sim, |_| {})?;
        info!("{} ticks, {} telemetry frames, collided: {}", summary.ticks, summary.telemetry_frames, summary.collided);
    } else {
        let summary = run_realtime(&mut sim, |_| {})?;
        info!("{} ticks in {:.3} s", summary.run.ticks, summary.elapsed.as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wallsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Runner for the wall-following simulator: configuration, script replay,
//! the tick pipeline, and the teleoperation WebSocket server.

pub mod config;
pub mod runner;
pub mod script;
pub mod server;

pub use config::{Cli, RunConfig};
pub use runner::{run_headless, ControlHub, RunError, Simulation, TickRecord};

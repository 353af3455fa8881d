//! Run configuration: command-line flags layered over an optional JSON file
//! with the same keys.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;
use wallsim_core::supervisor::Mode;
use wallsim_core::{FollowerParams, RobotGeometry, SafetyParams, SonarConfig, TeleopParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Parser, Default)]
#[command(name = "wallsim", version, about = "Wall-following robot simulator with teleoperation")]
pub struct Cli {
    /// Map file to load.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Control mode: auto, teleop or hybrid.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// WebSocket listen address for teleoperation clients.
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long)]
    pub tick_hz: Option<u32>,
    #[arg(long)]
    pub telemetry_hz: Option<u32>,
    /// Simulated duration in seconds. Required with --headless.
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Run as fast as possible without the network server.
    #[arg(long)]
    pub headless: bool,
    /// Write one telemetry JSON object per line here.
    #[arg(long = "log")]
    pub log: Option<PathBuf>,
    /// Scripted client frames to replay on simulation time.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// JSON run-config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Controller and robot parameter overrides. Missing keys keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub geometry: RobotGeometry,
    pub sonar: SonarConfig,
    pub follower: FollowerParams,
    pub teleop: TeleopParams,
    pub safety: SafetyParams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    map: Option<PathBuf>,
    mode: Option<Mode>,
    listen: Option<String>,
    tick_hz: Option<u32>,
    telemetry_hz: Option<u32>,
    duration_s: Option<f64>,
    headless: Option<bool>,
    log: Option<PathBuf>,
    script: Option<PathBuf>,
    params: Params,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub map_path: PathBuf,
    pub mode: Mode,
    pub listen: SocketAddr,
    pub tick_hz: u32,
    pub telemetry_hz: u32,
    pub duration_s: Option<f64>,
    pub headless: bool,
    pub log_path: Option<PathBuf>,
    pub script_path: Option<PathBuf>,
    pub params: Params,
}

impl RunConfig {
    /// Defaults for the given map, headless for `duration_s` seconds.
    pub fn headless(map_path: impl Into<PathBuf>, duration_s: f64) -> Self {
        Self {
            map_path: map_path.into(),
            mode: Mode::default(),
            listen: "127.0.0.1:9090".parse().unwrap(),
            tick_hz: 50,
            telemetry_hz: 10,
            duration_s: Some(duration_s),
            headless: true,
            log_path: None,
            script_path: None,
            params: Params::default(),
        }
    }

    pub fn from_cli(cli: &Cli) -> Result<Self, ConfigError> {
        let file = match &cli.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let map_path = cli
            .map
            .clone()
            .or(file.map)
            .ok_or_else(|| ConfigError::Invalid("a map is required (--map or \"map\" in the config file)".into()))?;
        let listen = cli.listen.clone().or(file.listen).unwrap_or_else(|| "127.0.0.1:9090".into());
        let listen = listen
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("invalid listen address `{listen}`, expected host:port")))?;
        let config = Self {
            map_path,
            mode: cli.mode.or(file.mode).unwrap_or_default(),
            listen,
            tick_hz: cli.tick_hz.or(file.tick_hz).unwrap_or(50),
            telemetry_hz: cli.telemetry_hz.or(file.telemetry_hz).unwrap_or(10),
            duration_s: cli.duration_s.or(file.duration_s),
            headless: cli.headless || file.headless.unwrap_or(false),
            log_path: cli.log.clone().or(file.log),
            script_path: cli.script.clone().or(file.script),
            params: file.params,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.telemetry_hz < 1 || self.tick_hz < self.telemetry_hz {
            return invalid(format!(
                "rates must satisfy tick_hz >= telemetry_hz >= 1, got {} and {}",
                self.tick_hz, self.telemetry_hz
            ));
        }
        match self.duration_s {
            Some(d) if !(d.is_finite() && d >= 0.0) => return invalid(format!("duration_s must be non-negative, got {d}")),
            None if self.headless => return invalid("--duration-s is required with --headless".into()),
            _ => {}
        }
        let p = &self.params;
        let core = |r: wallsim_core::Result<()>| r.map_err(|e| ConfigError::Invalid(e.to_string()));
        core(p.geometry.validate())?;
        core(p.sonar.validate())?;
        core(p.follower.validate(&p.geometry))?;
        core(p.teleop.validate())?;
        let s = &p.safety;
        if !(s.danger_below > 0.0 && s.warn_below >= s.danger_below && s.stop_dist > 0.0 && s.teleop_timeout >= 0.0) {
            return invalid("safety thresholds must be positive with warn_below >= danger_below".into());
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.tick_hz)
    }

    /// Number of ticks covering `duration_s`.
    pub fn total_ticks(&self) -> Option<u64> {
        self.duration_s.map(|d| (d * f64::from(self.tick_hz)).round() as u64)
    }
}

fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
}

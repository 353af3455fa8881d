//! The tick pipeline: operator input, wall follower, arbitration, safety
//! clamp, physics, bus publication and telemetry.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use thiserror::Error;
use wallsim_core::autonomy::Phase;
use wallsim_core::bus::{self, Bus, Payload};
use wallsim_core::simcore::{step, SimState as State};
use wallsim_core::supervisor::{arbitrate, clamp_for_safety, classify_scan, Mode};
use wallsim_core::teleop::{self, encode_telemetry, ClientId, ProtocolError, Session};
use wallsim_core::world::{load_map, BeamRoles, MapError};
use wallsim_core::{ControlDecision, RobotGeometry, SimState, TeleopParams, Twist, WallFollower, WorldMap};

use crate::config::{ConfigError, RunConfig};
use crate::script::{parse_script, ScriptCursor, ScriptError};

/// Client id used for scripted frames.
pub const SCRIPT_CLIENT: ClientId = 0;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read map {path}: {source}")]
    MapRead { path: String, source: std::io::Error },
    #[error("map {path}: {source}")]
    Map { path: String, source: MapError },
    #[error("cannot read script {path}: {source}")]
    ScriptRead { path: String, source: std::io::Error },
    #[error("script {path}: {source}")]
    Script { path: String, source: ScriptError },
    #[error("log {path}: {source}")]
    Log { path: String, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::ScriptRead { .. } | RunError::Script { .. } => 2,
            RunError::MapRead { .. } | RunError::Map { .. } => 3,
            RunError::Log { .. } | RunError::Server(_) => 1,
        }
    }
}

/// Entry point for client frames, shared by the network server and script replay.
pub struct ControlHub {
    bus: Arc<Bus>,
    session: Mutex<Session>,
    params: TeleopParams,
    geom: RobotGeometry,
}

impl ControlHub {
    pub fn new(bus: Arc<Bus>, params: TeleopParams, geom: RobotGeometry) -> Self {
        Self { bus, session: Mutex::new(Session::new()), params, geom }
    }

    pub fn bus(&self) -> &Arc<Bus> {
        &self.bus
    }

    /// Validates a frame, checks ownership and publishes its effect.
    pub fn handle_frame(&self, client: ClientId, text: &str) -> Result<(), ProtocolError> {
        let msg = self.session.lock().unwrap().handle_frame(client, text)?;
        teleop::dispatch(&self.bus, &msg, &self.params, &self.geom).expect("teleop topics are declared");
        Ok(())
    }

    pub fn disconnect(&self, client: ClientId) {
        if self.session.lock().unwrap().disconnect(client) {
            teleop::release(&self.bus).expect("teleop topics are declared");
        }
    }

    pub fn controller(&self) -> Option<ClientId> {
        self.session.lock().unwrap().controller()
    }
}

/// Everything observable about one completed tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    /// State after the physics step.
    pub state: SimState,
    /// Arbitrated command after the safety clamp; what was sent to cmd_vel.
    pub decision: ControlDecision,
    /// Arbitrated command before the safety clamp.
    pub requested: Twist,
    pub auto_cmd: Twist,
    /// Follower phase used for this tick's command.
    pub phase: Phase,
    pub mode: Mode,
    /// Age of the operator command at decision time, if one was ever received.
    pub teleop_age: Option<f64>,
    /// Scripted frames rejected this tick.
    pub rejected: Vec<ProtocolError>,
    /// Telemetry frame, when one is due on this tick.
    pub telemetry: Option<String>,
}

pub struct Simulation {
    config: RunConfig,
    map: WorldMap,
    roles: BeamRoles,
    follower: WallFollower,
    hub: Arc<ControlHub>,
    state: SimState,
    phase: Phase,
    script: ScriptCursor,
}

impl Simulation {
    /// Loads the map and script named in `config`.
    pub fn from_config(config: &RunConfig) -> Result<Self, RunError> {
        let path = config.map_path.display().to_string();
        let text = std::fs::read_to_string(&config.map_path).map_err(|source| RunError::MapRead { path, source })?;
        let mut map = load_map(&text, &config.params.geometry)
            .map_err(|source| RunError::Map { path: config.map_path.display().to_string(), source })?;
        map.name = map_name(&config.map_path);
        let script = match &config.script_path {
            Some(p) => {
                let path = p.display().to_string();
                let text = std::fs::read_to_string(p)
                    .map_err(|source| RunError::ScriptRead { path: path.clone(), source })?;
                parse_script(&text).map_err(|source| RunError::Script { path, source })?
            }
            None => Vec::new(),
        };
        Self::new(config.clone(), map, ScriptCursor::new(script))
    }

    pub fn new(config: RunConfig, map: WorldMap, script: ScriptCursor) -> Result<Self, RunError> {
        config.validate()?;
        let p = &config.params;
        map.validate(&p.geometry).map_err(|source| RunError::Map { path: map.name.clone(), source })?;
        let follower = WallFollower::new(p.follower, &p.sonar, &p.geometry)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let state = State::new(&map, &p.sonar, config.dt()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let bus = Arc::new(Bus::new());
        bus.publish(bus::MODE, Payload::Mode(bus::ModeChange { mode: config.mode })).expect("declared topic");
        bus.publish(bus::ESTOP, Payload::Estop(bus::EstopChange { engaged: false })).expect("declared topic");
        let hub = Arc::new(ControlHub::new(bus, p.teleop, p.geometry));
        Ok(Self { roles: BeamRoles::from_config(&p.sonar), config, map, follower, hub, state, phase: Phase::default(), script })
    }

    pub fn hub(&self) -> &Arc<ControlHub> {
        &self.hub
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    fn telemetry_due(&self, tick: u64) -> bool {
        let (th, tk) = (u64::from(self.config.telemetry_hz), u64::from(self.config.tick_hz));
        tick > 0 && (tick * th) / tk > ((tick - 1) * th) / tk
    }

    /// Runs one tick of the pipeline.
    pub fn tick(&mut self) -> TickRecord {
        let bus = self.hub.bus().clone();
        let tick_hz = self.config.tick_hz;
        bus.set_time(self.state.t_sim);

        let mut rejected = Vec::new();
        for ev in self.script.due(self.state.tick, tick_hz) {
            if let Err(e) = self.hub.handle_frame(SCRIPT_CLIENT, &ev.frame) {
                rejected.push(e);
            }
        }

        let mode = match bus.latest(bus::MODE).expect("declared topic").map(|e| e.payload) {
            Some(Payload::Mode(m)) => m.mode,
            _ => self.config.mode,
        };
        let estop = matches!(
            bus.latest(bus::ESTOP).expect("declared topic").map(|e| e.payload),
            Some(Payload::Estop(bus::EstopChange { engaged: true }))
        );
        let (teleop_cmd, teleop_age) = match bus.latest(bus::CMD_TELEOP).expect("declared topic") {
            Some(env) => {
                let Payload::Twist(t) = env.payload else { unreachable!("cmd_teleop carries twists") };
                // whole ticks, so ages compare exactly against the timeout
                let ticks = ((self.state.t_sim - env.t_sim) * f64::from(tick_hz)).round();
                (Some(t), Some(ticks / f64::from(tick_hz)))
            }
            None => (None, None),
        };

        let (phase, auto_cmd) = self.follower.step(self.phase, &self.state.scan);
        self.phase = phase;
        bus.publish(bus::CMD_AUTO, Payload::Twist(auto_cmd)).expect("declared topic");

        let safety = &self.config.params.safety;
        let mut decision =
            arbitrate(mode, teleop_cmd, teleop_age.unwrap_or(0.0), Some(auto_cmd), estop, safety.teleop_timeout);
        let requested = decision.cmd;
        decision.cmd = clamp_for_safety(decision.cmd, &self.state.scan, &self.roles, safety.stop_dist);
        bus.publish(bus::CMD_VEL, Payload::Twist(decision.cmd)).expect("declared topic");

        let p = &self.config.params;
        self.state = step(&self.state, &decision.cmd, &p.geometry, &p.sonar, &self.map, self.config.dt())
            .expect("dt is fixed for the run");
        bus.set_time(self.state.t_sim);
        bus.publish(bus::POSE, Payload::Pose(self.state.pose)).expect("declared topic");
        bus.publish(bus::SONAR, Payload::Sonar(self.state.scan)).expect("declared topic");

        let telemetry = self.telemetry_due(self.state.tick).then(|| {
            encode_telemetry(&self.state, &decision, &classify_scan(&self.state.scan, safety), mode)
        });
        TickRecord { state: self.state, decision, requested, auto_cmd, phase, mode, teleop_age, rejected, telemetry }
    }
}

fn map_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub struct TelemetryLog {
    out: BufWriter<File>,
    path: String,
}

impl TelemetryLog {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let p = path.display().to_string();
        let file = File::create(path).map_err(|source| RunError::Log { path: p.clone(), source })?;
        Ok(Self { out: BufWriter::new(file), path: p })
    }

    pub fn append(&mut self, line: &str) -> Result<(), RunError> {
        writeln!(self.out, "{line}").map_err(|source| RunError::Log { path: self.path.clone(), source })
    }

    pub fn finish(mut self) -> Result<(), RunError> {
        self.out.flush().map_err(|source| RunError::Log { path: self.path.clone(), source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub ticks: u64,
    pub telemetry_frames: u64,
    pub collided: bool,
}

/// Runs as fast as possible for the configured duration, calling `observe`
/// after every tick.
pub fn run_headless_with(
    sim: &mut Simulation,
    mut observe: impl FnMut(&TickRecord),
) -> Result<RunSummary, RunError> {
    let ticks = sim.config().total_ticks().ok_or_else(|| ConfigError::Invalid("headless runs need a duration".into()))?;
    let mut log = sim.config().log_path.as_deref().map(TelemetryLog::create).transpose()?;
    let mut frames = 0;
    for _ in 0..ticks {
        let rec = sim.tick();
        if let Some(line) = &rec.telemetry {
            frames += 1;
            if let Some(log) = log.as_mut() {
                log.append(line)?;
            }
        }
        observe(&rec);
    }
    if let Some(log) = log {
        log.finish()?;
    }
    Ok(RunSummary { ticks, telemetry_frames: frames, collided: sim.state().collided })
}

pub fn run_headless(config: &RunConfig) -> Result<RunSummary, RunError> {
    let mut sim = Simulation::from_config(config)?;
    run_headless_with(&mut sim, |_| {})
}

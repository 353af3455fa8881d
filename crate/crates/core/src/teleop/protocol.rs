//! Wire frames exchanged with teleoperation clients: one JSON object per
//! text frame in each direction.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::mapping::OrientationSample;
use crate::simcore::SimState;
use crate::supervisor::{ControlDecision, Mode, ProximityLevel, Source};
use crate::world::{Pose, SONAR_COUNT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClientMessage {
    Orientation(OrientationSample<f64>),
    DirectTwist { v: f64, w: f64 },
    Mode(Mode),
    Estop(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadJson,
    UnknownType,
    BadField,
    NotController,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadJson => "bad_json",
            ErrorCode::UnknownType => "unknown_type",
            ErrorCode::BadField => "bad_field",
            ErrorCode::NotController => "not_controller",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {detail}", code.as_str())]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub detail: String,
}

impl ProtocolError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self { code, detail: detail.into() }
    }

    fn field(name: &str, problem: &str) -> Self {
        Self::new(ErrorCode::BadField, format!("field `{name}` {problem}"))
    }

    /// The error frame sent back to the client.
    pub fn to_frame(&self) -> String {
        encode_frame(&ServerFrame::Error { code: self.code, detail: self.detail.clone() })
    }
}

fn number(obj: &Map<String, Value>, name: &str) -> Result<f64, ProtocolError> {
    match obj.get(name) {
        None => Err(ProtocolError::field(name, "is missing")),
        Some(v) => v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| ProtocolError::field(name, "must be a number")),
    }
}

fn integer(obj: &Map<String, Value>, name: &str) -> Result<i64, ProtocolError> {
    match obj.get(name) {
        None => Err(ProtocolError::field(name, "is missing")),
        Some(v) => v.as_i64().ok_or_else(|| ProtocolError::field(name, "must be an integer")),
    }
}

/// Parses and validates one client frame.
pub fn parse_message(text: &str) -> Result<ClientMessage, ProtocolError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ProtocolError::new(ErrorCode::BadJson, e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(ProtocolError::new(ErrorCode::BadJson, "frame must be a JSON object"));
    };
    let kind = match obj.get("type") {
        None => return Err(ProtocolError::field("type", "is missing")),
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(ProtocolError::field("type", "must be a string")),
    };
    match kind {
        "orientation" => Ok(ClientMessage::Orientation(OrientationSample {
            roll_deg: number(&obj, "roll_deg")?,
            pitch_deg: number(&obj, "pitch_deg")?,
            yaw_deg: number(&obj, "yaw_deg")?,
            ts_ms: integer(&obj, "ts_ms")?,
        })),
        "twist" => Ok(ClientMessage::DirectTwist { v: number(&obj, "v")?, w: number(&obj, "w")? }),
        "mode" => match obj.get("value") {
            None => Err(ProtocolError::field("value", "is missing")),
            Some(Value::String(s)) => s
                .parse::<Mode>()
                .map(ClientMessage::Mode)
                .map_err(|_| ProtocolError::field("value", "must be one of auto, teleop, hybrid")),
            Some(_) => Err(ProtocolError::field("value", "must be a string")),
        },
        "estop" => match obj.get("engaged") {
            None => Err(ProtocolError::field("engaged", "is missing")),
            Some(Value::Bool(b)) => Ok(ClientMessage::Estop(*b)),
            Some(_) => Err(ProtocolError::field("engaged", "must be a boolean")),
        },
        other => Err(ProtocolError::new(ErrorCode::UnknownType, format!("unknown message type `{other}`"))),
    }
}

/// Encodes a client message as its wire frame.
pub fn encode_message(msg: &ClientMessage) -> String {
    let value = match msg {
        ClientMessage::Orientation(s) => serde_json::json!({
            "type": "orientation", "roll_deg": s.roll_deg, "pitch_deg": s.pitch_deg,
            "yaw_deg": s.yaw_deg, "ts_ms": s.ts_ms,
        }),
        ClientMessage::DirectTwist { v, w } => serde_json::json!({"type": "twist", "v": v, "w": w}),
        ClientMessage::Mode(m) => serde_json::json!({"type": "mode", "value": m.as_str()}),
        ClientMessage::Estop(b) => serde_json::json!({"type": "estop", "engaged": b}),
    };
    value.to_string()
}

/// Snapshot streamed to clients and written to the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub tick: u64,
    pub t_sim: f64,
    pub pose: [f64; 3],
    pub odom: [f64; 3],
    pub sonar: [f64; SONAR_COUNT],
    pub proximity: [ProximityLevel; SONAR_COUNT],
    pub mode: Mode,
    pub cmd: [f64; 2],
    pub source: Source,
    pub estop: bool,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerFrame {
    Telemetry(TelemetryFrame),
    Error { code: ErrorCode, detail: String },
}

fn pose_array(p: &Pose<f64>) -> [f64; 3] {
    [p.x, p.y, p.theta]
}

impl TelemetryFrame {
    pub fn new(
        state: &SimState<f64>,
        decision: &ControlDecision<f64>,
        levels: &[ProximityLevel; SONAR_COUNT],
        mode: Mode,
    ) -> Self {
        Self {
            tick: state.tick,
            t_sim: state.t_sim,
            pose: pose_array(&state.pose),
            odom: pose_array(&state.odom),
            sonar: state.scan.ranges,
            proximity: *levels,
            mode,
            cmd: [decision.cmd.v, decision.cmd.w],
            source: decision.source,
            estop: decision.estop,
            collided: state.collided,
        }
    }
}

pub fn encode_frame(frame: &ServerFrame) -> String {
    serde_json::to_string(frame).expect("server frames always serialize")
}

/// Encodes a telemetry frame. Floats are written in shortest round-trip form,
/// so decoding recovers every value exactly.
pub fn encode_telemetry(
    state: &SimState<f64>,
    decision: &ControlDecision<f64>,
    levels: &[ProximityLevel; SONAR_COUNT],
    mode: Mode,
) -> String {
    encode_frame(&ServerFrame::Telemetry(TelemetryFrame::new(state, decision, levels, mode)))
}

pub fn decode_server_frame(text: &str) -> Result<ServerFrame, ProtocolError> {
    serde_json::from_str(text).map_err(|e| ProtocolError::new(ErrorCode::BadJson, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::SonarScan;
    use crate::world::Twist;

    #[test]
    fn parses_each_type() {
        let m = parse_message(r#"{"type":"orientation","roll_deg":0,"pitch_deg":-30,"yaw_deg":10,"ts_ms":17}"#).unwrap();
        assert_eq!(
            m,
            ClientMessage::Orientation(OrientationSample { roll_deg: 0.0, pitch_deg: -30.0, yaw_deg: 10.0, ts_ms: 17 })
        );
        assert_eq!(parse_message(r#"{"type":"estop","engaged":true}"#).unwrap(), ClientMessage::Estop(true));
        assert_eq!(
            parse_message(r#"{"type":"twist","v":0.5,"w":-0.25}"#).unwrap(),
            ClientMessage::DirectTwist { v: 0.5, w: -0.25 }
        );
        assert_eq!(parse_message(r#"{"type":"mode","value":"teleop"}"#).unwrap(), ClientMessage::Mode(Mode::Teleop));
    }

    #[test]
    fn error_classes() {
        let code = |t: &str| parse_message(t).unwrap_err().code;
        assert_eq!(code(r#"{"type":"warp"}"#), ErrorCode::UnknownType);
        assert_eq!(code("{not json"), ErrorCode::BadJson);
        assert_eq!(code("[1,2]"), ErrorCode::BadJson);
        assert_eq!(code(r#"{"v":1}"#), ErrorCode::BadField);
        assert_eq!(code(r#"{"type":7}"#), ErrorCode::BadField);
        assert_eq!(code(r#"{"type":"twist","v":"fast","w":0}"#), ErrorCode::BadField);
        assert_eq!(code(r#"{"type":"mode","value":"manual"}"#), ErrorCode::BadField);
        assert_eq!(code(r#"{"type":"orientation","roll_deg":0,"pitch_deg":0,"yaw_deg":0,"ts_ms":1.5}"#), ErrorCode::BadField);
    }

    #[test]
    fn errors_name_the_field() {
        let err = parse_message(r#"{"type":"twist","v":0.1}"#).unwrap_err();
        assert!(err.detail.contains("`w`"), "{}", err.detail);
        let err = parse_message(r#"{"type":"estop","engaged":"yes"}"#).unwrap_err();
        assert!(err.detail.contains("`engaged`"), "{}", err.detail);
    }

    #[test]
    fn error_frame_shape() {
        let frame = ProtocolError::new(ErrorCode::NotController, "x").to_frame();
        assert_eq!(frame, r#"{"type":"error","code":"not_controller","detail":"x"}"#);
    }

    #[test]
    fn client_messages_round_trip() {
        for m in [
            ClientMessage::Orientation(OrientationSample { roll_deg: 1.5, pitch_deg: -2.25, yaw_deg: 0.1, ts_ms: -3 }),
            ClientMessage::DirectTwist { v: 0.1, w: -0.3 },
            ClientMessage::Mode(Mode::Hybrid),
            ClientMessage::Estop(false),
        ] {
            assert_eq!(parse_message(&encode_message(&m)).unwrap(), m);
        }
    }

    #[test]
    fn initial_telemetry_frame() {
        let state = SimState {
            pose: Pose::default(),
            odom: Pose::default(),
            scan: SonarScan::uniform(5.0),
            t_sim: 0.0,
            tick: 0,
            collided: false,
            dt: 0.02,
        };
        let decision = ControlDecision { cmd: Twist::zero(), source: Source::None, estop: false };
        let text = encode_telemetry(&state, &decision, &[ProximityLevel::Safe; 16], Mode::Hybrid);
        assert!(text.starts_with(r#"{"type":"telemetry","tick":0,"t_sim":0.0,"#), "{text}");
        assert!(text.contains(r#""cmd":[0.0,0.0],"source":"none""#), "{text}");
        let ServerFrame::Telemetry(frame) = decode_server_frame(&text).unwrap() else { panic!() };
        assert_eq!(frame.tick, 0);
        assert_eq!(frame.source, Source::None);
    }
}

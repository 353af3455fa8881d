//! Teleoperation: orientation-to-velocity mapping, the client/server wire
//! protocol, controller ownership, and delivery of accepted commands onto the bus.

mod mapping;
mod protocol;
mod session;

pub use mapping::{orientation_to_twist, OrientationSample, TeleopParams};
pub use protocol::{
    decode_server_frame, encode_frame, encode_message, encode_telemetry, parse_message, ClientMessage, ErrorCode,
    ProtocolError, ServerFrame, TelemetryFrame,
};
pub use session::{ClientId, Session};

use crate::bus::{Bus, BusError, EstopChange, ModeChange, Payload, CMD_TELEOP, ESTOP, MODE};
use crate::world::{RobotGeometry, Twist};

/// Publishes the effect of an accepted client message on the bus.
pub fn dispatch(
    bus: &Bus,
    msg: &ClientMessage,
    params: &TeleopParams<f64>,
    geom: &RobotGeometry<f64>,
) -> Result<(), BusError> {
    match *msg {
        ClientMessage::Orientation(sample) => {
            // parse_message only admits finite numbers
            let cmd = orientation_to_twist(&sample, params, geom).unwrap_or_default();
            bus.publish(CMD_TELEOP, Payload::Twist(cmd))?;
        }
        ClientMessage::DirectTwist { v, w } => {
            bus.publish(CMD_TELEOP, Payload::Twist(Twist::new(v, w).clamped(geom)))?;
        }
        ClientMessage::Mode(mode) => {
            bus.publish(MODE, Payload::Mode(ModeChange { mode }))?;
        }
        ClientMessage::Estop(engaged) => {
            bus.publish(ESTOP, Payload::Estop(EstopChange { engaged }))?;
        }
    }
    Ok(())
}

/// Zeroes the operator command when the controller goes away.
pub fn release(bus: &Bus) -> Result<(), BusError> {
    bus.publish(CMD_TELEOP, Payload::Twist(Twist::zero())).map(|_| ())
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{RobotGeometry, Twist};

/// Device orientation as reported by the client, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationSample<T> {
    pub roll_deg: T,
    pub pitch_deg: T,
    pub yaw_deg: T,
    pub ts_ms: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeleopParams<T> {
    /// Pitch giving full forward or reverse speed.
    pub pitch_max: T,
    /// Roll giving full turn rate.
    pub roll_max: T,
    pub deadzone: T,
    pub invert_pitch: bool,
    pub invert_roll: bool,
}

impl<T: Scalar> Default for TeleopParams<T> {
    fn default() -> Self {
        Self {
            pitch_max: T::lit(30.0),
            roll_max: T::lit(30.0),
            deadzone: T::lit(5.0),
            invert_pitch: false,
            invert_roll: false,
        }
    }
}

impl<T: Scalar> TeleopParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.deadzone >= T::zero()
            && self.deadzone < self.pitch_max
            && self.deadzone < self.roll_max
            && self.pitch_max.is_finite()
            && self.roll_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "teleop params need 0 <= deadzone < pitch_max, roll_max; got deadzone {}, pitch_max {}, roll_max {}",
                self.deadzone, self.pitch_max, self.roll_max
            )))
        }
    }
}

/// Deadzone with rescaling: zero inside `±deadzone`, then linear up to ±1 at `full`.
fn shape<T: Scalar>(x: T, deadzone: T, full: T) -> T {
    if x.abs() <= deadzone {
        return T::zero();
    }
    (x.signum() * (x.abs() - deadzone) / (full - deadzone)).max(-T::one()).min(T::one())
}

/// Maps device tilt to a velocity command: pitching forward (negative pitch)
/// drives forward, rolling right (positive roll) turns clockwise. Yaw is ignored.
pub fn orientation_to_twist<T: Scalar>(
    s: &OrientationSample<T>,
    p: &TeleopParams<T>,
    geom: &RobotGeometry<T>,
) -> Result<Twist<T>> {
    if !(s.roll_deg.is_finite() && s.pitch_deg.is_finite() && s.yaw_deg.is_finite()) {
        return Err(Error::InvalidArgument("orientation fields must be finite".into()));
    }
    let ninety = T::lit(90.0);
    let pitch = s.pitch_deg.max(-ninety).min(ninety);
    let roll = s.roll_deg.max(-ninety).min(ninety);
    let mut v = geom.v_max * shape(-pitch, p.deadzone, p.pitch_max);
    let mut w = geom.w_max * shape(-roll, p.deadzone, p.roll_max);
    if p.invert_pitch {
        v = -v;
    }
    if p.invert_roll {
        w = -w;
    }
    Ok(Twist::new(v, w))
}

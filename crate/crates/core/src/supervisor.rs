//! Command arbitration between the operator and the wall follower, the
//! forward/reverse safety stop, and per-beam proximity levels for display.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::simcore::SonarScan;
use crate::world::{BeamRoles, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Teleop,
    #[default]
    Hybrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Teleop => "teleop",
            Mode::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Mode::Auto),
            "teleop" => Ok(Mode::Teleop),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(format!("unknown mode `{other}` (expected auto, teleop or hybrid)")),
        }
    }
}

/// Ordered by severity: `Safe < Warn < Danger`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProximityLevel {
    Safe,
    Warn,
    Danger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Teleop,
    Auto,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlDecision<T> {
    pub cmd: Twist<T>,
    pub source: Source,
    pub estop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyParams<T> {
    /// Readings below this are `Danger`.
    pub danger_below: T,
    /// Readings below this (and not `Danger`) are `Warn`.
    pub warn_below: T,
    /// Forward or reverse motion stops when the matching beams read below this.
    pub stop_dist: T,
    /// Operator commands older than this are ignored (s).
    pub teleop_timeout: T,
}

impl<T: Scalar> Default for SafetyParams<T> {
    fn default() -> Self {
        Self {
            danger_below: T::lit(0.5),
            warn_below: T::lit(1.0),
            stop_dist: T::lit(0.35),
            teleop_timeout: T::lit(0.5),
        }
    }
}

pub fn classify_proximity<T: Scalar>(range: T, p: &SafetyParams<T>) -> ProximityLevel {
    if range < p.danger_below {
        ProximityLevel::Danger
    } else if range < p.warn_below {
        ProximityLevel::Warn
    } else {
        ProximityLevel::Safe
    }
}

pub fn classify_scan<T: Scalar>(scan: &SonarScan<T>, p: &SafetyParams<T>) -> [ProximityLevel; 16] {
    scan.ranges.map(|r| classify_proximity(r, p))
}

/// Zeroes the linear velocity when it points toward an obstacle closer than `stop_dist`.
/// The turn rate is never altered.
pub fn clamp_for_safety<T: Scalar>(cmd: Twist<T>, scan: &SonarScan<T>, roles: &BeamRoles, stop_dist: T) -> Twist<T> {
    let blocked = (cmd.v > T::zero() && scan.min_of(&roles.front_wide) < stop_dist)
        || (cmd.v < T::zero() && scan.min_of(&roles.rear_wide) < stop_dist);
    if blocked {
        Twist::new(T::zero(), cmd.w)
    } else {
        cmd
    }
}

/// Picks the command source for this tick.
///
/// `teleop_age` is the time since the operator command was received. In
/// teleop mode a stale command stops the robot instead of handing control
/// back to autonomy.
pub fn arbitrate<T: Scalar>(
    mode: Mode,
    teleop_cmd: Option<Twist<T>>,
    teleop_age: T,
    auto_cmd: Option<Twist<T>>,
    estop: bool,
    timeout: T,
) -> ControlDecision<T> {
    let none = ControlDecision { cmd: Twist::zero(), source: Source::None, estop };
    if estop {
        return none;
    }
    let fresh = teleop_cmd.filter(|_| teleop_age <= timeout);
    let teleop = |cmd| ControlDecision { cmd, source: Source::Teleop, estop };
    let auto = |cmd| ControlDecision { cmd, source: Source::Auto, estop };
    match mode {
        Mode::Teleop => fresh.map_or(none, teleop),
        Mode::Auto => auto_cmd.map_or(none, auto),
        Mode::Hybrid => fresh.map(teleop).or(auto_cmd.map(auto)).unwrap_or(none),
    }
}

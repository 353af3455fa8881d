//! Deterministic simulation of a sonar-equipped differential-drive robot with
//! a wall-following controller, a safety supervisor, and a teleoperation
//! protocol that lets an operator override autonomy.
//!
//! The geometry and control code is generic over [`Scalar`] (`f32` or `f64`).
//! The aliases below fix the scalar to `f64`, which is what the bus, the wire
//! protocol and the runner use.

pub mod autonomy;
pub mod bus;
mod error;
mod scalar;
pub mod simcore;
pub mod supervisor;
pub mod teleop;
pub mod world;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Pose = world::Pose<f64>;
pub type Twist = world::Twist<f64>;
pub type LineSegment = world::LineSegment<f64>;
pub type WorldMap = world::WorldMap<f64>;
pub type RobotGeometry = world::RobotGeometry<f64>;
pub type SonarConfig = world::SonarConfig<f64>;
pub type SonarScan = simcore::SonarScan<f64>;
pub type SimState = simcore::SimState<f64>;
pub type FollowerParams = autonomy::FollowerParams<f64>;
pub type WallFollower = autonomy::WallFollower<f64>;
pub type SafetyParams = supervisor::SafetyParams<f64>;
pub type ControlDecision = supervisor::ControlDecision<f64>;
pub type TeleopParams = teleop::TeleopParams<f64>;

pub type Pose32 = world::Pose<f32>;
pub type Twist32 = world::Twist<f32>;
pub type WorldMap32 = world::WorldMap<f32>;
pub type SimState32 = simcore::SimState<f32>;

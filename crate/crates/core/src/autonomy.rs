//! Wall follower: a four-phase controller that finds a wall and tracks it at a
//! fixed lateral distance and constant forward speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simcore::SonarScan;
use crate::world::{BeamRoles, RobotGeometry, SonarConfig, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    #[default]
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowerParams<T> {
    pub side: Side,
    /// Desired perpendicular distance to the followed wall (m).
    pub d_des: T,
    /// Distance-error gain, 1/(m·s).
    pub k_d: T,
    /// Wall-angle gain, 1/s.
    pub k_theta: T,
    pub v_nom: T,
    pub front_thresh: T,
    pub lost_thresh: T,
    pub w_turn: T,
    pub arc_v: T,
    pub arc_w: T,
}

impl<T: Scalar> Default for FollowerParams<T> {
    fn default() -> Self {
        Self {
            side: Side::Right,
            d_des: T::lit(0.5),
            k_d: T::lit(1.2),
            k_theta: T::lit(2.0),
            v_nom: T::lit(0.4),
            front_thresh: T::lit(0.6),
            lost_thresh: T::lit(2.0),
            w_turn: T::lit(0.8),
            arc_v: T::lit(0.25),
            arc_w: T::lit(0.5),
        }
    }
}

impl<T: Scalar> FollowerParams<T> {
    pub fn validate(&self, geom: &RobotGeometry<T>) -> Result<()> {
        let named = [
            ("d_des", self.d_des),
            ("k_d", self.k_d),
            ("k_theta", self.k_theta),
            ("v_nom", self.v_nom),
            ("front_thresh", self.front_thresh),
            ("lost_thresh", self.lost_thresh),
            ("w_turn", self.w_turn),
            ("arc_v", self.arc_v),
            ("arc_w", self.arc_w),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidArgument(format!("follower {name} must be positive, got {v}")));
            }
        }
        if self.d_des >= self.lost_thresh {
            return Err(Error::InvalidArgument("follower d_des must be below lost_thresh".into()));
        }
        if self.front_thresh <= geom.body_radius {
            return Err(Error::InvalidArgument("follower front_thresh must exceed the body radius".into()));
        }
        Ok(())
    }
}

/// Controller phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    #[default]
    FindWall,
    Follow,
    TurnInner,
    TurnOuter,
}

/// Wall angle relative to the heading and perpendicular distance, from a
/// side beam reading `d1` and a diagonal reading `d2` separated by `gamma`.
///
/// A positive angle means the robot is turning away from the wall.
pub fn estimate_wall<T: Scalar>(d1: T, d2: T, gamma: T) -> (T, T) {
    let alpha = (d2 * gamma.cos() - d1).atan2(d2 * gamma.sin());
    (alpha, d1 * alpha.cos())
}

/// Hysteresis added to `front_thresh` before leaving an inner-corner turn.
const INNER_EXIT_MARGIN: f64 = 0.1;

/// Wall follower bound to a beam layout and the robot's turn-rate limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallFollower<T> {
    pub params: FollowerParams<T>,
    roles: BeamRoles,
    gamma: T,
    w_max: T,
    v_max: T,
}

impl<T: Scalar> WallFollower<T> {
    pub fn new(params: FollowerParams<T>, sonar: &SonarConfig<T>, geom: &RobotGeometry<T>) -> Result<Self> {
        params.validate(geom)?;
        let roles = BeamRoles::from_config(sonar);
        let (side, diag) = match params.side {
            Side::Right => (roles.right_side, roles.right_diag),
            Side::Left => (roles.left_side, roles.left_diag),
        };
        let gamma = (sonar.angles[side] - sonar.angles[diag]).abs().to_radians();
        Ok(Self { params, roles, gamma, w_max: geom.w_max, v_max: geom.v_max })
    }

    fn side_beams(&self) -> (usize, usize) {
        match self.params.side {
            Side::Right => (self.roles.right_side, self.roles.right_diag),
            Side::Left => (self.roles.left_side, self.roles.left_diag),
        }
    }

    /// +1 when following a right wall, −1 for a left wall. Turn rates are
    /// written for the right side and multiplied by this.
    fn sign(&self) -> T {
        match self.params.side {
            Side::Right => T::one(),
            Side::Left => -T::one(),
        }
    }

    fn follow_law(&self, scan: &SonarScan<T>) -> Twist<T> {
        let p = &self.params;
        let (side, diag) = self.side_beams();
        let d1 = scan.ranges[side];
        let d2 = scan.ranges[diag];
        // a diagonal beam past the wall's end carries no angle information
        let (alpha, d_perp) = if d2 > p.lost_thresh { (T::zero(), d1) } else { estimate_wall(d1, d2, self.gamma) };
        let w = -(p.k_d * (d_perp - p.d_des) + p.k_theta * alpha) * self.sign();
        Twist::new(p.v_nom.min(self.v_max), w.max(-self.w_max).min(self.w_max))
    }

    fn command(&self, phase: Phase, scan: &SonarScan<T>) -> Twist<T> {
        let p = &self.params;
        let s = self.sign();
        let limit = |t: Twist<T>| Twist::new(t.v.max(-self.v_max).min(self.v_max), t.w.max(-self.w_max).min(self.w_max));
        match phase {
            Phase::FindWall => limit(Twist::new(p.v_nom, T::zero())),
            Phase::Follow => self.follow_law(scan),
            Phase::TurnInner => limit(Twist::new(T::zero(), p.w_turn * s)),
            Phase::TurnOuter => limit(Twist::new(p.arc_v, -p.arc_w * s)),
        }
    }

    /// Applies one transition and returns the new phase with its command.
    pub fn step(&self, phase: Phase, scan: &SonarScan<T>) -> (Phase, Twist<T>) {
        let p = &self.params;
        let front = scan.min_of(&self.roles.front);
        let side = scan.ranges[self.side_beams().0];
        let next = match phase {
            Phase::FindWall if front < p.front_thresh => Phase::TurnInner,
            Phase::FindWall if side < p.lost_thresh => Phase::Follow,
            Phase::Follow if front < p.front_thresh => Phase::TurnInner,
            Phase::Follow if side > p.lost_thresh => Phase::TurnOuter,
            Phase::TurnInner if front > p.front_thresh + T::lit(INNER_EXIT_MARGIN) => Phase::Follow,
            Phase::TurnOuter if side < p.lost_thresh => Phase::Follow,
            same => same,
        };
        (next, self.command(next, scan))
    }
}

//! Fixed-timestep simulation of the robot: unicycle kinematics, sonar ray
//! casting against the wall map, collision detection and odometry.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{Pose, RobotGeometry, SonarConfig, Twist, WorldMap, SONAR_COUNT};

/// One reading per sonar beam, each clamped to the configured range window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonarScan<T> {
    pub ranges: [T; SONAR_COUNT],
    pub t_sim: T,
}

impl<T: Scalar> SonarScan<T> {
    pub fn uniform(range: T) -> Self {
        Self { ranges: [range; SONAR_COUNT], t_sim: T::zero() }
    }

    pub fn min_of(&self, beams: &[usize]) -> T {
        beams.iter().map(|&i| self.ranges[i]).fold(T::infinity(), T::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState<T> {
    /// Ground-truth pose.
    pub pose: Pose<T>,
    /// Pose integrated from the commanded motion alone.
    pub odom: Pose<T>,
    pub scan: SonarScan<T>,
    pub t_sim: T,
    pub tick: u64,
    /// Set by the first blocked move and kept until [`SimState::reset`].
    pub collided: bool,
    pub dt: T,
}

impl<T: Scalar> SimState<T> {
    /// Initial state at the map's start pose.
    pub fn new(map: &WorldMap<T>, cfg: &SonarConfig<T>, dt: T) -> Result<Self> {
        check_dt(dt)?;
        let pose = map.start;
        Ok(Self {
            pose,
            odom: pose,
            scan: scan_sonars(&pose, cfg, map, T::zero()),
            t_sim: T::zero(),
            tick: 0,
            collided: false,
            dt,
        })
    }

    pub fn reset(&mut self, map: &WorldMap<T>, cfg: &SonarConfig<T>) {
        *self = Self::new(map, cfg, self.dt).expect("dt was validated at construction");
    }
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if dt.is_finite() && dt > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("timestep must be positive and finite, got {dt}")))
    }
}

/// Advances a pose under a constant twist for `dt` seconds along the exact arc.
pub fn integrate_unicycle<T: Scalar>(pose: &Pose<T>, cmd: &Twist<T>, dt: T) -> Result<Pose<T>> {
    check_dt(dt)?;
    if !cmd.is_finite() {
        return Err(Error::InvalidArgument("command must be finite".into()));
    }
    let Twist { v, w } = *cmd;
    let theta = pose.theta;
    if w.abs() < T::lit(1e-9) {
        return Pose::new(pose.x + v * dt * theta.cos(), pose.y + v * dt * theta.sin(), theta);
    }
    let next = theta + w * dt;
    let r = v / w;
    Pose::new(pose.x + r * (next.sin() - theta.sin()), pose.y - r * (next.cos() - theta.cos()), next)
}

fn cross<T: Scalar>(ax: T, ay: T, bx: T, by: T) -> T {
    ax * by - ay * bx
}

/// Distance along a ray to the first wall, or `None` when nothing lies within `max_range`.
pub fn raycast<T: Scalar>(origin: [T; 2], direction: T, map: &WorldMap<T>, max_range: T) -> Option<T> {
    let (dx, dy) = (direction.cos(), direction.sin());
    let [ox, oy] = origin;
    let mut best: Option<T> = None;
    for s in &map.segments {
        let (ex, ey) = (s.bx - s.ax, s.by - s.ay);
        let (wx, wy) = (s.ax - ox, s.ay - oy);
        let denom = cross(dx, dy, ex, ey);
        let scale = ex.hypot(ey);
        let hit = if denom.abs() <= T::lit(1e-12) * scale {
            // parallel; only a collinear segment can be hit
            if cross(wx, wy, dx, dy).abs() > T::lit(1e-12) * scale.max(T::one()) {
                None
            } else {
                let ta = wx * dx + wy * dy;
                let tb = (s.bx - ox) * dx + (s.by - oy) * dy;
                if ta.min(tb) <= T::zero() && ta.max(tb) >= T::zero() {
                    Some(T::zero())
                } else if ta.min(tb) > T::zero() {
                    Some(ta.min(tb))
                } else {
                    None
                }
            }
        } else {
            let t = cross(wx, wy, ex, ey) / denom;
            let u = cross(wx, wy, dx, dy) / denom;
            (t >= T::zero() && u >= T::zero() && u <= T::one()).then_some(t)
        };
        if let Some(t) = hit {
            if t <= max_range && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

/// Casts every beam from the given pose.
pub fn scan_sonars<T: Scalar>(pose: &Pose<T>, cfg: &SonarConfig<T>, map: &WorldMap<T>, t_sim: T) -> SonarScan<T> {
    let ranges = cfg.angles.map(|deg| {
        let dir = pose.theta + deg.to_radians();
        let origin = [pose.x + cfg.mount_radius * dir.cos(), pose.y + cfg.mount_radius * dir.sin()];
        raycast(origin, dir, map, cfg.max_range).unwrap_or(cfg.max_range).max(cfg.min_range).min(cfg.max_range)
    });
    SonarScan { ranges, t_sim }
}

/// True when the body disc overlaps a wall (clearance strictly below the radius).
pub fn check_collision<T: Scalar>(pose: &Pose<T>, geom: &RobotGeometry<T>, map: &WorldMap<T>) -> bool {
    map.segments.iter().any(|s| s.distance_to(pose.x, pose.y) < geom.body_radius)
}

/// Advances the simulation by one tick.
///
/// The command is clamped to the robot limits. A move that would end in
/// collision is discarded and flags the state; odometry integrates the
/// clamped command regardless.
pub fn step<T: Scalar>(
    state: &SimState<T>,
    cmd: &Twist<T>,
    geom: &RobotGeometry<T>,
    cfg: &SonarConfig<T>,
    map: &WorldMap<T>,
    dt: T,
) -> Result<SimState<T>> {
    check_dt(dt)?;
    if dt != state.dt {
        return Err(Error::InvalidArgument(format!("timestep {dt} differs from the run's fixed {}", state.dt)));
    }
    let cmd = cmd.clamped(geom);
    let candidate = integrate_unicycle(&state.pose, &cmd, dt)?;
    let (pose, collided) = if check_collision(&candidate, geom, map) {
        (state.pose, true)
    } else {
        (candidate, state.collided)
    };
    let odom = integrate_unicycle(&state.odom, &cmd, dt)?;
    let tick = state.tick + 1;
    let t_sim = T::from_u64(tick).expect("tick fits the scalar") * dt;
    Ok(SimState { pose, odom, scan: scan_sonars(&pose, cfg, map, t_sim), t_sim, tick, collided, dt })
}

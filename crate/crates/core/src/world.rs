//! Domain types shared by every other module: poses, velocity commands, the
//! wall map and its text format, robot and sonar configuration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalizes an angle into the half-open interval (−π, π].
///
/// Angles already inside the interval are returned unchanged, which makes the
/// function exactly idempotent.
pub fn normalize_angle<T: Scalar>(theta: T) -> Result<T> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("angle must be finite, got {theta}")));
    }
    let pi = T::PI();
    if theta > -pi && theta <= pi {
        return Ok(theta);
    }
    let two_pi = pi + pi;
    let mut r = theta % two_pi;
    if r <= -pi {
        r = r + two_pi;
    } else if r > pi {
        r = r - two_pi;
    }
    // rounding can still land exactly on the excluded endpoint
    if r <= -pi {
        r = pi;
    }
    Ok(r)
}

/// Robot configuration in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    /// Heading in radians, kept in (−π, π].
    pub theta: T,
}

impl<T: Scalar> Pose<T> {
    /// Builds a pose, normalizing the heading.
    pub fn new(x: T, y: T, theta: T) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument("pose position must be finite".into()));
        }
        Ok(Self { x, y, theta: normalize_angle(theta)? })
    }

    pub fn position(&self) -> [T; 2] {
        [self.x, self.y]
    }
}

/// Differential-drive velocity command: forward speed and counterclockwise turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist<T> {
    pub v: T,
    pub w: T,
}

impl<T: Scalar> Twist<T> {
    pub fn new(v: T, w: T) -> Self {
        Self { v, w }
    }

    pub fn zero() -> Self {
        Self { v: T::zero(), w: T::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.w.is_finite()
    }

    /// Saturates both components at the robot's velocity limits.
    pub fn clamped(self, geom: &RobotGeometry<T>) -> Self {
        Self {
            v: self.v.max(-geom.v_max).min(geom.v_max),
            w: self.w.max(-geom.w_max).min(geom.w_max),
        }
    }
}

/// A straight wall between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment<T> {
    pub ax: T,
    pub ay: T,
    pub bx: T,
    pub by: T,
}

impl<T: Scalar> LineSegment<T> {
    pub fn new(ax: T, ay: T, bx: T, by: T) -> Self {
        Self { ax, ay, bx, by }
    }

    pub fn length(&self) -> T {
        (self.bx - self.ax).hypot(self.by - self.ay)
    }

    /// Euclidean distance from a point to the closest point of the segment.
    pub fn distance_to(&self, px: T, py: T) -> T {
        let dx = self.bx - self.ax;
        let dy = self.by - self.ay;
        let len2 = dx * dx + dy * dy;
        let t = if len2 > T::zero() {
            (((px - self.ax) * dx + (py - self.ay) * dy) / len2).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let cx = self.ax + t * dx;
        let cy = self.ay + t * dy;
        (px - cx).hypot(py - cy)
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self::new(self.ax + dx, self.ay + dy, self.bx + dx, self.by + dy)
    }
}

/// Physical limits of the robot. The body is a disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotGeometry<T> {
    pub body_radius: T,
    pub v_max: T,
    pub w_max: T,
}

impl<T: Scalar> Default for RobotGeometry<T> {
    fn default() -> Self {
        Self { body_radius: T::lit(0.22), v_max: T::lit(0.75), w_max: T::lit(1.5) }
    }
}

impl<T: Scalar> RobotGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("body_radius", self.body_radius), ("v_max", self.v_max), ("w_max", self.w_max)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Number of sonar beams on the robot: a front ring of eight and a rear ring of eight.
pub const SONAR_COUNT: usize = 16;

/// Beam angles in degrees, body frame, front ring then rear ring.
pub const DEFAULT_SONAR_ANGLES_DEG: [f64; SONAR_COUNT] = [
    -90.0, -50.0, -30.0, -10.0, 10.0, 30.0, 50.0, 90.0, //
    100.0, 130.0, 150.0, 170.0, -170.0, -150.0, -130.0, -100.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SonarConfig<T> {
    /// Body-relative beam directions in degrees.
    pub angles: [T; SONAR_COUNT],
    pub mount_radius: T,
    pub min_range: T,
    pub max_range: T,
}

impl<T: Scalar> Default for SonarConfig<T> {
    fn default() -> Self {
        Self {
            angles: DEFAULT_SONAR_ANGLES_DEG.map(T::lit),
            mount_radius: T::zero(),
            min_range: T::lit(0.1),
            max_range: T::lit(5.0),
        }
    }
}

impl<T: Scalar> SonarConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_range > T::zero() && self.min_range < self.max_range && self.max_range.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sonar ranges must satisfy 0 < min_range < max_range, got {} and {}",
                self.min_range, self.max_range
            )));
        }
        if !(self.mount_radius >= T::zero() && self.mount_radius.is_finite()) {
            return Err(Error::InvalidArgument("mount_radius must be non-negative".into()));
        }
        for (i, a) in self.angles.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(format!("sonar angle {i} is not finite")));
            }
            let a = normalize_angle(a.to_radians())?;
            for (j, b) in self.angles.iter().enumerate().skip(i + 1) {
                let b = normalize_angle(b.to_radians())?;
                if (a - b).abs() < T::lit(1e-9) {
                    return Err(Error::InvalidArgument(format!("sonar angles {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// Index of the configured beam whose direction is closest to `deg`.
    pub fn nearest_beam(&self, deg: f64) -> usize {
        let target = deg.to_radians();
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.angles.iter().enumerate() {
            let diff = normalize_angle(a.to_f64_lossy().to_radians() - target).unwrap_or(f64::INFINITY).abs();
            if diff < best.1 {
                best = (i, diff);
            }
        }
        best.0
    }
}

/// Beam indices for the roles the controllers read, resolved once from a [`SonarConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamRoles {
    pub right_side: usize,
    pub right_diag: usize,
    pub left_side: usize,
    pub left_diag: usize,
    /// ±10° and ±30°: wall-follower obstacle detection.
    pub front: [usize; 4],
    /// ±10°, ±30°, ±50°: forward safety stop.
    pub front_wide: [usize; 6],
    /// ±170°, ±150°, ±130°: reverse safety stop.
    pub rear_wide: [usize; 6],
}

impl BeamRoles {
    pub fn from_config<T: Scalar>(cfg: &SonarConfig<T>) -> Self {
        let n = |deg: f64| cfg.nearest_beam(deg);
        Self {
            right_side: n(-90.0),
            right_diag: n(-50.0),
            left_side: n(90.0),
            left_diag: n(50.0),
            front: [n(-10.0), n(10.0), n(-30.0), n(30.0)],
            front_wide: [n(-10.0), n(10.0), n(-30.0), n(30.0), n(-50.0), n(50.0)],
            rear_wide: [n(170.0), n(-170.0), n(150.0), n(-150.0), n(130.0), n(-130.0)],
        }
    }
}

impl Default for BeamRoles {
    fn default() -> Self {
        Self::from_config(&SonarConfig::<f64>::default())
    }
}

/// The simulated environment: walls and where the robot starts.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap<T> {
    pub name: String,
    pub segments: Vec<LineSegment<T>>,
    pub start: Pose<T>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map: {0}")]
    Validation(String),
}

impl<T: Scalar> WorldMap<T> {
    /// Checks the map invariants against the given robot body.
    pub fn validate(&self, geom: &RobotGeometry<T>) -> Result<(), MapError> {
        if self.segments.is_empty() {
            return Err(MapError::Validation("map has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length() > T::lit(1e-9)) {
                return Err(MapError::Validation(format!("segment {} has zero length", i + 1)));
            }
        }
        let clearance = self.clearance(self.start.x, self.start.y);
        if clearance < geom.body_radius {
            return Err(MapError::Validation(format!(
                "start pose is in collision: clearance {clearance} < body radius {}",
                geom.body_radius
            )));
        }
        Ok(())
    }

    /// Distance from a point to the nearest wall.
    pub fn clearance(&self, x: T, y: T) -> T {
        self.segments.iter().map(|s| s.distance_to(x, y)).fold(T::infinity(), T::min)
    }
}

/// Parses a map file and validates it against `geom`.
///
/// ```text
/// # comment
/// START x y theta_deg
/// LINE ax ay bx by
/// ```
pub fn load_map<T: Scalar>(text: &str, geom: &RobotGeometry<T>) -> Result<WorldMap<T>, MapError> {
    let mut start = None;
    let mut segments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let keyword = fields.next().unwrap_or_default();
        let numbers = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| MapError::Parse { line, message: format!("invalid number `{f}`") })
            })
            .collect::<Result<Vec<T>, _>>()?;
        let expect = |n: usize| {
            if numbers.len() == n {
                Ok(())
            } else {
                Err(MapError::Parse {
                    line,
                    message: format!("{keyword} takes {n} numbers, found {}", numbers.len()),
                })
            }
        };
        match keyword {
            "START" => {
                expect(3)?;
                if start.is_some() {
                    return Err(MapError::Parse { line, message: "duplicate START line".into() });
                }
                let pose = Pose::new(numbers[0], numbers[1], numbers[2].to_radians())
                    .map_err(|e| MapError::Parse { line, message: e.to_string() })?;
                start = Some(pose);
            }
            "LINE" => {
                expect(4)?;
                segments.push(LineSegment::new(numbers[0], numbers[1], numbers[2], numbers[3]));
            }
            other => {
                return Err(MapError::Parse { line, message: format!("unknown keyword `{other}`") });
            }
        }
    }
    let start = start.ok_or(MapError::Parse { line: 0, message: "missing START line".into() })?;
    let map = WorldMap { name: String::new(), segments, start };
    map.validate(geom)?;
    Ok(map)
}

/// Writes a map in the text format accepted by [`load_map`].
pub fn serialize_map<T: Scalar>(map: &WorldMap<T>) -> String {
    let mut out = String::new();
    if !map.name.is_empty() {
        let _ = writeln!(out, "# {}", map.name);
    }
    let _ = writeln!(
        out,
        "START {} {} {}",
        map.start.x.to_f64_lossy(),
        map.start.y.to_f64_lossy(),
        map.start.theta.to_f64_lossy().to_degrees()
    );
    for s in &map.segments {
        let _ = writeln!(
            out,
            "LINE {} {} {} {}",
            s.ax.to_f64_lossy(),
            s.ay.to_f64_lossy(),
            s.bx.to_f64_lossy(),
            s.by.to_f64_lossy()
        );
    }
    out
}

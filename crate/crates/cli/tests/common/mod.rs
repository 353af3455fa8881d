#![allow(dead_code)]

use std::path::PathBuf;

use wallsim::script::{ScriptCursor, ScriptEvent};
use wallsim::{RunConfig, Simulation};
use wallsim_core::supervisor::Mode;
use wallsim_core::world::load_map;
use wallsim_core::{Pose, RobotGeometry, WorldMap};

pub fn maps_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str) -> WorldMap {
    let text = std::fs::read_to_string(maps_dir().join(name)).unwrap();
    let mut map = load_map(&text, &RobotGeometry::default()).unwrap();
    map.name = name.into();
    map
}

pub fn room() -> WorldMap {
    load("rectangle_room.map")
}

pub fn sim_with(map: WorldMap, mode: Mode, duration_s: f64, script: Vec<ScriptEvent>) -> Simulation {
    let config = RunConfig { mode, ..RunConfig::headless(maps_dir().join(&map.name), duration_s) };
    Simulation::new(config, map, ScriptCursor::new(script)).unwrap()
}

pub fn at(at_ms: u64, frame: &str) -> ScriptEvent {
    ScriptEvent { at_ms, frame: frame.into() }
}

pub fn with_start(mut map: WorldMap, start: Pose) -> WorldMap {
    map.start = start;
    map
}

/// Prints the criterion outcome and fails the test when it did not hold.
pub fn report(criterion: &str, ok: bool, detail: String) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion} failed: {detail}");
}

/// Forward-Euler integration of the unicycle with `substeps` equal steps.
pub fn euler_unicycle(pose: [f64; 3], v: f64, w: f64, dt: f64, substeps: usize) -> [f64; 3] {
    let h = dt / substeps as f64;
    let [mut x, mut y, mut th] = pose;
    for _ in 0..substeps {
        x += v * th.cos() * h;
        y += v * th.sin() * h;
        th += w * h;
    }
    [x, y, th]
}

/// Ray/segment hits via the implicit line equation `a·x + b·y = c` of each
/// wall, then a containment check on the hit point.
pub fn brute_force_raycast(origin: [f64; 2], dir: f64, segs: &[[f64; 4]], max_range: f64) -> Option<f64> {
    let (dx, dy) = (dir.cos(), dir.sin());
    let mut best: Option<f64> = None;
    for &[ax, ay, bx, by] in segs {
        let (a, b) = (by - ay, ax - bx);
        let c = a * ax + b * ay;
        let rate = a * dx + b * dy;
        if rate.abs() < 1e-15 {
            continue;
        }
        let t = (c - a * origin[0] - b * origin[1]) / rate;
        if t < 0.0 || t > max_range {
            continue;
        }
        let (px, py) = (origin[0] + t * dx, origin[1] + t * dy);
        let len = (bx - ax).hypot(by - ay);
        let along = ((px - ax) * (bx - ax) + (py - ay) * (by - ay)) / len;
        if along >= -1e-9 && along <= len + 1e-9 && best.is_none_or(|bst| t < bst) {
            best = Some(t);
        }
    }
    best
}

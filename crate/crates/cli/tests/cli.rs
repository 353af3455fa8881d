mod common;

use std::process::Command;
use std::sync::mpsc;
use std::time::Duration;

use common::*;
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio_tungstenite::tungstenite::Message;
use wallsim::runner::run_headless_with;
use wallsim::script::{write_script, ScriptCursor};
use wallsim::server::run_realtime;
use wallsim::{RunConfig, Simulation};
use wallsim_core::supervisor::Mode;
use wallsim_core::teleop::{orientation_to_twist, OrientationSample};
use wallsim_core::{LineSegment, Pose, RobotGeometry, TeleopParams, WorldMap};

fn wallsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wallsim"))
}

fn read_log(path: &std::path::Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn open_field() -> WorldMap {
    let s = 100.0;
    WorldMap {
        name: "open".into(),
        segments: vec![
            LineSegment::new(-s, -s, s, -s),
            LineSegment::new(s, -s, s, s),
            LineSegment::new(s, s, -s, s),
            LineSegment::new(-s, s, -s, -s),
        ],
        start: Pose::default(),
    }
}

#[test]
fn headless_run_writes_expected_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("room.jsonl");
    let status = wallsim()
        .args(["--headless", "--duration-s", "240", "--mode", "auto", "--log"])
        .arg(&log)
        .arg("--map")
        .arg(maps_dir().join("rectangle_room.map"))
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    let frames = read_log(&log);
    assert_eq!(frames.len(), 2400);
    assert_eq!(frames[0]["tick"], 5);
    assert_eq!(frames.last().unwrap()["tick"], 12000);
    assert!(frames.iter().all(|f| f["type"] == "telemetry" && f["collided"] == false));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| wallsim().args(args).env("RUST_LOG", "off").output().unwrap();

    let out = run(&["--headless", "--duration-s", "1", "--map", "/nonexistent/room.map"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/room.map"));

    let bad_map = dir.path().join("bad.map");
    std::fs::write(&bad_map, "LINE 0 0 1 1\n").unwrap();
    let out = run(&["--headless", "--duration-s", "1", "--map", bad_map.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let room = maps_dir().join("rectangle_room.map");
    let room = room.to_str().unwrap();
    let out = run(&["--headless", "--duration-s", "1", "--tick-hz", "0", "--map", room]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["--headless", "--duration-s", "1", "--mode", "warp", "--map", room]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"tick_hz": 50, "turbo": true}"#).unwrap();
    let out = run(&["--headless", "--duration-s", "1", "--map", room, "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let script = dir.path().join("bad.jsonl");
    std::fs::write(&script, "{\"at_ms\":0,\"frame\":{\"type\":\"warp\"}}\n").unwrap();
    let out = run(&["--headless", "--duration-s", "1", "--map", room, "--script", script.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let log = dir.path().join("run.jsonl");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"map": {:?}, "headless": true, "duration_s": 10, "telemetry_hz": 5, "log": {:?}}}"#,
            maps_dir().join("rectangle_room.map"),
            log
        ),
    )
    .unwrap();
    let status = wallsim().arg("--config").arg(&cfg).args(["--duration-s", "2"]).env("RUST_LOG", "off").status().unwrap();
    assert!(status.success());
    assert_eq!(read_log(&log).len(), 10);
}

#[test]
fn scripted_estop_stops_the_robot() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("estop.jsonl");
    std::fs::write(&script, "{\"at_ms\":1000,\"frame\":{\"type\":\"estop\",\"engaged\":true}}\n").unwrap();
    let log = dir.path().join("estop.jsonl.log");
    let status = wallsim()
        .args(["--headless", "--duration-s", "3", "--mode", "auto", "--map"])
        .arg(maps_dir().join("rectangle_room.map"))
        .arg("--script")
        .arg(&script)
        .arg("--log")
        .arg(&log)
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    let frames = read_log(&log);
    for f in &frames {
        let tick = f["tick"].as_u64().unwrap();
        let stopped = f["cmd"] == serde_json::json!([0.0, 0.0]) && f["estop"] == true;
        assert_eq!(stopped, tick > 50, "tick {tick}: {f}");
    }
    let first_after = frames.iter().position(|f| f["tick"].as_u64().unwrap() > 50).unwrap();
    // once stopped the pose no longer changes
    assert!(frames[first_after + 1..].windows(2).all(|w| w[0]["pose"] == w[1]["pose"]));
}

#[test]
fn orientation_ramp_maps_to_commands() {
    let params = TeleopParams::default();
    let samples: Vec<OrientationSample<f64>> = (0..=120)
        .map(|i| OrientationSample {
            roll_deg: 40.0 - i as f64 * (2.0 / 3.0),
            pitch_deg: -40.0 + i as f64 * (2.0 / 3.0),
            yaw_deg: 0.0,
            ts_ms: i,
        })
        .collect();
    let script: Vec<_> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let frame = format!(
                r#"{{"type":"orientation","roll_deg":{},"pitch_deg":{},"yaw_deg":0,"ts_ms":{}}}"#,
                s.roll_deg, s.pitch_deg, s.ts_ms
            );
            at(i as u64 * 20, &frame)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ramp.jsonl");
    let config = RunConfig {
        mode: Mode::Teleop,
        telemetry_hz: 50,
        log_path: Some(log.clone()),
        ..RunConfig::headless("open", 3.0)
    };
    let mut sim = Simulation::new(config, open_field(), ScriptCursor::new(script)).unwrap();
    run_headless_with(&mut sim, |_| {}).unwrap();
    let frames = read_log(&log);
    assert_eq!(frames.len(), 150);
    for (s, f) in samples.iter().zip(&frames) {
        let want = orientation_to_twist(s, &params, &RobotGeometry::default()).unwrap();
        let cmd = f["cmd"].as_array().unwrap();
        assert_eq!(cmd[0].as_f64().unwrap(), want.v, "sample {s:?}");
        assert_eq!(cmd[1].as_f64().unwrap(), want.w, "sample {s:?}");
        assert_eq!(f["source"], "teleop");
    }
}

#[test]
fn script_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let events = vec![at(0, r#"{"type":"mode","value":"teleop"}"#), at(500, r#"{"type":"twist","v":0.25,"w":-0.5}"#)];
    std::fs::write(&path, write_script(&events)).unwrap();
    let config = RunConfig {
        script_path: Some(path),
        ..RunConfig::headless(maps_dir().join("rectangle_room.map"), 1.0)
    };
    let mut sim = Simulation::from_config(&config).unwrap();
    let mut sources = Vec::new();
    run_headless_with(&mut sim, |rec| sources.push((rec.mode, rec.decision.cmd.v))).unwrap();
    assert_eq!(sources[0], (Mode::Teleop, 0.0));
    assert_eq!(sources[25], (Mode::Teleop, 0.25));
}

#[test]
fn realtime_pacing() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("rt.jsonl");
    let config = RunConfig {
        headless: false,
        listen: "127.0.0.1:0".parse().unwrap(),
        log_path: Some(log.clone()),
        ..RunConfig::headless(maps_dir().join("rectangle_room.map"), 1.0)
    };
    let mut sim = Simulation::from_config(&config).unwrap();
    let summary = run_realtime(&mut sim, |_| {}).unwrap();
    let period = summary.elapsed.as_secs_f64() / summary.run.ticks as f64;
    assert_eq!(summary.run.ticks, 50);
    assert!((period - 0.02).abs() <= 0.02 * 0.05, "mean period {period}");
    let frames = read_log(&log).len() as i64;
    assert!((frames - 10).abs() <= 1, "{frames} frames");
}

#[test]
fn live_client_drives_the_robot() {
    let config = RunConfig {
        headless: false,
        mode: Mode::Teleop,
        listen: "127.0.0.1:0".parse().unwrap(),
        ..RunConfig::headless(maps_dir().join("rectangle_room.map"), 3.0)
    };
    let mut sim = Simulation::from_config(&config).unwrap();
    let (tx, rx) = mpsc::channel();
    let runner = std::thread::spawn(move || run_realtime(&mut sim, move |addr| tx.send(addr).unwrap()).unwrap());
    let addr = rx.recv_timeout(Duration::from_secs(5)).unwrap();

    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let seen = rt.block_on(async {
        let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}")).await.unwrap();
        ws.send(Message::Text(r#"{"type":"twist","v":0.3,"w":0.0}"#.into())).await.unwrap();
        let deadline = tokio::time::Instant::now() + Duration::from_secs(2);
        while let Ok(Some(Ok(msg))) = tokio::time::timeout_at(deadline, ws.next()).await {
            let Message::Text(text) = msg else { continue };
            let frame: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(frame["type"], "telemetry");
            if frame["source"] == "teleop" && frame["cmd"][0] == 0.3 {
                return true;
            }
            // keep the command fresh
            ws.send(Message::Text(r#"{"type":"twist","v":0.3,"w":0.0}"#.into())).await.unwrap();
        }
        false
    });
    assert!(seen, "no telemetry reflected the operator command");
    runner.join().unwrap();
}

//! Scripted client input. A script is JSON Lines, one event per line:
//!
//! ```text
//! {"at_ms": 1000, "frame": {"type": "estop", "engaged": true}}
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. Events must be sorted
//! by `at_ms`; every frame must parse as a client message.

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;
use wallsim_core::teleop::parse_message;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEvent {
    /// Simulation time in milliseconds at which the frame is delivered.
    pub at_ms: u64,
    /// The wire frame text, exactly as a client would send it.
    pub frame: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("script line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("script line {line}: at_ms {at_ms} is earlier than the previous event")]
    Unsorted { line: usize, at_ms: u64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at_ms: u64,
    frame: Value,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptEvent>, ScriptError> {
    let mut events: Vec<ScriptEvent> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let ev: RawEvent =
            serde_json::from_str(trimmed).map_err(|e| ScriptError::Line { line, message: e.to_string() })?;
        let frame = ev.frame.to_string();
        parse_message(&frame).map_err(|e| ScriptError::Line { line, message: e.to_string() })?;
        if events.last().is_some_and(|prev| prev.at_ms > ev.at_ms) {
            return Err(ScriptError::Unsorted { line, at_ms: ev.at_ms });
        }
        events.push(ScriptEvent { at_ms: ev.at_ms, frame });
    }
    Ok(events)
}

/// Serializes events back to the script format.
pub fn write_script(events: &[ScriptEvent]) -> String {
    events.iter().map(|e| format!("{{\"at_ms\":{},\"frame\":{}}}\n", e.at_ms, e.frame)).collect()
}

/// Hands out script events as simulation time passes.
#[derive(Debug, Clone, Default)]
pub struct ScriptCursor {
    events: Vec<ScriptEvent>,
    next: usize,
}

impl ScriptCursor {
    pub fn new(events: Vec<ScriptEvent>) -> Self {
        Self { events, next: 0 }
    }

    /// Events due at or before `tick`, compared in integer arithmetic so that
    /// `at_ms / 1000 <= tick / tick_hz` holds exactly.
    pub fn due(&mut self, tick: u64, tick_hz: u32) -> &[ScriptEvent] {
        let start = self.next;
        let now = u128::from(tick) * 1000;
        while self.events.get(self.next).is_some_and(|e| u128::from(e.at_ms) * u128::from(tick_hz) <= now) {
            self.next += 1;
        }
        &self.events[start..self.next]
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

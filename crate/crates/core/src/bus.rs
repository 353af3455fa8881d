//! In-process publish/subscribe bus with a fixed topic set.
//!
//! Each topic keeps its most recent envelope for late readers. Subscribers
//! either register a callback, run on the publisher's thread, or take a
//! bounded queue that drops the oldest envelope when full.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, Weak};

use thiserror::Error;

use crate::simcore::SonarScan;
use crate::supervisor::Mode;
use crate::world::{Pose, Twist};

/// Depth of queue subscriptions.
pub const QUEUE_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeChange {
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstopChange {
    pub engaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadKind {
    Twist,
    Pose,
    Sonar,
    Mode,
    Estop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Twist(Twist<f64>),
    Pose(Pose<f64>),
    Sonar(SonarScan<f64>),
    Mode(ModeChange),
    Estop(EstopChange),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Twist(_) => PayloadKind::Twist,
            Payload::Pose(_) => PayloadKind::Pose,
            Payload::Sonar(_) => PayloadKind::Sonar,
            Payload::Mode(_) => PayloadKind::Mode,
            Payload::Estop(_) => PayloadKind::Estop,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub topic: &'static str,
    pub seq: u64,
    pub t_sim: f64,
    pub payload: Payload,
}

pub const CMD_VEL: &str = "cmd_vel";
pub const CMD_AUTO: &str = "cmd_auto";
pub const CMD_TELEOP: &str = "cmd_teleop";
pub const POSE: &str = "pose";
pub const SONAR: &str = "sonar";
pub const MODE: &str = "mode";
pub const ESTOP: &str = "estop";

/// Every topic the bus accepts, with its payload type.
pub const TOPICS: [(&str, PayloadKind); 7] = [
    (CMD_VEL, PayloadKind::Twist),
    (CMD_AUTO, PayloadKind::Twist),
    (CMD_TELEOP, PayloadKind::Twist),
    (POSE, PayloadKind::Pose),
    (SONAR, PayloadKind::Sonar),
    (MODE, PayloadKind::Mode),
    (ESTOP, PayloadKind::Estop),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BusError {
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("topic `{topic}` carries {expected:?}, got {found:?}")]
    TypeMismatch { topic: &'static str, expected: PayloadKind, found: PayloadKind },
}

type Callback = Box<dyn Fn(&Envelope) + Send + Sync>;
type Queue = Mutex<VecDeque<Envelope>>;

#[derive(Default)]
struct Slot {
    seq: u64,
    latest: Option<Envelope>,
    callbacks: Vec<Callback>,
    queues: Vec<Weak<Queue>>,
}

struct Topic {
    name: &'static str,
    kind: PayloadKind,
    slot: Mutex<Slot>,
}

/// Receiving end of a queue subscription. Dropping it unsubscribes.
pub struct Subscription {
    queue: Arc<Queue>,
}

impl Subscription {
    pub fn try_recv(&self) -> Option<Envelope> {
        self.queue.lock().unwrap().pop_front()
    }

    pub fn drain(&self) -> Vec<Envelope> {
        self.queue.lock().unwrap().drain(..).collect()
    }
}

pub struct Bus {
    topics: Vec<Topic>,
    clock: AtomicU64,
}

impl Default for Bus {
    fn default() -> Self {
        Self::new()
    }
}

impl Bus {
    pub fn new() -> Self {
        Self {
            topics: TOPICS
                .iter()
                .map(|&(name, kind)| Topic { name, kind, slot: Mutex::new(Slot::default()) })
                .collect(),
            clock: AtomicU64::new(0f64.to_bits()),
        }
    }

    /// Sets the simulation time stamped on subsequent envelopes.
    pub fn set_time(&self, t_sim: f64) {
        self.clock.store(t_sim.to_bits(), Ordering::Release);
    }

    pub fn now(&self) -> f64 {
        f64::from_bits(self.clock.load(Ordering::Acquire))
    }

    fn topic(&self, name: &str) -> Result<&Topic, BusError> {
        self.topics.iter().find(|t| t.name == name).ok_or_else(|| BusError::UnknownTopic(name.to_owned()))
    }

    /// Publishes a payload and returns its sequence number.
    ///
    /// Delivery happens under the topic lock, so every subscriber sees a
    /// topic's envelopes once each and in sequence order. Callbacks must not
    /// block or publish to the same topic.
    pub fn publish(&self, topic: &str, payload: Payload) -> Result<u64, BusError> {
        let topic = self.topic(topic)?;
        if payload.kind() != topic.kind {
            return Err(BusError::TypeMismatch { topic: topic.name, expected: topic.kind, found: payload.kind() });
        }
        let mut slot = topic.slot.lock().unwrap();
        slot.seq += 1;
        let env = Envelope { topic: topic.name, seq: slot.seq, t_sim: self.now(), payload };
        for cb in &slot.callbacks {
            cb(&env);
        }
        slot.queues.retain(|q| match q.upgrade() {
            Some(q) => {
                let mut q = q.lock().unwrap();
                if q.len() == QUEUE_DEPTH {
                    q.pop_front();
                }
                q.push_back(env.clone());
                true
            }
            None => false,
        });
        let seq = env.seq;
        slot.latest = Some(env);
        Ok(seq)
    }

    pub fn latest(&self, topic: &str) -> Result<Option<Envelope>, BusError> {
        Ok(self.topic(topic)?.slot.lock().unwrap().latest.clone())
    }

    pub fn subscribe(&self, topic: &str) -> Result<Subscription, BusError> {
        let queue = Arc::new(Mutex::new(VecDeque::with_capacity(QUEUE_DEPTH)));
        self.topic(topic)?.slot.lock().unwrap().queues.push(Arc::downgrade(&queue));
        Ok(Subscription { queue })
    }

    pub fn subscribe_fn<F>(&self, topic: &str, callback: F) -> Result<(), BusError>
    where
        F: Fn(&Envelope) + Send + Sync + 'static,
    {
        self.topic(topic)?.slot.lock().unwrap().callbacks.push(Box::new(callback));
        Ok(())
    }
}

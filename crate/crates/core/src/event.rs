//! Domain types shared by every stage of the split–process–merge pipeline.
//!
//! All times are simulated milliseconds. Event timestamps are integral;
//! latencies and costs are `f64` milliseconds.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulated time in milliseconds.
pub type Millis = f64;

/// Opaque event-type symbol such as `L1`, `L2`, `query` or `face`.
///
/// Cloning is cheap; the name is shared.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct EventType(Arc<str>);

impl EventType {
    pub fn new(name: &str) -> Self {
        EventType(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for EventType {
    fn from(s: String) -> Self {
        EventType(Arc::from(s))
    }
}

impl From<&str> for EventType {
    fn from(s: &str) -> Self {
        EventType::new(s)
    }
}

impl From<EventType> for String {
    fn from(t: EventType) -> Self {
        t.0.to_string()
    }
}

impl fmt::Debug for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One element of the inbound stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Position in the global total order, assigned on arrival at the splitter.
    pub seq: u64,
    /// Arrival timestamp in milliseconds.
    pub ts: u64,
    pub etype: EventType,
    /// Correlation key (number plate, query id, ...).
    pub key: Option<u64>,
    /// Per-event cost scalar in milliseconds, consumed by `custom_table` cost models.
    pub cost_hint: Option<f64>,
}

impl Event {
    pub fn new(seq: u64, ts: u64, etype: impl Into<EventType>) -> Self {
        Event {
            seq,
            ts,
            etype: etype.into(),
            key: None,
            cost_hint: None,
        }
    }

    pub fn with_key(mut self, key: u64) -> Self {
        self.key = Some(key);
        self
    }

    pub fn with_cost_hint(mut self, hint: f64) -> Self {
        self.cost_hint = Some(hint);
        self
    }

    pub fn ts_ms(&self) -> Millis {
        self.ts as f64
    }
}

/// Total order of the stream: timestamp first, sequence number as tiebreaker.
pub fn compare_events(a: &Event, b: &Event) -> Ordering {
    a.ts.cmp(&b.ts).then(a.seq.cmp(&b.seq))
}

/// Index of a simulated operator instance.
pub type InstanceId = usize;

/// Window identifier, allocated in opening order.
pub type WindowId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowDescriptor {
    pub wid: WindowId,
    pub start_seq: u64,
    pub open_ts: u64,
    pub close_ts: Option<u64>,
    /// Sequence number of the event that closed the window.
    pub close_seq: Option<u64>,
    pub assigned_instance: Option<InstanceId>,
    pub key: Option<u64>,
    /// Time at which a time-scoped window closes; `None` for key-closed windows.
    pub close_at: Option<u64>,
    pub member_count_per_type: BTreeMap<EventType, u64>,
}

impl WindowDescriptor {
    pub fn open(wid: WindowId, opener: &Event) -> Self {
        WindowDescriptor {
            wid,
            start_seq: opener.seq,
            open_ts: opener.ts,
            close_ts: None,
            close_seq: None,
            assigned_instance: None,
            key: opener.key,
            close_at: None,
            member_count_per_type: BTreeMap::new(),
        }
    }

    pub fn is_open(&self) -> bool {
        self.close_ts.is_none()
    }

    /// Window scope `close_ts - open_ts`, once closed.
    pub fn scope(&self) -> Option<Millis> {
        self.close_ts.map(|c| (c - self.open_ts) as f64)
    }

    pub fn member_count(&self, etype: &EventType) -> u64 {
        self.member_count_per_type.get(etype).copied().unwrap_or(0)
    }

    pub fn total_members(&self) -> u64 {
        self.member_count_per_type.values().sum()
    }

    pub(crate) fn record_member(&mut self, etype: &EventType) {
        *self.member_count_per_type.entry(etype.clone()).or_insert(0) += 1;
    }

    pub(crate) fn close(&mut self, by: &Event) {
        debug_assert!(by.ts >= self.open_ts);
        self.close_ts = Some(by.ts);
        self.close_seq = Some(by.seq);
    }
}

/// Monotone simulated clock.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: Millis,
}

impl SimClock {
    pub fn new() -> Self {
        SimClock { now: 0.0 }
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn advance_to(&mut self, t: Millis) -> Result<()> {
        if t < self.now {
            return Err(Error::ClockRegression {
                now: self.now,
                requested: t,
            });
        }
        self.now = t;
        Ok(())
    }
}

/// Latency observed for one event on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub event_seq: u64,
    pub instance: InstanceId,
    pub ts: u64,
    pub lambda_q: Millis,
    pub lambda_p: Millis,
    pub lambda_o: Millis,
}

impl LatencySample {
    pub fn new(
        event_seq: u64,
        instance: InstanceId,
        ts: u64,
        lambda_q: Millis,
        lambda_p: Millis,
    ) -> Self {
        debug_assert!(lambda_q >= 0.0 && lambda_p >= 0.0);
        LatencySample {
            event_seq,
            instance,
            ts,
            lambda_q,
            lambda_p,
            lambda_o: lambda_q + lambda_p,
        }
    }
}

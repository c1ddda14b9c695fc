use std::collections::BTreeMap;

use serde::Serialize;

use crate::event::{Event, EventType, InstanceId, LatencySample, Millis};

/// Queue summary an instance sends to the splitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackReport {
    pub instance: InstanceId,
    /// Events not yet completed, per type.
    pub queued_counts: BTreeMap<EventType, u64>,
    /// Average number of assigned windows per queued event; 1 for an empty queue.
    pub theta_bar_rep: f64,
    /// Operational latency of the most recently completed event.
    pub last_lambda_o: Millis,
    pub emitted_at: Millis,
}

impl FeedbackReport {
    pub fn empty(instance: InstanceId) -> Self {
        FeedbackReport {
            instance,
            queued_counts: BTreeMap::new(),
            theta_bar_rep: 1.0,
            last_lambda_o: 0.0,
            emitted_at: 0.0,
        }
    }
}

/// One event processed by one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecord {
    pub seq: u64,
    pub ts: u64,
    pub etype: EventType,
    pub arrival: Millis,
    pub lambda_q: Millis,
    pub lambda_p: Millis,
    pub completion: Millis,
    /// Events ahead of this one (queued or in service) on arrival.
    pub queue_len: usize,
    /// In-window latency for each assigned window the event belongs to.
    pub window_costs: Vec<Millis>,
}

impl ProcessedRecord {
    pub fn lambda_o(&self) -> Millis {
        self.lambda_q + self.lambda_p
    }

    pub fn theta(&self) -> usize {
        self.window_costs.len()
    }
}

/// Simulated operator instance: a FIFO single server that processes each
/// event sequentially in every assigned window it belongs to.
#[derive(Debug, Clone)]
pub struct InstanceState {
    pub idx: InstanceId,
    busy_until: Millis,
    records: Vec<ProcessedRecord>,
    /// Records before this index have completed.
    completed: usize,
    /// Records before this index have had their latencies delivered.
    reported: usize,
    last_lambda_o: Millis,
}

impl InstanceState {
    pub fn new(idx: InstanceId) -> Self {
        InstanceState {
            idx,
            busy_until: 0.0,
            records: Vec::new(),
            completed: 0,
            reported: 0,
            last_lambda_o: 0.0,
        }
    }

    pub fn busy_until(&self) -> Millis {
        self.busy_until
    }

    pub fn records(&self) -> &[ProcessedRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ProcessedRecord> {
        self.records
    }

    /// Number of events queued or in service at the last advanced instant.
    pub fn queue_len(&self) -> usize {
        self.records.len() - self.completed
    }

    pub fn complete_until(&mut self, t: Millis) {
        while let Some(r) = self.records.get(self.completed) {
            if r.completion > t {
                break;
            }
            self.last_lambda_o = r.lambda_o();
            self.completed += 1;
        }
    }

    /// Enqueues `e` arriving at `arrival`; `window_costs` are its in-window
    /// latencies. Service is FIFO, so the latencies are known on arrival:
    /// `λ_q = max(0, busy_until − arrival)`, `λ_p = Σ window_costs`.
    pub fn enqueue(
        &mut self,
        e: &Event,
        arrival: Millis,
        window_costs: Vec<Millis>,
    ) -> LatencySample {
        debug_assert!(self.records.last().is_none_or(|r| r.seq < e.seq));
        self.complete_until(arrival);
        let queue_len = self.queue_len();
        let lambda_p: Millis = window_costs.iter().sum();
        let start = self.busy_until.max(arrival);
        let lambda_q = start - arrival;
        self.busy_until = start + lambda_p;
        self.records.push(ProcessedRecord {
            seq: e.seq,
            ts: e.ts,
            etype: e.etype.clone(),
            arrival,
            lambda_q,
            lambda_p,
            completion: self.busy_until,
            queue_len,
            window_costs,
        });
        LatencySample::new(e.seq, self.idx, e.ts, lambda_q, lambda_p)
    }

    /// Snapshot of the queue at `now`.
    pub fn emit_feedback(&mut self, now: Millis) -> FeedbackReport {
        self.complete_until(now);
        let pending = &self.records[self.completed..];
        let mut queued_counts = BTreeMap::new();
        let mut memberships = 0usize;
        for r in pending {
            *queued_counts.entry(r.etype.clone()).or_insert(0) += 1;
            memberships += r.theta();
        }
        let theta_bar_rep = if pending.is_empty() {
            1.0
        } else {
            memberships as f64 / pending.len() as f64
        };
        FeedbackReport {
            instance: self.idx,
            queued_counts,
            theta_bar_rep,
            last_lambda_o: self.last_lambda_o,
            emitted_at: now,
        }
    }

    /// Hands every record completed by `until` and not yet delivered to `f`.
    pub fn deliver_completed(&mut self, until: Millis, mut f: impl FnMut(&ProcessedRecord)) {
        while let Some(r) = self.records.get(self.reported) {
            if r.completion > until {
                break;
            }
            f(r);
            self.reported += 1;
        }
    }
}

use crate::event::{InstanceId, LatencySample, Millis, WindowDescriptor, WindowId};
use crate::latency_model::LatencyPrediction;

use super::instance::ProcessedRecord;
use super::merge::OutputRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub wid: WindowId,
    pub open_ts: u64,
    pub kind: &'static str,
    pub instance: InstanceId,
    pub advanced: bool,
    /// Model-based: predicted λ_o^max for batching onto the previous instance.
    pub predicted_lambda_o_max: Option<Millis>,
    /// Reactive: the reported latency the decision used.
    pub observed_latency: Option<Millis>,
}

/// Latency prediction for a window on the instance it was assigned to.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub wid: WindowId,
    pub instance: InstanceId,
    pub prediction: LatencyPrediction,
}

/// Gains that actually occurred for the members of one window on its
/// instance: `λ_p(e) − (ts(next) − ts(e))` over consecutive members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActualGains {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub members: usize,
    pub peak_lambda_q: Millis,
    pub peak_lambda_o: Millis,
}

/// Consecutive windows assigned to the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Window id of the first window, which is also its decision id.
    pub id: WindowId,
    pub instance: InstanceId,
    pub start_ts: u64,
    /// Latest close among the batch's windows, or the last event time if
    /// some window never closed.
    pub end_ts: u64,
    pub windows: Vec<WindowId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackDelay {
    /// From the batch's first decision to the arrival of the event with the
    /// largest λ_o on the instance while the batch was open.
    pub lambda_o_delay: Millis,
    pub peak_lambda_o: Millis,
    /// Same, for the largest queue length.
    pub queue_delay: Millis,
    pub peak_queue_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violations {
    pub count: u64,
    /// Largest `λ_o − bound` among violating samples, 0 if none.
    pub max_excess: Millis,
    /// Share of routed events whose largest λ_o over all instances is within the bound.
    pub events_within: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheduler: &'static str,
    pub parameter: f64,
    pub n_instances: usize,
    pub n_events: u64,
    /// Events that belonged to at least one window.
    pub routed_events: u64,
    pub transmissions: u64,
    pub dropped_closes: u64,
    /// All samples in merged `(seq, instance)` order.
    pub samples: Vec<LatencySample>,
    pub outputs: Vec<OutputRecord>,
    pub instances: Vec<Vec<ProcessedRecord>>,
    /// All windows by id; unclosed windows have no `close_ts`.
    pub windows: Vec<WindowDescriptor>,
    pub decisions: Vec<DecisionRecord>,
    pub predictions: Vec<PredictionRecord>,
    pub last_ts: u64,
}

impl RunMetrics {
    pub fn max_lambda_o(&self) -> Millis {
        self.samples.iter().map(|s| s.lambda_o).fold(0.0, f64::max)
    }

    /// Nearest-rank percentile of λ_o over all samples.
    pub fn percentile_lambda_o(&self, p: f64) -> Millis {
        let mut v: Vec<f64> = self.samples.iter().map(|s| s.lambda_o).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
        v[rank.min(v.len()) - 1]
    }

    pub fn processed_per_instance(&self) -> Vec<u64> {
        self.instances.iter().map(|r| r.len() as u64).collect()
    }

    pub fn violations(&self, bound: Millis) -> Violations {
        let mut count = 0;
        let mut max_excess: f64 = 0.0;
        let mut events = 0u64;
        let mut within = 0u64;
        let mut i = 0;
        while i < self.samples.len() {
            let seq = self.samples[i].event_seq;
            let mut worst: f64 = 0.0;
            while i < self.samples.len() && self.samples[i].event_seq == seq {
                let lo = self.samples[i].lambda_o;
                if lo > bound {
                    count += 1;
                    max_excess = max_excess.max(lo - bound);
                }
                worst = worst.max(lo);
                i += 1;
            }
            events += 1;
            if worst <= bound {
                within += 1;
            }
        }
        Violations {
            count,
            max_excess,
            events_within: if events == 0 {
                1.0
            } else {
                within as f64 / events as f64
            },
        }
    }

    pub fn window(&self, wid: WindowId) -> Option<&WindowDescriptor> {
        self.windows.get(wid as usize).filter(|w| w.wid == wid)
    }

    /// Members of `wid` as processed on its instance, in seq order.
    pub fn window_records(&self, wid: WindowId) -> Option<&[ProcessedRecord]> {
        let w = self.window(wid)?;
        let inst = w.assigned_instance?;
        let recs = &self.instances[inst];
        let end_seq = w.close_seq.unwrap_or(u64::MAX);
        let a = recs.partition_point(|r| r.seq < w.start_seq);
        let b = recs.partition_point(|r| r.seq <= end_seq);
        Some(&recs[a..b])
    }

    /// Gains that occurred in a closed window; `None` for open windows.
    pub fn actual_gains(&self, wid: WindowId) -> Option<ActualGains> {
        self.window(wid)?.close_ts?;
        let recs = self.window_records(wid)?;
        let mut g = ActualGains {
            gamma_minus: 0.0,
            gamma_plus: 0.0,
            members: recs.len(),
            peak_lambda_q: 0.0,
            peak_lambda_o: 0.0,
        };
        for (k, r) in recs.iter().enumerate() {
            g.peak_lambda_q = g.peak_lambda_q.max(r.lambda_q);
            g.peak_lambda_o = g.peak_lambda_o.max(r.lambda_o());
            if let Some(next) = recs.get(k + 1) {
                let gain = r.lambda_p - (next.ts - r.ts) as f64;
                if gain > 0.0 {
                    g.gamma_minus += gain;
                } else {
                    g.gamma_plus += gain;
                }
            }
        }
        Some(g)
    }

    pub fn batches(&self) -> Vec<Batch> {
        let mut out: Vec<Batch> = Vec::new();
        for d in &self.decisions {
            let w = &self.windows[d.wid as usize];
            let end = w.close_ts.unwrap_or(self.last_ts);
            match out.last_mut() {
                Some(b) if b.instance == d.instance => {
                    b.end_ts = b.end_ts.max(end);
                    b.windows.push(d.wid);
                }
                _ => out.push(Batch {
                    id: d.wid,
                    instance: d.instance,
                    start_ts: d.open_ts,
                    end_ts: end,
                    windows: vec![d.wid],
                }),
            }
        }
        out
    }

    /// Delay between a batch's first scheduling decision and the resulting
    /// λ_o and queue-length peaks on its instance. `None` if the batch id is
    /// unknown or nothing was processed while it was open.
    pub fn measure_feedback_delay(&self, batch_id: WindowId) -> Option<FeedbackDelay> {
        let batch = self.batches().into_iter().find(|b| b.id == batch_id)?;
        feedback_delay_of(&self.instances[batch.instance], &batch)
    }

    pub fn feedback_delays(&self) -> Vec<(Batch, FeedbackDelay)> {
        self.batches()
            .into_iter()
            .filter_map(|b| feedback_delay_of(&self.instances[b.instance], &b).map(|d| (b, d)))
            .collect()
    }
}

fn feedback_delay_of(recs: &[ProcessedRecord], batch: &Batch) -> Option<FeedbackDelay> {
    let a = recs.partition_point(|r| r.ts < batch.start_ts);
    let b = recs.partition_point(|r| r.ts <= batch.end_ts);
    let span = recs.get(a..b).filter(|s| !s.is_empty())?;
    let mut peak_o = &span[0];
    let mut peak_q = &span[0];
    for r in span {
        if r.lambda_o() > peak_o.lambda_o() {
            peak_o = r;
        }
        if r.queue_len > peak_q.queue_len {
            peak_q = r;
        }
    }
    Some(FeedbackDelay {
        lambda_o_delay: (peak_o.ts - batch.start_ts) as f64,
        peak_lambda_o: peak_o.lambda_o(),
        queue_delay: (peak_q.ts - batch.start_ts) as f64,
        peak_queue_len: peak_q.queue_len,
    })
}

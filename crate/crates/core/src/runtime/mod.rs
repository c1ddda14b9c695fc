//! Deterministic discrete-event simulation of the split–process–merge
//! pipeline.
//!
//! Arrivals are processed in stream order. Between arrivals the engine fires
//! periodic ticks: instance feedback reports every `feedback_interval` and
//! the end of a statistics monitoring window every `mtime`. Instances are
//! FIFO single servers whose service time is the sum of an event's
//! in-window costs, so each event's queuing and processing latency is fixed
//! on arrival while its completion (and thus its visibility to the
//! splitter) lies in the simulated future.

mod instance;
mod merge;
mod metrics;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use instance::{FeedbackReport, InstanceState, ProcessedRecord};
pub use merge::{merge, merge_sorted_by, OutputRecord};
pub use metrics::{
    ActualGains, Batch, DecisionRecord, FeedbackDelay, PredictionRecord, RunMetrics, Violations,
};

use crate::error::{Error, Result};
use crate::event::{Event, Millis, SimClock, WindowDescriptor};
use crate::latency_model::{self, BiasedModel, ModelParams};
use crate::scheduler::{Scheduler, SchedulerKind, SchedulingView};
use crate::splitter::{route_event, StatsConfig, StreamStats, WindowRule, WindowTracker};
use crate::workload::{CostKind, CostModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_instances: usize,
    /// Monitoring window length (ms).
    pub mtime: Millis,
    /// Interval between instance feedback reports; defaults to `mtime / 10`.
    #[serde(default)]
    pub feedback_interval: Option<Millis>,
    /// Delay before reports and latency measurements reach the splitter.
    #[serde(default)]
    pub feedback_delay: Millis,
    /// Splitter-to-instance network delay.
    #[serde(default)]
    pub transfer_delay: Millis,
    #[serde(default)]
    pub model: ModelParams,
    pub scheduler: SchedulerKind,
}

impl SimConfig {
    pub fn feedback_interval(&self) -> Millis {
        self.feedback_interval.unwrap_or(self.mtime / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::config("n_instances", "must be >= 1"));
        }
        if !(self.mtime > 0.0 && self.mtime.is_finite()) {
            return Err(Error::config("mtime", "must be > 0"));
        }
        let fi = self.feedback_interval();
        if !(fi > 0.0 && fi.is_finite()) {
            return Err(Error::config("feedback_interval", "must be > 0"));
        }
        if !(self.feedback_delay >= 0.0 && self.feedback_delay.is_finite()) {
            return Err(Error::config("feedback_delay", "must be >= 0"));
        }
        if !(self.transfer_delay >= 0.0 && self.transfer_delay.is_finite()) {
            return Err(Error::config("transfer_delay", "must be >= 0"));
        }
        self.model.validate("model")?;
        self.scheduler.validate("scheduler")
    }
}

fn check_stream(events: &[Event], cost: &CostModel) -> Result<()> {
    let mut missing = BTreeSet::new();
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            let prev = &events[i - 1];
            if e.ts < prev.ts || e.seq <= prev.seq {
                return Err(Error::config(
                    "events",
                    format!("stream out of order at seq {}", e.seq),
                ));
            }
        }
        let hinted = cost.kind == CostKind::CustomTable && e.cost_hint.is_some();
        if !hinted && !cost.base.contains_key(&e.etype) {
            missing.insert(e.etype.to_string());
        }
    }
    match missing.into_iter().next() {
        Some(t) => Err(Error::config(
            format!("workload.cost.base.{t}"),
            "event type has no cost",
        )),
        None => Ok(()),
    }
}

struct Simulation<'a> {
    cfg: &'a SimConfig,
    cost: &'a CostModel,
    clock: SimClock,
    stats: StreamStats,
    tracker: WindowTracker,
    scheduler: Scheduler,
    instances: Vec<InstanceState>,
    model: Option<BiasedModel>,
    reports: Vec<FeedbackReport>,
    in_flight: VecDeque<(Millis, FeedbackReport)>,
    next_feedback: Millis,
    next_freeze: Millis,
    windows: Vec<WindowDescriptor>,
    decisions: Vec<DecisionRecord>,
    predictions: Vec<PredictionRecord>,
    transmissions: u64,
    routed_events: u64,
}

impl<'a> Simulation<'a> {
    fn new(rule: WindowRule, cost: &'a CostModel, cfg: &'a SimConfig) -> Self {
        let n = cfg.n_instances;
        Simulation {
            cfg,
            cost,
            clock: SimClock::new(),
            stats: StreamStats::new(StatsConfig {
                n_iat_bins: cfg.model.n_iat_bins,
                n_lat_bins: cfg.model.n_lat_bins,
                mtime: cfg.mtime,
            }),
            tracker: WindowTracker::new(rule, n),
            scheduler: Scheduler::new(cfg.scheduler, n),
            instances: (0..n).map(InstanceState::new).collect(),
            model: None,
            reports: (0..n).map(FeedbackReport::empty).collect(),
            in_flight: VecDeque::new(),
            next_feedback: cfg.feedback_interval(),
            next_freeze: cfg.mtime,
            windows: Vec::new(),
            decisions: Vec::new(),
            predictions: Vec::new(),
            transmissions: 0,
            routed_events: 0,
        }
    }

    /// Delivers everything visible to the splitter at `t`.
    fn sync(&mut self, t: Millis) {
        let visible = t - self.cfg.feedback_delay;
        for inst in &mut self.instances {
            let stats = &mut self.stats;
            inst.deliver_completed(visible, |r| {
                for &c in &r.window_costs {
                    stats.observe_latency(&r.etype, c);
                }
            });
        }
        while self.in_flight.front().is_some_and(|(at, _)| *at <= t) {
            let (_, rep) = self.in_flight.pop_front().expect("front checked");
            let idx = rep.instance;
            self.reports[idx] = rep;
        }
    }

    fn advance_to(&mut self, t: Millis) {
        loop {
            let tick = self.next_feedback.min(self.next_freeze);
            if tick > t {
                break;
            }
            self.clock.advance_to(tick).expect("ticks are monotone");
            self.sync(tick);
            if self.next_feedback <= tick {
                for inst in &mut self.instances {
                    let rep = inst.emit_feedback(tick);
                    self.in_flight
                        .push_back((tick + self.cfg.feedback_delay, rep));
                }
                self.next_feedback += self.cfg.feedback_interval();
            }
            // a zero delay report is visible at once
            self.sync(tick);
            if self.next_freeze <= tick {
                let snap = self.stats.end_monitoring_window(tick);
                self.model = BiasedModel::from_snapshot(&snap, &self.cfg.model);
                self.next_freeze += self.cfg.mtime;
            }
        }
        self.clock.advance_to(t).expect("events arrive in order");
        self.sync(t);
    }

    fn on_event(&mut self, e: &Event) {
        self.advance_to(e.ts_ms());
        self.stats.observe_event(e);

        let mut det = self.tracker.detect_windows(e);
        for w in &det.closed {
            self.stats.observe_window_close(w.scope().expect("closed"));
        }
        for &wid in &det.opened {
            self.stats.observe_window_open(e.ts);
            self.schedule_window(wid, e);
        }
        if det.memberships.is_empty() {
            return;
        }
        self.routed_events += 1;

        // in-window costs per instance, in window-id order
        let mut per_instance: Vec<Vec<Millis>> = vec![Vec::new(); self.cfg.n_instances];
        let mut owners = Vec::with_capacity(det.memberships.len());
        let closed = &mut det.closed;
        for &wid in &det.memberships {
            let w = match self.tracker.get_mut(wid) {
                Some(w) => w,
                None => closed
                    .iter_mut()
                    .find(|w| w.wid == wid)
                    .expect("member is open or just closed"),
            };
            let inst = w.assigned_instance.expect("member windows are assigned");
            let c = self
                .cost
                .in_window_cost(e, &w.member_count_per_type)
                .expect("stream types checked before the run");
            w.record_member(&e.etype);
            per_instance[inst].push(c);
            owners.push(inst);
        }
        let arrival = e.ts_ms() + self.cfg.transfer_delay;
        for inst in route_event(owners) {
            let costs = std::mem::take(&mut per_instance[inst]);
            self.instances[inst].enqueue(e, arrival, costs);
            self.transmissions += 1;
        }
        for w in det.closed {
            let wid = w.wid as usize;
            self.windows[wid] = w;
        }
    }

    fn schedule_window(&mut self, wid: u64, e: &Event) {
        let view = SchedulingView {
            model: self.model.as_ref(),
            reports: &self.reports,
            open_windows: self.tracker.open_per_instance(),
            params: &self.cfg.model,
        };
        let d = self.scheduler.schedule(&view);
        let chosen_prediction = match (&d.prediction, &self.model) {
            (Some(p), _) if !d.advanced => Some(p.clone()),
            (_, Some(m)) => Some(latency_model::predict(
                m,
                &self.reports[d.instance],
                self.tracker.open_per_instance()[d.instance],
                &self.cfg.model,
            )),
            _ => None,
        };
        self.tracker.assign(wid, d.instance);
        debug_assert_eq!(self.windows.len() as u64, wid);
        self.windows
            .push(self.tracker.get(wid).expect("just opened").clone());
        self.decisions.push(DecisionRecord {
            wid,
            open_ts: e.ts,
            kind: self.cfg.scheduler.name(),
            instance: d.instance,
            advanced: d.advanced,
            predicted_lambda_o_max: d.prediction.as_ref().map(|p| p.lambda_o_max),
            observed_latency: d.observed_latency,
        });
        if let Some(prediction) = chosen_prediction {
            self.predictions.push(PredictionRecord {
                wid,
                instance: d.instance,
                prediction,
            });
        }
    }

    fn finish(mut self, n_events: u64, last_ts: u64) -> RunMetrics {
        // windows still open at the end keep their final member counts
        for w in self.tracker.open_windows() {
            self.windows[w.wid as usize] = w.clone();
        }
        let dropped_closes = self.tracker.dropped_closes();
        let records: Vec<Vec<ProcessedRecord>> = self
            .instances
            .into_iter()
            .map(InstanceState::into_records)
            .collect();
        let samples = merge_sorted_by(
            records
                .iter()
                .enumerate()
                .map(|(i, rs)| {
                    rs.iter()
                        .map(|r| {
                            crate::event::LatencySample::new(r.seq, i, r.ts, r.lambda_q, r.lambda_p)
                        })
                        .collect()
                })
                .collect(),
            |s: &crate::event::LatencySample| (s.event_seq, s.instance),
        );
        let outputs = merge(
            records
                .iter()
                .enumerate()
                .map(|(i, rs)| {
                    rs.iter()
                        .map(|r| OutputRecord {
                            seq: r.seq,
                            instance: i,
                            emitted_at: r.completion,
                        })
                        .collect()
                })
                .collect(),
        );
        RunMetrics {
            scheduler: self.cfg.scheduler.name(),
            parameter: self.cfg.scheduler.parameter(),
            n_instances: self.cfg.n_instances,
            n_events,
            routed_events: self.routed_events,
            transmissions: self.transmissions,
            dropped_closes,
            samples,
            outputs,
            instances: records,
            windows: self.windows,
            decisions: self.decisions,
            predictions: self.predictions,
            last_ts,
        }
    }
}

/// Runs the pipeline over an ordered event stream.
///
/// Configuration problems (including event types without a cost) are
/// reported before the simulation starts; the simulation itself cannot fail.
pub fn run(
    events: &[Event],
    rule: WindowRule,
    cost: &CostModel,
    cfg: &SimConfig,
) -> Result<RunMetrics> {
    cfg.validate()?;
    cost.validate("workload.cost")?;
    check_stream(events, cost)?;
    let mut sim = Simulation::new(rule, cost, cfg);
    for e in events {
        sim.on_event(e);
    }
    let last_ts = events.last().map_or(0, |e| e.ts);
    Ok(sim.finish(events.len() as u64, last_ts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventType;
    use crate::latency_model::AlphaMode;

    fn cfg(n: usize, scheduler: SchedulerKind) -> SimConfig {
        SimConfig {
            n_instances: n,
            mtime: 1_000.0,
            feedback_interval: None,
            feedback_delay: 0.0,
            transfer_delay: 0.0,
            model: ModelParams {
                alpha: AlphaMode::Fixed(0.0),
                ..ModelParams::default()
            },
            scheduler,
        }
    }

    fn time_rule(ws: u64) -> WindowRule {
        WindowRule::TimeScoped {
            open: EventType::new("Q"),
            ws,
        }
    }

    #[test]
    fn underload_steady_state() {
        // one long window, iat 10, cost 5
        let mut evs = vec![Event::new(0, 0, "Q")];
        evs.extend((1..50).map(|i| Event::new(i, i * 10, "A")));
        let cost = CostModel::flat([("Q", 5.0), ("A", 5.0)]);
        let m = run(
            &evs,
            time_rule(1_000_000),
            &cost,
            &cfg(1, SchedulerKind::RoundRobin),
        )
        .unwrap();
        assert_eq!(m.samples.len(), 50);
        for s in &m.samples {
            assert_eq!(s.lambda_q, 0.0);
            assert_eq!(s.lambda_o, 5.0);
        }
    }

    /// A zero-cost opener, the seven window events 5 TU apart, and a
    /// zero-cost trailer that closes the window.
    fn worked_example_stream(order: &[&'static str]) -> (Vec<Event>, CostModel) {
        let mut evs = vec![Event::new(0, 0, "Q")];
        for (i, t) in order.iter().enumerate() {
            evs.push(Event::new(i as u64 + 1, 5 * (i as u64 + 1), *t));
        }
        evs.push(Event::new(8, 40, "E"));
        let cost = CostModel::flat([
            ("Q", 0.0),
            ("A", 8.0),
            ("B", 7.0),
            ("C", 4.0),
            ("D", 2.0),
            ("E", 0.0),
        ]);
        (evs, cost)
    }

    fn peak_lambda_q(order: &[&'static str]) -> f64 {
        let (evs, cost) = worked_example_stream(order);
        let m = run(
            &evs,
            time_rule(40),
            &cost,
            &cfg(1, SchedulerKind::RoundRobin),
        )
        .unwrap();
        assert_eq!(m.windows[0].close_ts, Some(40));
        m.samples.iter().map(|s| s.lambda_q).fold(0.0, f64::max)
    }

    #[test]
    fn worked_example_worst_case_order() {
        assert_eq!(peak_lambda_q(&["A", "A", "B", "B", "C", "C", "D"]), 10.0);
    }

    #[test]
    fn worked_example_best_case_order() {
        assert_eq!(peak_lambda_q(&["A", "D", "A", "C", "B", "C", "B"]), 5.0);
    }

    #[test]
    fn lindley_identity_and_conservation() {
        let cost = CostModel::flat([("Q", 1.0), ("A", 3.0), ("B", 9.0)]);
        let mut evs = Vec::new();
        let mut ts = 0;
        for i in 0..400u64 {
            ts += (i * 7919) % 13;
            let t = match i % 7 {
                0 => "Q",
                1 | 4 => "B",
                _ => "A",
            };
            evs.push(Event::new(i, ts, t));
        }
        for sched in [
            SchedulerKind::RoundRobin,
            SchedulerKind::Reactive { threshold: 20.0 },
        ] {
            let m = run(&evs, time_rule(60), &cost, &cfg(3, sched)).unwrap();
            assert_eq!(
                m.processed_per_instance().iter().sum::<u64>(),
                m.transmissions
            );
            assert!(m.transmissions >= m.routed_events);
            for recs in &m.instances {
                for w in recs.windows(2) {
                    let iat = w[1].arrival - w[0].arrival;
                    let expect = (w[0].lambda_q + w[0].lambda_p - iat).max(0.0);
                    assert!((w[1].lambda_q - expect).abs() < 1e-9);
                }
            }
            for s in &m.samples {
                assert!(s.lambda_o >= s.lambda_p && s.lambda_p >= 0.0);
                assert_eq!(s.lambda_o, s.lambda_q + s.lambda_p);
            }
            assert!(m
                .samples
                .windows(2)
                .all(|w| (w[0].event_seq, w[0].instance) < (w[1].event_seq, w[1].instance)));
        }
    }

    #[test]
    fn batching_shares_transmissions() {
        // three fully overlapping windows; events after the openers belong to all three
        let mut evs: Vec<Event> = (0..3).map(|i| Event::new(i, i, "Q")).collect();
        evs.extend((3..20).map(|i| Event::new(i, i, "A")));
        let cost = CostModel::flat([("Q", 0.0), ("A", 0.1)]);
        let rr = run(
            &evs,
            time_rule(1_000),
            &cost,
            &cfg(3, SchedulerKind::RoundRobin),
        )
        .unwrap();
        let batched = run(
            &evs,
            time_rule(1_000),
            &cost,
            &cfg(
                3,
                SchedulerKind::ModelBased {
                    latency_bound: f64::INFINITY,
                },
            ),
        )
        .unwrap();
        let shared = 17;
        assert_eq!(batched.transmissions, 3 + shared);
        // opener i reaches instances 0..=i under round robin
        assert_eq!(rr.transmissions, 1 + 2 + 3 + 3 * shared);
    }

    #[test]
    fn unknown_type_rejected_before_run() {
        let evs = vec![Event::new(0, 0, "Q"), Event::new(1, 1, "Z")];
        let cost = CostModel::flat([("Q", 1.0)]);
        match run(
            &evs,
            time_rule(10),
            &cost,
            &cfg(1, SchedulerKind::RoundRobin),
        ) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "workload.cost.base.Z"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn feedback_delay_examples() {
        // growing cost: the λ_o peak comes at the end of the window
        let mut evs = vec![Event::new(0, 0, "L1").with_key(0)];
        for i in 1..40u64 {
            evs.push(
                Event::new(i, i * 10, if i % 2 == 0 { "L1" } else { "L2" }).with_key(1000 + i),
            );
        }
        evs.push(Event::new(40, 400, "L2").with_key(0));
        let cost = CostModel::equi_join(1.0, 1.0, 1.0);
        let rule = WindowRule::Keyed {
            open: "L1".into(),
            close: "L2".into(),
        };
        let m = run(
            &evs,
            rule,
            &cost,
            &cfg(
                1,
                SchedulerKind::ModelBased {
                    latency_bound: f64::INFINITY,
                },
            ),
        )
        .unwrap();
        let d = m.measure_feedback_delay(0).unwrap();
        assert_eq!(d.lambda_o_delay, 400.0);

        // a tiny window processed instantly
        let evs = vec![Event::new(0, 0, "Q"), Event::new(1, 1, "A")];
        let cost = CostModel::flat([("Q", 0.0), ("A", 0.0)]);
        let m = run(
            &evs,
            time_rule(1),
            &cost,
            &cfg(1, SchedulerKind::RoundRobin),
        )
        .unwrap();
        assert_eq!(m.measure_feedback_delay(0).unwrap().lambda_o_delay, 0.0);
        assert!(m.measure_feedback_delay(99).is_none());
    }

    #[test]
    fn feedback_delay_flat_cost_tracks_queue() {
        // oracle: replay the queue trace by hand
        let mut evs = vec![Event::new(0, 0, "Q")];
        let gaps = [1u64, 1, 1, 1, 30, 1, 1, 30];
        let mut ts = 0;
        for (i, g) in gaps.iter().enumerate() {
            ts += g;
            evs.push(Event::new(i as u64 + 1, ts, "A"));
        }
        let cost = CostModel::flat([("Q", 0.0), ("A", 5.0)]);
        let m = run(
            &evs,
            time_rule(1_000),
            &cost,
            &cfg(1, SchedulerKind::RoundRobin),
        )
        .unwrap();
        let mut busy: f64 = 0.0;
        let mut completions: Vec<f64> = Vec::new();
        let mut best = (0usize, 0u64, 0.0f64, 0u64);
        for e in &evs {
            let t = e.ts as f64;
            let qlen = completions.iter().filter(|&&c| c > t).count();
            let lp = if e.etype.as_str() == "Q" { 0.0 } else { 5.0 };
            let lq = (busy - t).max(0.0);
            busy = t.max(busy) + lp;
            completions.push(busy);
            if qlen > best.0 {
                best.0 = qlen;
                best.1 = e.ts;
            }
            if lq + lp > best.2 {
                best.2 = lq + lp;
                best.3 = e.ts;
            }
        }
        let d = m.measure_feedback_delay(0).unwrap();
        assert_eq!(d.peak_queue_len, best.0);
        assert_eq!(d.queue_delay, best.1 as f64);
        assert_eq!(d.peak_lambda_o, best.2);
        assert_eq!(d.lambda_o_delay, best.3 as f64);
    }

    #[test]
    fn deterministic() {
        let mut evs = Vec::new();
        for i in 0..300u64 {
            evs.push(Event::new(i, i * 3, if i % 5 == 0 { "Q" } else { "A" }));
        }
        let cost = CostModel::flat([("Q", 0.5), ("A", 2.0)]);
        let c = cfg(
            4,
            SchedulerKind::ModelBased {
                latency_bound: 40.0,
            },
        );
        assert_eq!(
            run(&evs, time_rule(100), &cost, &c).unwrap(),
            run(&evs, time_rule(100), &cost, &c).unwrap()
        );
    }
}

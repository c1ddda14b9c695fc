//! Window-scheduling controllers.
//!
//! All three controllers keep a cursor `x` on the instance that received the
//! previous window. A new window either stays on `x` (joins the batch) or
//! the cursor advances Round-Robin style and the window goes to the next
//! instance, which then becomes the batching target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{InstanceId, Millis};
use crate::latency_model::{self, BiasedModel, LatencyPrediction, ModelParams};
use crate::runtime::FeedbackReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchedulerKind {
    RoundRobin,
    /// Batch while the last reported operational latency of the current
    /// instance is below `threshold`.
    Reactive {
        threshold: Millis,
    },
    /// Batch while the predicted operational latency peak stays within
    /// `latency_bound`.
    ModelBased {
        latency_bound: Millis,
    },
}

impl SchedulerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::Reactive { .. } => "reactive",
            SchedulerKind::ModelBased { .. } => "model_based",
        }
    }

    /// TH or LB; zero for Round-Robin.
    pub fn parameter(&self) -> f64 {
        match *self {
            SchedulerKind::RoundRobin => 0.0,
            SchedulerKind::Reactive { threshold } => threshold,
            SchedulerKind::ModelBased { latency_bound } => latency_bound,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match *self {
            SchedulerKind::RoundRobin => Ok(()),
            SchedulerKind::Reactive { threshold } if threshold.is_nan() || threshold <= 0.0 => {
                Err(Error::config(format!("{field}.threshold"), "must be > 0"))
            }
            SchedulerKind::ModelBased { latency_bound }
                if latency_bound.is_nan() || latency_bound < 0.0 =>
            {
                Err(Error::config(
                    format!("{field}.latency_bound"),
                    "must be >= 0",
                ))
            }
            _ => Ok(()),
        }
    }
}

/// What the scheduler can see when a window opens.
pub struct SchedulingView<'a> {
    /// Latency model built from the latest statistics snapshot, if usable.
    pub model: Option<&'a BiasedModel>,
    /// Latest report delivered from each instance.
    pub reports: &'a [FeedbackReport],
    /// Open windows currently assigned to each instance.
    pub open_windows: &'a [usize],
    pub params: &'a ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub instance: InstanceId,
    /// The cursor moved to a new instance.
    pub advanced: bool,
    /// Model-based only: prediction for batching onto the previous instance.
    pub prediction: Option<LatencyPrediction>,
    /// Reactive only: latency the decision was based on.
    pub observed_latency: Option<Millis>,
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    kind: SchedulerKind,
    n_instances: usize,
    cursor: InstanceId,
    started: bool,
}

impl Scheduler {
    pub fn new(kind: SchedulerKind, n_instances: usize) -> Self {
        assert!(n_instances >= 1);
        Scheduler {
            kind,
            n_instances,
            cursor: 0,
            started: false,
        }
    }

    pub fn kind(&self) -> &SchedulerKind {
        &self.kind
    }

    pub fn cursor(&self) -> InstanceId {
        self.cursor
    }

    fn advance(&mut self) {
        self.cursor = (self.cursor + 1) % self.n_instances;
    }

    /// Chooses the instance for a newly opened window.
    pub fn schedule(&mut self, view: &SchedulingView<'_>) -> Decision {
        let first = !self.started;
        self.started = true;
        let x = self.cursor;
        let mut prediction = None;
        let mut observed_latency = None;

        let keep = match self.kind {
            SchedulerKind::RoundRobin => first,
            SchedulerKind::Reactive { threshold } => {
                let lo = view.reports.get(x).map_or(0.0, |r| r.last_lambda_o);
                observed_latency = Some(lo);
                lo < threshold
            }
            SchedulerKind::ModelBased { latency_bound } => match view.model {
                Some(model) => {
                    let p = latency_model::predict(
                        model,
                        &view.reports[x],
                        view.open_windows[x],
                        view.params,
                    );
                    let ok = p.lambda_o_max <= latency_bound;
                    prediction = Some(p);
                    ok
                }
                // no usable statistics yet: only an unbounded LB admits batching
                None => latency_bound == f64::INFINITY,
            },
        };
        if !keep {
            self.advance();
        }
        Decision {
            instance: self.cursor,
            advanced: !keep,
            prediction,
            observed_latency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventType;
    use crate::latency_model::AlphaMode;
    use crate::splitter::TCount;

    fn reports(n: usize) -> Vec<FeedbackReport> {
        (0..n).map(FeedbackReport::empty).collect()
    }

    /// One type with in-window latency `lp`, iat 5, scope `ws`.
    fn model(lp: f64, ws: f64) -> BiasedModel {
        BiasedModel {
            iat_bins: vec![(5.0, 1.0)],
            lat_bins: [(EventType::new("A"), vec![(lp, 1.0)])]
                .into_iter()
                .collect(),
            iat_mean: 5.0,
            iat_sigma: 0.0,
            iat_floored: false,
            type_ratio: [(EventType::new("A"), 1.0)].into_iter().collect(),
            ws,
            delta: 0.0,
            tcount: TCount::default(),
            stale: false,
        }
    }

    fn params() -> ModelParams {
        ModelParams {
            alpha: AlphaMode::Fixed(0.0),
            ..ModelParams::default()
        }
    }

    #[test]
    fn round_robin_cycles() {
        let mut s = Scheduler::new(SchedulerKind::RoundRobin, 8);
        let (r, o, p) = (reports(8), vec![0; 8], params());
        let view = SchedulingView {
            model: None,
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let got: Vec<usize> = (0..10).map(|_| s.schedule(&view).instance).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 5, 6, 7, 0, 1]);
    }

    #[test]
    fn model_based_keeps_within_bound() {
        // iat 5, lp 4, ws 5 -> n = 1, gains 0, λ_o^max = 4
        let m = model(4.0, 5.0);
        let (r, o, p) = (reports(8), vec![0; 8], params());
        let view = SchedulingView {
            model: Some(&m),
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let mut s = Scheduler::new(SchedulerKind::ModelBased { latency_bound: 5.0 }, 8);
        let d = s.schedule(&view);
        assert_eq!(d.prediction.as_ref().unwrap().lambda_o_max, 4.0);
        assert_eq!(d.instance, 0);
        assert_eq!(s.schedule(&view).instance, 0);
    }

    #[test]
    fn model_based_advances_with_wraparound() {
        // lp 6 > LB 5
        let m = model(6.0, 5.0);
        let (r, o, p) = (reports(8), vec![0; 8], params());
        let view = SchedulingView {
            model: Some(&m),
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let mut s = Scheduler::new(SchedulerKind::ModelBased { latency_bound: 5.0 }, 8);
        s.cursor = 7;
        s.started = true;
        let d = s.schedule(&view);
        assert!(d.prediction.unwrap().lambda_o_max > 5.0);
        assert_eq!(d.instance, 0);
        assert!(d.advanced);
    }

    #[test]
    fn zero_bound_is_round_robin() {
        let m = model(0.5, 50.0);
        let (r, o, p) = (reports(3), vec![0; 3], params());
        let view = SchedulingView {
            model: Some(&m),
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let mut s = Scheduler::new(SchedulerKind::ModelBased { latency_bound: 0.0 }, 3);
        let got: Vec<usize> = (0..5).map(|_| s.schedule(&view).instance).collect();
        assert_eq!(got, vec![1, 2, 0, 1, 2]);
    }

    #[test]
    fn infinite_bound_never_advances() {
        let m = model(1e6, 50.0);
        let (r, p) = (reports(4), params());
        let mut s = Scheduler::new(
            SchedulerKind::ModelBased {
                latency_bound: f64::INFINITY,
            },
            4,
        );
        for k in 0..20 {
            let o = vec![k, 0, 0, 0];
            let with = SchedulingView {
                model: Some(&m),
                reports: &r,
                open_windows: &o,
                params: &p,
            };
            assert_eq!(s.schedule(&with).instance, 0);
            let without = SchedulingView {
                model: None,
                ..with
            };
            assert_eq!(s.schedule(&without).instance, 0);
        }
    }

    #[test]
    fn reactive_threshold() {
        let mut r = reports(2);
        let (o, p) = (vec![0; 2], params());
        let mut s = Scheduler::new(SchedulerKind::Reactive { threshold: 10.0 }, 2);
        r[0].last_lambda_o = 9.0;
        let view = SchedulingView {
            model: None,
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let d = s.schedule(&view);
        assert_eq!((d.instance, d.observed_latency), (0, Some(9.0)));
        r[0].last_lambda_o = 10.0;
        let view = SchedulingView {
            model: None,
            reports: &r,
            open_windows: &o,
            params: &p,
        };
        let d = s.schedule(&view);
        assert_eq!(d.instance, 1);
        // instance 1 is now the target
        assert_eq!(s.schedule(&view).instance, 1);
    }

    #[test]
    fn decisions_are_deterministic() {
        let m = model(3.0, 40.0);
        let p = params();
        let run = || {
            let r = reports(4);
            let mut s = Scheduler::new(
                SchedulerKind::ModelBased {
                    latency_bound: 30.0,
                },
                4,
            );
            let mut out = Vec::new();
            for k in 0..12 {
                let o: Vec<usize> = (0..4).map(|i| (k * (i + 1)) % 5).collect();
                let view = SchedulingView {
                    model: Some(&m),
                    reports: &r,
                    open_windows: &o,
                    params: &p,
                };
                out.push(s.schedule(&view));
            }
            out
        };
        assert_eq!(run(), run());
    }
}

//! Fixtures shared by the benchmarks.

use batchsim_core::experiment::timing;
use batchsim_core::latency_model::BiasedModel;
use batchsim_core::scheduler::{Decision, SchedulingView};
use batchsim_core::{EventType, FeedbackReport, ModelParams, Scheduler, SchedulerKind};

/// A model-based scheduler with a populated model and non-empty queue reports.
pub struct DecisionFixture {
    model: BiasedModel,
    params: ModelParams,
    reports: Vec<FeedbackReport>,
    open: Vec<usize>,
    scheduler: Scheduler,
}

impl DecisionFixture {
    pub fn new(n_bins: usize, n_instances: usize) -> Self {
        let params = ModelParams {
            n_iat_bins: n_bins,
            n_lat_bins: n_bins,
            ..ModelParams::default()
        };
        let snap = timing::synthetic_snapshot(n_bins, 7);
        let model =
            BiasedModel::from_snapshot(&snap, &params).expect("synthetic snapshot is usable");
        let reports = (0..n_instances)
            .map(|i| {
                let mut r = FeedbackReport::empty(i);
                for (k, t) in ["A", "B", "C", "D"].iter().enumerate() {
                    r.queued_counts
                        .insert(EventType::new(t), (i + k) as u64 * 3);
                }
                r.theta_bar_rep = 1.5;
                r
            })
            .collect();
        DecisionFixture {
            model,
            params,
            reports,
            open: (0..n_instances).map(|i| i % 3).collect(),
            scheduler: Scheduler::new(
                SchedulerKind::ModelBased { latency_bound: 1e9 },
                n_instances,
            ),
        }
    }

    pub fn decide(&mut self) -> Decision {
        let view = SchedulingView {
            model: Some(&self.model),
            reports: &self.reports,
            open_windows: &self.open,
            params: &self.params,
        };
        self.scheduler.schedule(&view)
    }
}

//! Wall-clock measurements of the controller's decision cost and of the
//! statistics update cost.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event::{Event, EventType};
use crate::latency_model::{BiasedModel, ModelParams};
use crate::runtime::FeedbackReport;
use crate::scheduler::{Scheduler, SchedulerKind, SchedulingView};
use crate::splitter::{StatsConfig, StatsSnapshot, StreamStats};

const TYPES: [&str; 4] = ["A", "B", "C", "D"];

/// Feeds `n` synthetic events with latencies into fresh statistics and
/// returns the state right before the monitoring window is frozen.
pub fn synthetic_stats(n: usize, n_bins: usize, seed: u64) -> StreamStats {
    let mut stats = StreamStats::new(StatsConfig {
        n_iat_bins: n_bins,
        n_lat_bins: n_bins,
        mtime: 1.0,
    });
    feed(&mut stats, n, seed, 0);
    stats
}

/// Pushes `n` events numbered from `seq0`; returns the next free seq.
fn feed(stats: &mut StreamStats, n: usize, seed: u64, seq0: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types: Vec<EventType> = TYPES.iter().map(|t| EventType::new(t)).collect();
    // 200 ms is the largest gap, so this keeps time increasing across calls
    let mut ts = seq0 * 200;
    for seq in seq0..seq0 + n as u64 {
        ts += rng.gen_range(1..200);
        let t = &types[rng.gen_range(0..types.len())];
        let e = Event::new(seq, ts, t.clone());
        stats.observe_event(&e);
        if seq % 16 == 0 {
            stats.observe_window_open(ts);
            stats.observe_window_close(10_000.0);
        }
        stats.observe_latency(t, rng.gen_range(0.1..40.0));
    }
    seq0 + n as u64
}

/// A snapshot with `n_bins` populated bins per distribution.
pub fn synthetic_snapshot(n_bins: usize, seed: u64) -> StatsSnapshot {
    let mut stats = synthetic_stats(0, n_bins, seed);
    // first window sets the bin ranges, second fills them
    let next = feed(&mut stats, 20_000, seed, 0);
    stats.end_monitoring_window(1.0);
    feed(&mut stats, 20_000, seed + 1, next);
    (*stats.end_monitoring_window(2.0)).clone()
}

/// Per-call durations of `reps` model-based scheduling decisions with
/// `n_bins` bins, `n_instances` instances and non-trivial queues.
pub fn scheduling_latencies(n_bins: usize, n_instances: usize, reps: usize) -> Vec<Duration> {
    let params = ModelParams {
        n_iat_bins: n_bins,
        n_lat_bins: n_bins,
        ..ModelParams::default()
    };
    let snap = synthetic_snapshot(n_bins, 7);
    let model = BiasedModel::from_snapshot(&snap, &params).expect("synthetic snapshot is usable");
    let reports: Vec<FeedbackReport> = (0..n_instances)
        .map(|i| {
            let mut r = FeedbackReport::empty(i);
            for (k, t) in TYPES.iter().enumerate() {
                r.queued_counts
                    .insert(EventType::new(t), (i + k) as u64 * 3);
            }
            r.theta_bar_rep = 1.5;
            r
        })
        .collect();
    let open: Vec<usize> = (0..n_instances).map(|i| i % 3).collect();
    let mut sched = Scheduler::new(
        SchedulerKind::ModelBased { latency_bound: 1e9 },
        n_instances,
    );
    let view = SchedulingView {
        model: Some(&model),
        reports: &reports,
        open_windows: &open,
        params: &params,
    };
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(sched.schedule(std::hint::black_box(&view)));
            t.elapsed()
        })
        .collect()
}

pub fn median(mut v: Vec<Duration>) -> Duration {
    assert!(!v.is_empty());
    v.sort();
    v[v.len() / 2]
}

/// Time to push `n` entries through the statistics and freeze them.
/// The minimum over `reps` repetitions is returned.
pub fn monitoring_update_time(n: usize, n_bins: usize, reps: usize) -> Duration {
    (0..reps.max(1))
        .map(|r| {
            let mut stats = synthetic_stats(0, n_bins, 11);
            let t = Instant::now();
            feed(&mut stats, n, 100 + r as u64, 0);
            std::hint::black_box(stats.end_monitoring_window(1.0));
            t.elapsed()
        })
        .min()
        .expect("at least one repetition")
}

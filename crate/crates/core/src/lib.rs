//! Window-based data-parallel complex event processing, simulated.
//!
//! The crate models a splitter that cuts an event stream into (possibly
//! overlapping) windows and assigns each window to one of several operator
//! instances, and compares three assignment controllers: Round-Robin, a
//! latency-reactive batcher, and a model-based batcher that predicts the
//! operational latency peak of a candidate batch before committing to it.

pub mod error;
pub mod event;
pub mod experiment;
pub mod latency_model;
pub mod runtime;
pub mod scheduler;
pub mod splitter;
pub mod workload;

pub use error::{Error, Result};
pub use event::{
    compare_events, Event, EventType, InstanceId, LatencySample, Millis, SimClock,
    WindowDescriptor, WindowId,
};
pub use latency_model::{AlphaMode, LatencyPrediction, ModelParams};
pub use runtime::{run, FeedbackReport, RunMetrics, SimConfig};
pub use scheduler::{Scheduler, SchedulerKind};
pub use splitter::{StatsSnapshot, StreamStats, WindowRule};
pub use workload::{
    generate_stream, CostKind, CostModel, GapKind, IatProfile, Scenario, WorkloadConfig,
};

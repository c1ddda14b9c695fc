//! Splitter: window detection, routing and stream monitoring.

mod stats;
mod windows;

pub use stats::{
    tcount_groups, Bin, BinSet, BinSummary, BinnedAccumulator, BinnedSummary, CostGroup,
    StatsConfig, StatsSnapshot, StreamStats, TCount, Welford,
};
pub use windows::{route_event, Detection, WindowRule, WindowTracker};

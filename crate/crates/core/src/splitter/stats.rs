//! Monitoring statistics kept by the splitter over a tumbling window of
//! `mtime` milliseconds: binned inter-arrival times, binned per-type
//! in-window latencies, type ratios, window scope and shift, and the
//! T-COUNT interleaving counters.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::event::{Event, EventType, Millis};

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation; zero for fewer than two entries.
    pub fn sigma(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    acc: Welford,
}

impl Bin {
    fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo < hi);
        Bin {
            lo,
            hi,
            acc: Welford::default(),
        }
    }

    pub fn count(&self) -> u64 {
        self.acc.count()
    }

    pub fn mean(&self) -> f64 {
        self.acc.mean()
    }

    pub fn sigma(&self) -> f64 {
        self.acc.sigma()
    }
}

/// Equal-width bins over `[lo, hi]`. Values outside the range land in the
/// edge bins, which widen to keep their mean inside their bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSet {
    bins: Vec<Bin>,
    lo: f64,
    width: f64,
}

impl BinSet {
    pub fn equal_width(lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(1);
        // a degenerate range still needs lo < hi per bin
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let width = (hi - lo) / n as f64;
        let bins = (0..n)
            .map(|i| {
                let b_lo = lo + width * i as f64;
                let b_hi = if i + 1 == n {
                    hi
                } else {
                    lo + width * (i + 1) as f64
                };
                Bin::new(b_lo, b_hi)
            })
            .collect();
        BinSet { bins, lo, width }
    }

    pub fn push(&mut self, v: f64) {
        let n = self.bins.len();
        let idx = if v <= self.lo {
            0
        } else {
            (((v - self.lo) / self.width) as usize).min(n - 1)
        };
        let bin = &mut self.bins[idx];
        if v < bin.lo {
            bin.lo = v;
        }
        if v > bin.hi {
            bin.hi = v;
        }
        bin.acc.push(v);
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSummary {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub mean: f64,
    pub sigma: f64,
    /// Share of all entries of this distribution that fell into the bin.
    pub weight: f64,
}

/// Frozen binned distribution. Empty bins are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSummary {
    pub bins: Vec<BinSummary>,
    pub count: u64,
    pub mean: f64,
    /// Population standard deviation over all entries.
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

impl BinnedSummary {
    fn from_bins(set: &BinSet, pop: &Welford, min: f64, max: f64) -> Self {
        let total: u64 = set.bins().iter().map(Bin::count).sum();
        let bins = set
            .bins()
            .iter()
            .filter(|b| b.count() > 0)
            .map(|b| BinSummary {
                lo: b.lo,
                hi: b.hi,
                count: b.count(),
                mean: b.mean(),
                sigma: b.sigma(),
                weight: b.count() as f64 / total as f64,
            })
            .collect();
        BinnedSummary {
            bins,
            count: total,
            mean: pop.mean(),
            sigma: pop.sigma(),
            min,
            max,
        }
    }
}

/// Streams values into bins whose range comes from the previous monitoring
/// window. The very first window has no previous range, so its values are
/// buffered and binned over their own range at freeze time.
#[derive(Debug, Clone)]
pub struct BinnedAccumulator {
    n_bins: usize,
    live: Option<BinSet>,
    buffer: Vec<f64>,
    pop: Welford,
    min: f64,
    max: f64,
}

impl BinnedAccumulator {
    pub fn new(n_bins: usize) -> Self {
        BinnedAccumulator {
            n_bins: n_bins.max(1),
            live: None,
            buffer: Vec::new(),
            pop: Welford::default(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, v: f64) {
        self.pop.push(v);
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        match &mut self.live {
            Some(set) => set.push(v),
            None => self.buffer.push(v),
        }
    }

    pub fn count(&self) -> u64 {
        self.pop.count()
    }

    /// Freezes the current window and resets for the next one, whose bins
    /// span this window's `[min, max]`. Returns `None` if nothing was pushed.
    pub fn freeze(&mut self) -> Option<BinnedSummary> {
        if self.pop.count() == 0 {
            return None;
        }
        let set = match self.live.take() {
            Some(set) => set,
            None => {
                let mut set = BinSet::equal_width(self.min, self.max, self.n_bins);
                for &v in &self.buffer {
                    set.push(v);
                }
                self.buffer = Vec::new();
                set
            }
        };
        let summary = BinnedSummary::from_bins(&set, &self.pop, self.min, self.max);
        self.live = Some(BinSet::equal_width(self.min, self.max, self.n_bins));
        self.pop = Welford::default();
        self.min = f64::INFINITY;
        self.max = f64::NEG_INFINITY;
        Some(summary)
    }
}

/// T-COUNT group of an event type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostGroup {
    /// Higher in-window latency: events tend to grow the queue.
    Minus,
    /// Lower in-window latency.
    Plus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TCount {
    pub c_minus: u64,
    pub c_plus: u64,
    /// Number of transitions between the groups, at least 1 once any event
    /// has been counted.
    pub c_trans: u64,
}

#[derive(Debug, Clone, Default)]
struct TCountAcc {
    c_minus: u64,
    c_plus: u64,
    changes: u64,
    last: Option<CostGroup>,
}

impl TCountAcc {
    fn push(&mut self, g: CostGroup) {
        match g {
            CostGroup::Minus => self.c_minus += 1,
            CostGroup::Plus => self.c_plus += 1,
        }
        if self.last.is_some_and(|l| l != g) {
            self.changes += 1;
        }
        self.last = Some(g);
    }

    fn snapshot(&self) -> TCount {
        let any = self.c_minus + self.c_plus > 0;
        TCount {
            c_minus: self.c_minus,
            c_plus: self.c_plus,
            c_trans: if any { self.changes.max(1) } else { 0 },
        }
    }
}

/// Splits event types into T⁻ (upper half by mean in-window latency) and T⁺.
/// With an odd number of types the median goes to T⁻; types tied with the
/// last T⁻ member join T⁻ as well.
pub fn tcount_groups(type_means: &BTreeMap<EventType, f64>) -> BTreeSet<EventType> {
    let mut sorted: Vec<(&EventType, f64)> = type_means.iter().map(|(t, &m)| (t, m)).collect();
    if sorted.is_empty() {
        return BTreeSet::new();
    }
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let half = sorted.len().div_ceil(2);
    let cutoff = sorted[half - 1].1;
    sorted
        .into_iter()
        .take_while(|&(_, m)| m >= cutoff)
        .map(|(t, _)| t.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsConfig {
    pub n_iat_bins: usize,
    pub n_lat_bins: usize,
    pub mtime: Millis,
}

/// Immutable result of one monitoring window.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsSnapshot {
    pub iat: Option<BinnedSummary>,
    pub lat: BTreeMap<EventType, BinnedSummary>,
    pub type_ratio: BTreeMap<EventType, f64>,
    pub ws_est: Option<Millis>,
    pub delta_est: Option<Millis>,
    pub tcount: TCount,
    pub n_events: u64,
    pub frozen_at: Millis,
    /// Set when the window saw no events and this is a carried-over copy.
    pub stale: bool,
}

impl StatsSnapshot {
    pub fn empty(frozen_at: Millis) -> Self {
        StatsSnapshot {
            iat: None,
            lat: BTreeMap::new(),
            type_ratio: BTreeMap::new(),
            ws_est: None,
            delta_est: None,
            tcount: TCount::default(),
            n_events: 0,
            frozen_at,
            stale: true,
        }
    }

    /// Mean in-window latency per type over all of that type's entries.
    pub fn type_means(&self) -> BTreeMap<EventType, f64> {
        self.lat.iter().map(|(t, s)| (t.clone(), s.mean)).collect()
    }

    /// True when the latency model has everything it needs.
    pub fn is_usable(&self) -> bool {
        self.iat.is_some() && !self.lat.is_empty() && self.ws_est.is_some_and(|w| w > 0.0)
    }
}

/// Live monitoring state. Single writer; snapshots are shared via `Arc`.
#[derive(Debug, Clone)]
pub struct StreamStats {
    cfg: StatsConfig,
    iat: BinnedAccumulator,
    lat: BTreeMap<EventType, BinnedAccumulator>,
    type_counts: BTreeMap<EventType, u64>,
    n_events: u64,
    scope: Welford,
    shift: Welford,
    last_open_ts: Option<u64>,
    tcount: TCountAcc,
    minus_types: BTreeSet<EventType>,
    prev_ts: Option<u64>,
    last: Option<Arc<StatsSnapshot>>,
}

impl StreamStats {
    pub fn new(cfg: StatsConfig) -> Self {
        StreamStats {
            cfg,
            iat: BinnedAccumulator::new(cfg.n_iat_bins),
            lat: BTreeMap::new(),
            type_counts: BTreeMap::new(),
            n_events: 0,
            scope: Welford::default(),
            shift: Welford::default(),
            last_open_ts: None,
            tcount: TCountAcc::default(),
            minus_types: BTreeSet::new(),
            prev_ts: None,
            last: None,
        }
    }

    pub fn config(&self) -> &StatsConfig {
        &self.cfg
    }

    pub fn group_of(&self, etype: &EventType) -> CostGroup {
        if self.minus_types.contains(etype) {
            CostGroup::Minus
        } else {
            CostGroup::Plus
        }
    }

    /// Records an arriving event: its inter-arrival time, its type and its
    /// T-COUNT group.
    pub fn observe_event(&mut self, e: &Event) {
        if let Some(prev) = self.prev_ts {
            debug_assert!(e.ts >= prev, "events must arrive in order");
            self.iat.push(e.ts.saturating_sub(prev) as f64);
        }
        self.prev_ts = Some(e.ts);
        *self.type_counts.entry(e.etype.clone()).or_insert(0) += 1;
        self.n_events += 1;
        let g = self.group_of(&e.etype);
        self.tcount.push(g);
    }

    pub fn observe_window_open(&mut self, open_ts: u64) {
        if let Some(prev) = self.last_open_ts {
            self.shift.push(open_ts.saturating_sub(prev) as f64);
        }
        self.last_open_ts = Some(open_ts);
    }

    pub fn observe_window_close(&mut self, scope: Millis) {
        self.scope.push(scope);
    }

    /// An in-window processing latency reported by an instance.
    pub fn observe_latency(&mut self, etype: &EventType, lambda_pw: Millis) {
        let n = self.cfg.n_lat_bins;
        self.lat
            .entry(etype.clone())
            .or_insert_with(|| BinnedAccumulator::new(n))
            .push(lambda_pw);
    }

    pub fn last_snapshot(&self) -> Option<&Arc<StatsSnapshot>> {
        self.last.as_ref()
    }

    /// Closes the monitoring window. Components without fresh measurements
    /// carry over from the previous snapshot; a window without any events
    /// returns the previous snapshot marked stale.
    pub fn end_monitoring_window(&mut self, now: Millis) -> Arc<StatsSnapshot> {
        if self.n_events == 0 {
            let mut snap = self
                .last
                .as_deref()
                .cloned()
                .unwrap_or_else(|| StatsSnapshot::empty(now));
            snap.stale = true;
            // latency reports may still have arrived for an idle stream
            self.absorb_latency(&mut snap);
            let snap = Arc::new(snap);
            self.last = Some(snap.clone());
            return snap;
        }

        let prev = self.last.as_deref();
        let iat = self
            .iat
            .freeze()
            .or_else(|| prev.and_then(|p| p.iat.clone()));
        let mut lat = prev.map(|p| p.lat.clone()).unwrap_or_default();
        for (t, acc) in self.lat.iter_mut() {
            if let Some(s) = acc.freeze() {
                lat.insert(t.clone(), s);
            }
        }
        let total = self.n_events as f64;
        let type_ratio = self
            .type_counts
            .iter()
            .map(|(t, &c)| (t.clone(), c as f64 / total))
            .collect();
        let ws_est = if self.scope.count() > 0 {
            Some(self.scope.mean())
        } else {
            prev.and_then(|p| p.ws_est)
        };
        let delta_est = if self.shift.count() > 0 {
            Some(self.shift.mean())
        } else {
            prev.and_then(|p| p.delta_est)
        };
        let snap = StatsSnapshot {
            iat,
            lat,
            type_ratio,
            ws_est,
            delta_est,
            tcount: self.tcount.snapshot(),
            n_events: self.n_events,
            frozen_at: now,
            stale: false,
        };

        self.type_counts.clear();
        self.n_events = 0;
        self.scope = Welford::default();
        self.shift = Welford::default();
        self.tcount = TCountAcc::default();
        self.minus_types = tcount_groups(&snap.type_means());

        let snap = Arc::new(snap);
        self.last = Some(snap.clone());
        snap
    }

    fn absorb_latency(&mut self, snap: &mut StatsSnapshot) {
        for (t, acc) in self.lat.iter_mut() {
            if let Some(s) = acc.freeze() {
                snap.lat.insert(t.clone(), s);
            }
        }
    }
}

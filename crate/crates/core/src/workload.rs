//! Synthetic workloads and per-window operator cost models.
//!
//! Two operators are modelled after typical CEP queries:
//!
//! * **traffic**: an equi-join over two sensor streams. Each vehicle emits an
//!   `L1` event when it passes the first sensor and an `L2` event (same key)
//!   at the second; the window opened by `L1` closes at the matching `L2`.
//!   Processing an `L2` compares it to every `L1` already seen in the window,
//!   so its cost grows with its position.
//! * **face**: `query` events open time-scoped windows; bursty `face` events
//!   inside them are matched at a flat, position-independent cost.
//!
//! A third `custom` scenario draws types from a configured mix and opens
//! time-scoped windows on a configured opener type.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventType, Millis};

pub const TRAFFIC_BUILD: &str = "L1";
pub const TRAFFIC_PROBE: &str = "L2";
pub const FACE_QUERY: &str = "query";
pub const FACE_EVENT: &str = "face";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Traffic,
    Face,
    Custom,
}

/// Inter-arrival time process of the primary event source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IatProfile {
    Constant {
        mean: Millis,
    },
    Exponential {
        mean: Millis,
    },
    /// Exponential gaps whose mean follows a cosine between `mean_min` and
    /// `mean_max`, starting at `mean_max`.
    SinusoidalExponential {
        mean_min: Millis,
        mean_max: Millis,
        period: Millis,
    },
    /// `burst_size` events `intra_gap` apart; bursts separated by gaps with
    /// mean `inter_gap`, exponential unless `inter_kind` says otherwise.
    Burst {
        burst_size: u32,
        intra_gap: Millis,
        inter_gap: Millis,
        #[serde(default)]
        inter_kind: GapKind,
    },
}

/// Distribution of a gap with a given mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    #[default]
    Exponential,
    Constant,
}

impl GapKind {
    fn sample(self, mean: Millis, rng: &mut ChaCha8Rng) -> Millis {
        match self {
            GapKind::Exponential => exp_sample(mean, rng),
            GapKind::Constant => mean,
        }
    }
}

impl IatProfile {
    fn validate(&self, field: &str) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("{field}.{name}"),
                    format!("must be > 0, got {v}"),
                ))
            }
        };
        match *self {
            IatProfile::Constant { mean } | IatProfile::Exponential { mean } => {
                positive("mean", mean)
            }
            IatProfile::SinusoidalExponential {
                mean_min,
                mean_max,
                period,
            } => {
                positive("mean_min", mean_min)?;
                positive("mean_max", mean_max)?;
                positive("period", period)?;
                if mean_min > mean_max {
                    return Err(Error::config(
                        format!("{field}.mean_min"),
                        "must not exceed mean_max",
                    ));
                }
                Ok(())
            }
            IatProfile::Burst {
                burst_size,
                intra_gap,
                inter_gap,
                ..
            } => {
                if burst_size == 0 {
                    return Err(Error::config(format!("{field}.burst_size"), "must be >= 1"));
                }
                positive("intra_gap", intra_gap)?;
                positive("inter_gap", inter_gap)
            }
        }
    }
}

/// Gap sampler driven by the simulated time of the previous arrival.
struct GapSampler {
    profile: IatProfile,
    in_burst: u32,
}

impl GapSampler {
    fn new(profile: IatProfile) -> Self {
        GapSampler {
            profile,
            in_burst: 0,
        }
    }

    fn next_gap(&mut self, now: Millis, rng: &mut ChaCha8Rng) -> Millis {
        match self.profile {
            IatProfile::Constant { mean } => mean,
            IatProfile::Exponential { mean } => exp_sample(mean, rng),
            IatProfile::SinusoidalExponential {
                mean_min,
                mean_max,
                period,
            } => {
                let mid = 0.5 * (mean_min + mean_max);
                let amp = 0.5 * (mean_max - mean_min);
                exp_sample(mid + amp * (2.0 * PI * now / period).cos(), rng)
            }
            IatProfile::Burst {
                burst_size,
                intra_gap,
                inter_gap,
                inter_kind,
            } => {
                self.in_burst += 1;
                if self.in_burst < burst_size {
                    intra_gap
                } else {
                    self.in_burst = 0;
                    inter_kind.sample(inter_gap, rng)
                }
            }
        }
    }
}

fn exp_sample(mean: Millis, rng: &mut ChaCha8Rng) -> Millis {
    Exp::new(1.0 / mean)
        .expect("validated positive mean")
        .sample(rng)
}

/// Window-scope parameters. Which fields matter depends on the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScopeProfile {
    /// Traffic: vehicle travel time is uniform in `[ws_min, ws_max]`.
    pub ws_min: Millis,
    pub ws_max: Millis,
    /// Face / custom: fixed time-based window scope.
    pub ws: Millis,
    /// Face: mean inter-arrival time of `query` events.
    pub query_mean_iat: Millis,
    pub query_kind: GapKind,
    /// Custom: event type that opens a window.
    pub open_type: String,
}

impl Default for ScopeProfile {
    fn default() -> Self {
        ScopeProfile {
            ws_min: 20_000.0,
            ws_max: 40_000.0,
            ws: 10_000.0,
            query_mean_iat: 2_000.0,
            query_kind: GapKind::Exponential,
            open_type: FACE_QUERY.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `cost(build) = base(build)`; `cost(probe) = base(probe) + incr * #build seen`.
    EquiJoin,
    /// `cost = base(etype)`, independent of position.
    FlatPerType,
    /// `cost = cost_hint` when the event carries one, else `base(etype)`.
    CustomTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub kind: CostKind,
    /// Base in-window cost per event type (ms).
    pub base: BTreeMap<EventType, Millis>,
    /// Per-seen-build-event increment for probe events (ms).
    #[serde(default)]
    pub incr: Millis,
    #[serde(default = "default_build")]
    pub build_type: EventType,
    #[serde(default = "default_probe")]
    pub probe_type: EventType,
}

fn default_build() -> EventType {
    EventType::new(TRAFFIC_BUILD)
}

fn default_probe() -> EventType {
    EventType::new(TRAFFIC_PROBE)
}

/// Per-window accumulated state: member counts per type, excluding the event
/// currently being processed.
pub type WindowState = BTreeMap<EventType, u64>;

impl CostModel {
    pub fn flat(base: impl IntoIterator<Item = (&'static str, Millis)>) -> Self {
        CostModel {
            kind: CostKind::FlatPerType,
            base: base
                .into_iter()
                .map(|(t, c)| (EventType::new(t), c))
                .collect(),
            incr: 0.0,
            build_type: default_build(),
            probe_type: default_probe(),
        }
    }

    pub fn equi_join(base_build: Millis, base_probe: Millis, incr: Millis) -> Self {
        let mut base = BTreeMap::new();
        base.insert(default_build(), base_build);
        base.insert(default_probe(), base_probe);
        CostModel {
            kind: CostKind::EquiJoin,
            base,
            incr,
            build_type: default_build(),
            probe_type: default_probe(),
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if self.base.is_empty() {
            return Err(Error::config(
                format!("{field}.base"),
                "needs at least one event type",
            ));
        }
        for (t, &c) in &self.base {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::config(
                    format!("{field}.base.{t}"),
                    format!("cost must be >= 0, got {c}"),
                ));
            }
        }
        if !(self.incr.is_finite() && self.incr >= 0.0) {
            return Err(Error::config(format!("{field}.incr"), "must be >= 0"));
        }
        if self.kind == CostKind::EquiJoin {
            for t in [&self.build_type, &self.probe_type] {
                if !self.base.contains_key(t) {
                    return Err(Error::config(
                        format!("{field}.base.{t}"),
                        "equi_join needs a base cost for this type",
                    ));
                }
            }
        }
        Ok(())
    }

    fn base_of(&self, etype: &EventType) -> Result<Millis> {
        self.base
            .get(etype)
            .copied()
            .ok_or_else(|| Error::UnknownEventType(etype.to_string()))
    }

    /// In-window processing latency of `e` given the state of one window it
    /// belongs to.
    pub fn in_window_cost(&self, e: &Event, window: &WindowState) -> Result<Millis> {
        match self.kind {
            CostKind::FlatPerType => self.base_of(&e.etype),
            CostKind::EquiJoin => {
                let base = self.base_of(&e.etype)?;
                if e.etype == self.probe_type {
                    let seen = window.get(&self.build_type).copied().unwrap_or(0);
                    Ok(base + self.incr * seen as f64)
                } else {
                    Ok(base)
                }
            }
            CostKind::CustomTable => match e.cost_hint {
                Some(h) => Ok(h.max(0.0)),
                None => self.base_of(&e.etype),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    /// Length of the generated stream in simulated ms.
    pub duration: Millis,
    pub iat: IatProfile,
    /// Type probabilities; used by the `custom` scenario.
    #[serde(default)]
    pub type_mix: BTreeMap<EventType, f64>,
    #[serde(default)]
    pub scope: ScopeProfile,
    pub cost: CostModel,
    /// Sigma of the mean-one lognormal multiplier applied to `custom_table`
    /// base costs. Zero disables jitter.
    #[serde(default)]
    pub jitter_sigma: f64,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("workload.duration", "must be > 0"));
        }
        self.iat.validate("workload.iat")?;
        self.cost.validate("workload.cost")?;
        if !self.type_mix.is_empty() {
            let mut sum = 0.0;
            for (t, &p) in &self.type_mix {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(
                        format!("workload.type_mix.{t}"),
                        "probability must lie in [0, 1]",
                    ));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "workload.type_mix",
                    format!("probabilities sum to {sum}, expected 1"),
                ));
            }
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::config("workload.jitter_sigma", "must be >= 0"));
        }
        let s = &self.scope;
        match self.scenario {
            Scenario::Traffic => {
                if !(s.ws_min > 0.0 && s.ws_min.is_finite()) {
                    return Err(Error::config("workload.scope.ws_min", "must be > 0"));
                }
                if !(s.ws_max >= s.ws_min && s.ws_max.is_finite()) {
                    return Err(Error::config("workload.scope.ws_max", "must be >= ws_min"));
                }
            }
            Scenario::Face | Scenario::Custom => {
                if !(s.ws > 0.0 && s.ws.is_finite()) {
                    return Err(Error::config("workload.scope.ws", "must be > 0"));
                }
                if self.scenario == Scenario::Face
                    && !(s.query_mean_iat > 0.0 && s.query_mean_iat.is_finite())
                {
                    return Err(Error::config(
                        "workload.scope.query_mean_iat",
                        "must be > 0",
                    ));
                }
                if self.scenario == Scenario::Custom {
                    if self.type_mix.is_empty() {
                        return Err(Error::config(
                            "workload.type_mix",
                            "custom scenario needs a type mix",
                        ));
                    }
                    if s.open_type.is_empty() {
                        return Err(Error::config(
                            "workload.scope.open_type",
                            "must name an event type",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Arrival {
    t: Millis,
    etype: EventType,
    key: Option<u64>,
}

/// Generates the ordered inbound stream for `cfg`.
///
/// The result is a pure function of the config (including its seed):
/// timestamps are rounded to whole milliseconds, events are sorted by
/// timestamp (generation order breaks ties) and sequence numbers follow that
/// order.
pub fn generate_stream(cfg: &WorkloadConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gaps = GapSampler::new(cfg.iat.clone());
    let mut arrivals = Vec::new();

    match cfg.scenario {
        Scenario::Traffic => {
            let travel = Uniform::new_inclusive(cfg.scope.ws_min, cfg.scope.ws_max);
            let (l1, l2) = (EventType::new(TRAFFIC_BUILD), EventType::new(TRAFFIC_PROBE));
            let mut t = 0.0;
            let mut vehicle = 0u64;
            while t < cfg.duration {
                let exit = t + travel.sample(&mut rng);
                arrivals.push(Arrival {
                    t,
                    etype: l1.clone(),
                    key: Some(vehicle),
                });
                if exit < cfg.duration {
                    arrivals.push(Arrival {
                        t: exit,
                        etype: l2.clone(),
                        key: Some(vehicle),
                    });
                }
                vehicle += 1;
                t += gaps.next_gap(t, &mut rng);
            }
        }
        Scenario::Face => {
            let face = EventType::new(FACE_EVENT);
            let query = EventType::new(FACE_QUERY);
            let mut t = 0.0;
            while t < cfg.duration {
                arrivals.push(Arrival {
                    t,
                    etype: face.clone(),
                    key: None,
                });
                t += gaps.next_gap(t, &mut rng);
            }
            let mut t = 0.0;
            let mut id = 0u64;
            while t < cfg.duration {
                arrivals.push(Arrival {
                    t,
                    etype: query.clone(),
                    key: Some(id),
                });
                id += 1;
                t += cfg
                    .scope
                    .query_kind
                    .sample(cfg.scope.query_mean_iat, &mut rng);
            }
        }
        Scenario::Custom => {
            let types: Vec<(&EventType, f64)> = cfg.type_mix.iter().map(|(t, &p)| (t, p)).collect();
            let mut t = 0.0;
            while t < cfg.duration {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = types[types.len() - 1].0;
                for &(ty, p) in &types {
                    acc += p;
                    if u < acc {
                        pick = ty;
                        break;
                    }
                }
                arrivals.push(Arrival {
                    t,
                    etype: pick.clone(),
                    key: None,
                });
                t += gaps.next_gap(t, &mut rng);
            }
        }
    }

    // stable: equal timestamps keep generation order
    let mut keyed: Vec<(u64, Arrival)> = arrivals
        .into_iter()
        .map(|a| (a.t.round() as u64, a))
        .collect();
    keyed.sort_by_key(|(ts, _)| *ts);

    let jitter = if cfg.cost.kind == CostKind::CustomTable && cfg.jitter_sigma > 0.0 {
        let s = cfg.jitter_sigma;
        Some(LogNormal::new(-0.5 * s * s, s).expect("validated sigma"))
    } else {
        None
    };

    let mut out = Vec::with_capacity(keyed.len());
    for (seq, (ts, a)) in keyed.into_iter().enumerate() {
        let mut e = Event::new(seq as u64, ts, a.etype);
        e.key = a.key;
        if let Some(dist) = &jitter {
            let base = cfg.cost.base.get(&e.etype).copied();
            if let Some(b) = base {
                e.cost_hint = Some(b * dist.sample(&mut rng));
            }
        }
        out.push(e);
    }
    Ok(out)
}

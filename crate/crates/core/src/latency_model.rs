//! Latency model of the batch scheduling controller.
//!
//! For a candidate decision "batch the new window onto instance x" the model
//! predicts the set of events the window will contain (count per type from
//! the monitored inter-arrival time and type ratios), pairs their binned
//! in-window latencies with binned inter-arrival times to obtain the summed
//! queue-growing gains Γ⁻ (≥ 0) and queue-draining gains Γ⁺ (≤ 0), and then
//!
//! ```text
//! λ_q^max = max(λ_q^init, λ_q^init + Γ⁻ + α·Γ⁺)
//! λ_o^max = λ_q^max + Θ̄ · max λ_p^w
//! ```
//!
//! where α ∈ [0, 1] models how much the two kinds of gains interleave and Θ̄
//! is the predicted average overlap of the new window's events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventType, Millis};
use crate::runtime::FeedbackReport;
use crate::splitter::{BinnedSummary, StatsSnapshot, TCount};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Estimate α from the T-COUNT transition counters of the snapshot.
    Tcount,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub n_iat_bins: usize,
    pub n_lat_bins: usize,
    /// Standard deviations subtracted from monitored inter-arrival times.
    pub delta_iat: f64,
    /// Standard deviations added to monitored in-window latencies.
    pub delta_lp: f64,
    pub alpha: AlphaMode,
    /// Lower bound on a biased inter-arrival time (ms).
    pub iat_floor: Millis,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_iat_bins: 8,
            n_lat_bins: 4,
            delta_iat: 0.75,
            delta_lp: 2.0,
            alpha: AlphaMode::Tcount,
            iat_floor: 0.01,
        }
    }
}

impl ModelParams {
    pub fn validate(&self, field: &str) -> Result<()> {
        if self.n_iat_bins == 0 {
            return Err(Error::config(format!("{field}.n_iat_bins"), "must be >= 1"));
        }
        if self.n_lat_bins == 0 {
            return Err(Error::config(format!("{field}.n_lat_bins"), "must be >= 1"));
        }
        if !(self.delta_iat >= 0.0 && self.delta_iat.is_finite()) {
            return Err(Error::config(format!("{field}.delta_iat"), "must be >= 0"));
        }
        if !(self.delta_lp >= 0.0 && self.delta_lp.is_finite()) {
            return Err(Error::config(format!("{field}.delta_lp"), "must be >= 0"));
        }
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(
                    format!("{field}.alpha.fixed"),
                    "must lie in [0, 1]",
                ));
            }
        }
        if !(self.iat_floor > 0.0 && self.iat_floor.is_finite()) {
            return Err(Error::config(format!("{field}.iat_floor"), "must be > 0"));
        }
        Ok(())
    }
}

/// A number of predicted events sharing one value (latency or iat).
/// Counts are real-valued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mass {
    pub value: f64,
    pub count: f64,
}

impl Mass {
    pub fn new(value: f64, count: f64) -> Self {
        Mass { value, count }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Gains {
    /// Γ⁻: sum of positive pair gains.
    pub minus: f64,
    /// Γ⁺: sum of non-positive pair gains.
    pub plus: f64,
    /// Total count paired.
    pub paired: f64,
}

/// Pairs latency masses (highest first) with iat masses (lowest first) and
/// accumulates `count · (Θ̄·λ − iat)` into Γ⁻ or Γ⁺. Stops when either side
/// runs out. `on_pair` sees every `(count, latency, iat)` combination.
pub fn pair_gains_with(
    lat: &[Mass],
    iat: &[Mass],
    theta_bar: f64,
    mut on_pair: impl FnMut(f64, f64, f64),
) -> Gains {
    let mut lat: Vec<Mass> = lat.iter().copied().filter(|m| m.count > 0.0).collect();
    let mut iat: Vec<Mass> = iat.iter().copied().filter(|m| m.count > 0.0).collect();
    lat.sort_by(|a, b| b.value.total_cmp(&a.value));
    iat.sort_by(|a, b| a.value.total_cmp(&b.value));

    let mut g = Gains::default();
    let (mut l, mut i) = (0, 0);
    while l < lat.len() && i < iat.len() {
        let comb = lat[l].count.min(iat[i].count);
        let gain = comb * (theta_bar * lat[l].value - iat[i].value);
        if gain > 0.0 {
            g.minus += gain;
        } else {
            g.plus += gain;
        }
        g.paired += comb;
        on_pair(comb, lat[l].value, iat[i].value);
        lat[l].count -= comb;
        iat[i].count -= comb;
        if iat[i].count <= 0.0 {
            i += 1;
        }
        if lat[l].count <= 0.0 {
            l += 1;
        }
    }
    g
}

pub fn pair_gains(lat: &[Mass], iat: &[Mass], theta_bar: f64) -> Gains {
    pair_gains_with(lat, iat, theta_bar, |_, _, _| {})
}

/// Biased view of a snapshot: bin values with the configured pessimistic
/// shift applied.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedModel {
    /// `(biased iat, weight)` per iat bin.
    pub iat_bins: Vec<(f64, f64)>,
    /// `(biased in-window latency, weight)` per latency bin, per type.
    pub lat_bins: BTreeMap<EventType, Vec<(f64, f64)>>,
    /// Unbiased population mean and standard deviation of the iat.
    pub iat_mean: f64,
    pub iat_sigma: f64,
    /// Some biased iat bin hit the floor.
    pub iat_floored: bool,
    pub type_ratio: BTreeMap<EventType, f64>,
    pub ws: f64,
    pub delta: f64,
    pub tcount: TCount,
    pub stale: bool,
}

impl BiasedModel {
    /// `None` if the snapshot lacks iat, latency or scope measurements.
    pub fn from_snapshot(snap: &StatsSnapshot, params: &ModelParams) -> Option<Self> {
        if !snap.is_usable() {
            return None;
        }
        let iat = snap.iat.as_ref()?;
        let mut floored = false;
        let mut floor = |v: f64| {
            if v < params.iat_floor {
                floored = true;
                params.iat_floor
            } else {
                v
            }
        };
        let iat_bins = iat
            .bins
            .iter()
            .map(|b| (floor(b.mean - params.delta_iat * b.sigma), b.weight))
            .collect();
        let lat_bins = snap
            .lat
            .iter()
            .map(|(t, s)| (t.clone(), biased_latency_bins(s, params.delta_lp)))
            .collect();
        Some(BiasedModel {
            iat_bins,
            lat_bins,
            iat_mean: iat.mean,
            iat_sigma: iat.sigma,
            iat_floored: floored,
            type_ratio: snap.type_ratio.clone(),
            ws: snap.ws_est?,
            delta: snap.delta_est.unwrap_or(0.0),
            tcount: snap.tcount,
            stale: snap.stale,
        })
    }

    /// Bin-weighted mean of the biased latency of one type.
    pub fn type_mean(&self, t: &EventType) -> Option<f64> {
        self.lat_bins
            .get(t)
            .map(|bins| bins.iter().map(|&(v, w)| v * w).sum())
    }

    /// Mean over all types, weighted by type ratio where known.
    pub fn global_mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, bins) in &self.lat_bins {
            let w = self.type_ratio.get(t).copied().unwrap_or(0.0);
            let m: f64 = bins.iter().map(|&(v, bw)| v * bw).sum();
            num += w * m;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else if self.lat_bins.is_empty() {
            0.0
        } else {
            let all: Vec<f64> = self
                .lat_bins
                .keys()
                .filter_map(|t| self.type_mean(t))
                .collect();
            all.iter().sum::<f64>() / all.len() as f64
        }
    }

    pub fn max_latency(&self) -> f64 {
        self.lat_bins
            .values()
            .flatten()
            .map(|&(v, _)| v)
            .fold(0.0, f64::max)
    }
}

fn biased_latency_bins(s: &BinnedSummary, delta_lp: f64) -> Vec<(f64, f64)> {
    s.bins
        .iter()
        .map(|b| ((b.mean + delta_lp * b.sigma).max(0.0), b.weight))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventCounts {
    pub n: f64,
    pub per_type: BTreeMap<EventType, f64>,
    /// The biased iat hit the floor.
    pub floored: bool,
}

/// `n = ws / (mean − δ_iat·σ)`, with the denominator floored; per-type
/// counts split `n` by type ratio.
pub fn predict_event_counts(
    iat_mean: f64,
    iat_sigma: f64,
    type_ratio: &BTreeMap<EventType, f64>,
    ws: f64,
    params: &ModelParams,
) -> EventCounts {
    let raw = iat_mean - params.delta_iat * iat_sigma;
    let floored = raw < params.iat_floor;
    let iat = if floored { params.iat_floor } else { raw };
    let n = ws / iat;
    EventCounts {
        n,
        per_type: type_ratio
            .iter()
            .map(|(t, &r)| (t.clone(), r * n))
            .collect(),
        floored,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub theta_bar: f64,
    /// `(Θ̂−1)·Δ` exceeded `ws`; the full-overlap phase was clamped to zero.
    pub inconsistent: bool,
}

/// Average overlap of the new window's events when joining a batch whose
/// current overlap is `theta_hat`, assuming equal scopes `ws` and equal
/// shifts `delta`: the window first sees overlap Θ̂ until the oldest batch
/// window closes, then an average of Θ̂/2 while the rest close.
pub fn predict_overlap(theta_hat: f64, ws: f64, delta: f64) -> Overlap {
    debug_assert!(theta_hat >= 1.0 && ws > 0.0 && delta >= 0.0);
    let closing = (theta_hat - 1.0) * delta;
    let inconsistent = closing > ws;
    let full = (ws - closing).max(0.0);
    let raw = (full * theta_hat + closing * theta_hat / 2.0) / ws;
    Overlap {
        theta_bar: raw.clamp(1.0, theta_hat.max(1.0)),
        inconsistent,
    }
}

/// Γ⁻ and Γ⁺ from binned latencies and inter-arrival times.
///
/// `lat_bins` holds `(λ_p^w, weight)` per latency bin for each type,
/// `iat_bins` holds `(iat, weight)`; both already biased.
pub fn predict_gains(
    lat_bins: &BTreeMap<EventType, Vec<(f64, f64)>>,
    per_type_counts: &BTreeMap<EventType, f64>,
    iat_bins: &[(f64, f64)],
    n: f64,
    theta_bar: f64,
) -> Gains {
    let mut lat = Vec::new();
    for (t, &count) in per_type_counts {
        if let Some(bins) = lat_bins.get(t) {
            lat.extend(bins.iter().map(|&(v, w)| Mass::new(v, count * w)));
        }
    }
    let iat: Vec<Mass> = iat_bins.iter().map(|&(v, w)| Mass::new(v, n * w)).collect();
    pair_gains(&lat, &iat, theta_bar)
}

/// T-COUNT: `α = (c_t − 1) / (2·min{c⁺, c⁻})`, clamped to `[0, 1]`.
pub fn predict_alpha_tcount(t: TCount) -> f64 {
    let m = t.c_minus.min(t.c_plus);
    if m == 0 {
        return 0.0;
    }
    ((t.c_trans.saturating_sub(1)) as f64 / (2 * m) as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueInit {
    pub lambda_q_init: f64,
    /// A reported type had no latency estimate; the global mean was used.
    pub fallback: bool,
}

/// Work already queued at an instance: `Σ_types #queued · Θ̄_rep · λ_p^w(type)`.
pub fn predict_lambda_q_init(report: &FeedbackReport, model: &BiasedModel) -> QueueInit {
    let mut fallback = false;
    let mut total = 0.0;
    for (t, &count) in &report.queued_counts {
        if count == 0 {
            continue;
        }
        let lp = match model.type_mean(t) {
            Some(m) => m,
            None => {
                fallback = true;
                model.global_mean()
            }
        };
        total += count as f64 * report.theta_bar_rep * lp;
    }
    QueueInit {
        lambda_q_init: total,
        fallback,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PredictionFlags {
    pub iat_floored: bool,
    pub overlap_inconsistent: bool,
    pub unknown_type_fallback: bool,
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyPrediction {
    pub n: f64,
    pub per_type_counts: BTreeMap<EventType, f64>,
    pub theta_hat: f64,
    pub theta_bar: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub alpha: f64,
    pub lambda_q_init: f64,
    pub lambda_q_max: f64,
    pub lambda_p_max: f64,
    pub lambda_o_max: f64,
    pub flags: PredictionFlags,
}

/// `λ_q^max = λ_q^init + max(0, Γ⁻ + α·Γ⁺)`.
pub fn queue_peak(lambda_q_init: f64, gamma_minus: f64, gamma_plus: f64, alpha: f64) -> f64 {
    let grown = lambda_q_init + gamma_minus + alpha * gamma_plus;
    grown.max(lambda_q_init)
}

/// Full prediction for batching a new window onto an instance that
/// currently holds `open_on_instance` open windows.
pub fn predict(
    model: &BiasedModel,
    report: &FeedbackReport,
    open_on_instance: usize,
    params: &ModelParams,
) -> LatencyPrediction {
    let theta_hat = (open_on_instance + 1) as f64;
    let overlap = predict_overlap(theta_hat, model.ws, model.delta);
    let counts = predict_event_counts(
        model.iat_mean,
        model.iat_sigma,
        &model.type_ratio,
        model.ws,
        params,
    );
    let gains = predict_gains(
        &model.lat_bins,
        &counts.per_type,
        &model.iat_bins,
        counts.n,
        overlap.theta_bar,
    );
    let alpha = match params.alpha {
        AlphaMode::Tcount => predict_alpha_tcount(model.tcount),
        AlphaMode::Fixed(a) => a,
    };
    let init = predict_lambda_q_init(report, model);
    let lambda_q_max = queue_peak(init.lambda_q_init, gains.minus, gains.plus, alpha);
    let lambda_p_max = overlap.theta_bar * model.max_latency();
    LatencyPrediction {
        n: counts.n,
        per_type_counts: counts.per_type,
        theta_hat,
        theta_bar: overlap.theta_bar,
        gamma_minus: gains.minus,
        gamma_plus: gains.plus,
        alpha,
        lambda_q_init: init.lambda_q_init,
        lambda_q_max,
        lambda_p_max,
        lambda_o_max: lambda_q_max + lambda_p_max,
        flags: PredictionFlags {
            iat_floored: counts.floored || model.iat_floored,
            overlap_inconsistent: overlap.inconsistent,
            unknown_type_fallback: init.fallback,
            stale: model.stale,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ty(s: &str) -> EventType {
        EventType::new(s)
    }

    fn per_event(lps: &[f64]) -> Vec<Mass> {
        lps.iter().map(|&v| Mass::new(v, 1.0)).collect()
    }

    #[test]
    fn event_counts_with_bias() {
        let p = ModelParams {
            delta_iat: 1.0,
            ..ModelParams::default()
        };
        let c = predict_event_counts(500.0, 100.0, &BTreeMap::new(), 10_000.0, &p);
        assert_eq!(c.n, 25.0);
        assert!(!c.floored);
    }

    #[test]
    fn event_counts_without_bias() {
        let p = ModelParams {
            delta_iat: 0.0,
            ..ModelParams::default()
        };
        let c = predict_event_counts(400.0, 100.0, &BTreeMap::new(), 10_000.0, &p);
        assert_eq!(c.n, 25.0);
    }

    #[test]
    fn event_counts_per_type() {
        let p = ModelParams {
            delta_iat: 1.0,
            ..ModelParams::default()
        };
        let ratio = [(ty("A"), 0.4), (ty("B"), 0.6)].into_iter().collect();
        let c = predict_event_counts(500.0, 100.0, &ratio, 10_000.0, &p);
        assert_eq!(c.per_type[&ty("A")], 10.0);
        assert_eq!(c.per_type[&ty("B")], 15.0);
    }

    #[test]
    fn event_counts_floor() {
        let p = ModelParams {
            delta_iat: 3.0,
            ..ModelParams::default()
        };
        let c = predict_event_counts(10.0, 10.0, &BTreeMap::new(), 1.0, &p);
        assert!(c.floored);
        assert_eq!(c.n, 1.0 / 0.01);
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(predict_overlap(1.0, 10_000.0, 2_000.0).theta_bar, 1.0);
        let o = predict_overlap(3.0, 10_000.0, 2_000.0);
        assert!((o.theta_bar - 2.4).abs() < 1e-12);
        assert!(!o.inconsistent);
        assert_eq!(predict_overlap(2.0, 5_000.0, 5_000.0).theta_bar, 1.0);
    }

    #[test]
    fn overlap_inconsistent_inputs() {
        let o = predict_overlap(5.0, 1_000.0, 1_000.0);
        assert!(o.inconsistent);
        assert!(o.theta_bar >= 1.0 && o.theta_bar <= 5.0);
    }

    #[test]
    fn single_pair() {
        let g = pair_gains(&[Mass::new(8.0, 7.0)], &[Mass::new(5.0, 7.0)], 1.0);
        assert_eq!((g.minus, g.plus, g.paired), (21.0, 0.0, 7.0));
    }

    #[test]
    fn worked_example_gains() {
        let g = pair_gains(
            &per_event(&[8.0, 8.0, 7.0, 7.0, 4.0, 4.0, 2.0]),
            &[Mass::new(5.0, 7.0)],
            1.0,
        );
        assert_eq!(g.minus, 10.0);
        assert_eq!(g.plus, -5.0);
    }

    #[test]
    fn worked_example_through_type_bins() {
        let lat: BTreeMap<EventType, Vec<(f64, f64)>> = [
            (ty("A"), vec![(8.0, 1.0)]),
            (ty("B"), vec![(7.0, 1.0)]),
            (ty("C"), vec![(4.0, 1.0)]),
            (ty("D"), vec![(2.0, 1.0)]),
        ]
        .into_iter()
        .collect();
        let counts = [
            (ty("A"), 2.0),
            (ty("B"), 2.0),
            (ty("C"), 2.0),
            (ty("D"), 1.0),
        ]
        .into_iter()
        .collect();
        let g = predict_gains(&lat, &counts, &[(5.0, 1.0)], 7.0, 1.0);
        assert_eq!((g.minus, g.plus), (10.0, -5.0));
    }

    #[test]
    fn all_cheap_events() {
        let g = pair_gains(&per_event(&[1.0, 2.0, 3.0]), &[Mass::new(5.0, 3.0)], 1.0);
        assert_eq!(g.minus, 0.0);
        assert!(g.plus < 0.0);
    }

    #[test]
    fn alpha_examples() {
        let a = predict_alpha_tcount(TCount {
            c_minus: 3,
            c_plus: 3,
            c_trans: 5,
        });
        assert!((a - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(
            predict_alpha_tcount(TCount {
                c_minus: 3,
                c_plus: 3,
                c_trans: 1
            }),
            0.0
        );
        assert_eq!(
            predict_alpha_tcount(TCount {
                c_minus: 4,
                c_plus: 0,
                c_trans: 1
            }),
            0.0
        );
        assert_eq!(
            predict_alpha_tcount(TCount {
                c_minus: 1,
                c_plus: 1,
                c_trans: 9
            }),
            1.0
        );
    }

    fn model_with_types(means: &[(&str, f64)]) -> BiasedModel {
        BiasedModel {
            iat_bins: vec![(5.0, 1.0)],
            lat_bins: means
                .iter()
                .map(|&(t, v)| (ty(t), vec![(v, 1.0)]))
                .collect(),
            iat_mean: 5.0,
            iat_sigma: 0.0,
            iat_floored: false,
            type_ratio: means
                .iter()
                .map(|&(t, _)| (ty(t), 1.0 / means.len() as f64))
                .collect(),
            ws: 35.0,
            delta: 0.0,
            tcount: TCount::default(),
            stale: false,
        }
    }

    fn report(counts: &[(&str, u64)], theta: f64) -> FeedbackReport {
        FeedbackReport {
            instance: 0,
            queued_counts: counts.iter().map(|&(t, c)| (ty(t), c)).collect(),
            theta_bar_rep: theta,
            last_lambda_o: 0.0,
            emitted_at: 0.0,
        }
    }

    #[test]
    fn queue_init_examples() {
        let m = model_with_types(&[("L1", 1.0), ("L2", 3.0)]);
        let q = predict_lambda_q_init(&report(&[("L1", 4), ("L2", 2)], 2.0), &m);
        assert_eq!(q.lambda_q_init, 20.0);
        assert!(!q.fallback);
        assert_eq!(
            predict_lambda_q_init(&report(&[], 1.0), &m).lambda_q_init,
            0.0
        );
        assert_eq!(
            predict_lambda_q_init(&report(&[("L2", 7)], 1.0), &m).lambda_q_init,
            21.0
        );
    }

    #[test]
    fn queue_init_unknown_type_falls_back() {
        let m = model_with_types(&[("L1", 1.0), ("L2", 3.0)]);
        let q = predict_lambda_q_init(&report(&[("X", 1)], 1.0), &m);
        assert!(q.fallback);
        assert_eq!(q.lambda_q_init, 2.0);
    }

    #[test]
    fn queue_peak_examples() {
        assert_eq!(queue_peak(0.0, 10.0, -5.0, 0.0), 10.0);
        assert_eq!(queue_peak(0.0, 10.0, -5.0, 1.0), 5.0);
        assert_eq!(queue_peak(0.0, 10.0, -5.0, 0.8), 6.0);
        assert_eq!(queue_peak(3.0, 1.0, -5.0, 1.0), 3.0);
    }

    #[test]
    fn full_prediction_degenerate_model() {
        let m = model_with_types(&[("A", 8.0)]);
        let p = ModelParams {
            alpha: AlphaMode::Fixed(0.0),
            ..ModelParams::default()
        };
        let pred = predict(&m, &report(&[], 1.0), 0, &p);
        assert_eq!(pred.theta_hat, 1.0);
        assert_eq!(pred.theta_bar, 1.0);
        assert_eq!(pred.n, 7.0);
        assert_eq!(pred.gamma_minus, 21.0);
        assert_eq!(pred.lambda_p_max, 8.0);
        assert_eq!(pred.lambda_o_max, 29.0);
    }

    #[test]
    fn validate_params() {
        assert!(ModelParams::default().validate("model").is_ok());
        let bad = ModelParams {
            alpha: AlphaMode::Fixed(1.5),
            ..ModelParams::default()
        };
        assert!(
            matches!(bad.validate("model"), Err(Error::Config { field, .. }) if field == "model.alpha.fixed")
        );
    }

    fn arb_masses() -> impl Strategy<Value = Vec<Mass>> {
        proptest::collection::vec((0.0f64..100.0, 0.0f64..50.0), 1..12)
            .prop_map(|v| v.into_iter().map(|(a, b)| Mass::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn gains_signs_and_partition(lat in arb_masses(), iat in arb_masses(), theta in 1.0f64..5.0) {
            let mut pairs = 0.0;
            let g = pair_gains_with(&lat, &iat, theta, |c, l, i| pairs += c * (theta * l - i));
            prop_assert!(g.minus >= 0.0 && g.plus <= 0.0);
            let tl: f64 = lat.iter().map(|m| m.count).sum();
            let ti: f64 = iat.iter().map(|m| m.count).sum();
            prop_assert!((g.paired - tl.min(ti)).abs() <= 1e-9 * tl.max(ti).max(1.0));
            prop_assert!((g.minus + g.plus - pairs).abs() <= 1e-9 * (g.minus - g.plus).max(1.0));
        }

        #[test]
        fn degenerate_closed_form(lp in 0.0f64..50.0, iat in 0.1f64..50.0, n in 0.1f64..1000.0, theta in 1.0f64..4.0) {
            let g = pair_gains(&[Mass::new(lp, n)], &[Mass::new(iat, n)], theta);
            let closed = n * (theta * lp - iat);
            if closed > 0.0 {
                prop_assert_eq!(g.minus, closed);
                prop_assert_eq!(g.plus, 0.0);
            } else {
                prop_assert_eq!(g.minus, 0.0);
                prop_assert_eq!(g.plus, closed);
            }
        }

        #[test]
        fn queue_peak_monotone_in_alpha(init in 0.0f64..100.0, gm in 0.0f64..100.0, gp in -100.0f64..0.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(queue_peak(init, gm, gp, hi) <= queue_peak(init, gm, gp, lo));
            prop_assert!(queue_peak(init, gm, gp, hi) >= init);
        }

        #[test]
        fn overlap_within_bounds(theta_hat in 1u32..200, ws in 1.0f64..1e5, delta in 0.0f64..1e4) {
            let o = predict_overlap(theta_hat as f64, ws, delta);
            prop_assert!(o.theta_bar >= 1.0 && o.theta_bar <= theta_hat as f64);
        }
    }
}

//! Desk-scale scenario configurations: small enough to run in seconds,
//! shaped like the full traffic and face-recognition experiments.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::event::EventType;
use crate::latency_model::ModelParams;
use crate::scheduler::SchedulerKind;
use crate::workload::{
    CostKind, CostModel, GapKind, IatProfile, Scenario, ScopeProfile, WorkloadConfig, FACE_EVENT,
    FACE_QUERY,
};

use super::ExperimentConfig;

/// Vehicles with sinusoidal inter-arrival times between 200 and 2000 ms
/// (two-hour period), each opening a keyed window closed by its probe event
/// after 20 to 40 s; an equi-join whose probe cost grows with the builds seen.
pub fn traffic_desk(scheduler: SchedulerKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        output_dir: PathBuf::from("results/traffic"),
        n_instances: 8,
        mtime: 60_000.0,
        feedback_interval: Some(200.0),
        feedback_delay: 0.0,
        transfer_delay: 0.0,
        evaluation_bound: None,
        workload: WorkloadConfig {
            scenario: Scenario::Traffic,
            seed,
            duration: 7_200_000.0,
            iat: IatProfile::SinusoidalExponential {
                mean_min: 200.0,
                mean_max: 2_000.0,
                period: 7_200_000.0,
            },
            type_mix: BTreeMap::new(),
            scope: ScopeProfile {
                ws_min: 20_000.0,
                ws_max: 40_000.0,
                ..ScopeProfile::default()
            },
            cost: CostModel::equi_join(0.05, 0.05, 0.002),
            jitter_sigma: 0.0,
        },
        scheduler,
        model: ModelParams {
            n_iat_bins: 8,
            delta_iat: 0.75,
            delta_lp: 2.0,
            ..ModelParams::default()
        },
        sweep: Vec::new(),
    }
}

/// Bursts of four face detections 10 ms apart, one burst every 2 s, and
/// exponential queries with a mean of 2 s, each query opening a 10 s window.
pub fn face_desk(scheduler: SchedulerKind, seed: u64) -> ExperimentConfig {
    let base: BTreeMap<EventType, f64> = [(FACE_QUERY, 1.0), (FACE_EVENT, 30.0)]
        .into_iter()
        .map(|(t, c)| (EventType::new(t), c))
        .collect();
    ExperimentConfig {
        output_dir: PathBuf::from("results/face"),
        n_instances: 8,
        mtime: 10_000.0,
        feedback_interval: None,
        feedback_delay: 0.0,
        transfer_delay: 0.0,
        evaluation_bound: None,
        workload: WorkloadConfig {
            scenario: Scenario::Face,
            seed,
            duration: 600_000.0,
            iat: IatProfile::Burst {
                burst_size: 4,
                intra_gap: 10.0,
                inter_gap: 1_970.0,
                inter_kind: GapKind::Constant,
            },
            type_mix: BTreeMap::new(),
            scope: ScopeProfile {
                ws: 10_000.0,
                query_mean_iat: 2_000.0,
                ..ScopeProfile::default()
            },
            cost: CostModel {
                kind: CostKind::FlatPerType,
                base,
                ..CostModel::equi_join(0.0, 0.0, 0.0)
            },
            jitter_sigma: 0.0,
        },
        scheduler,
        model: ModelParams {
            n_iat_bins: 2,
            delta_iat: 1.0,
            ..ModelParams::default()
        },
        sweep: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_roundtrip() {
        for cfg in [
            traffic_desk(SchedulerKind::RoundRobin, 1),
            face_desk(SchedulerKind::RoundRobin, 1),
        ] {
            cfg.validate().unwrap();
            let text = toml::to_string(&cfg).unwrap();
            let back: ExperimentConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventType, Millis};
use crate::latency_model::ModelParams;
use crate::runtime::{self, RunMetrics, SimConfig};
use crate::scheduler::SchedulerKind;
use crate::splitter::WindowRule;
use crate::workload::{self, Scenario, WorkloadConfig, TRAFFIC_BUILD, TRAFFIC_PROBE};

/// How sweep values are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    /// Use values as given.
    Absolute,
    /// Multiply values by the peak λ_o of a Round-Robin run of the same
    /// workload.
    RoundRobinPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path of the swept field, e.g. `scheduler.latency_bound`.
    pub field: String,
    pub values: Vec<toml::Value>,
    #[serde(default = "default_scale")]
    pub scale: SweepScale,
}

fn default_scale() -> SweepScale {
    SweepScale::Absolute
}

/// One experiment file: a workload, a controller and the simulation
/// parameters, optionally swept over one or more fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub n_instances: usize,
    pub mtime: Millis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_interval: Option<Millis>,
    #[serde(default)]
    pub feedback_delay: Millis,
    #[serde(default)]
    pub transfer_delay: Millis,
    /// Latency bound used to count violations. Defaults to the model-based
    /// controller's LB; without either, no violations are counted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_bound: Option<Millis>,
    pub workload: WorkloadConfig,
    pub scheduler: SchedulerKind,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|source| Error::ConfigParse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_instances: self.n_instances,
            mtime: self.mtime,
            feedback_interval: self.feedback_interval,
            feedback_delay: self.feedback_delay,
            transfer_delay: self.transfer_delay,
            model: self.model,
            scheduler: self.scheduler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        self.workload.validate()?;
        if let Some(b) = self.evaluation_bound {
            if b.is_nan() || b < 0.0 {
                return Err(Error::config("evaluation_bound", "must be >= 0"));
            }
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::config(
                    format!("sweep[{i}].values"),
                    "must not be empty",
                ));
            }
            // probing with the first value checks that the field exists and accepts the type
            self.with_field(&axis.field, axis.values[0].clone())
                .map_err(|e| match e {
                    Error::Config { reason, .. } => {
                        Error::config(format!("sweep[{i}].field"), reason)
                    }
                    other => other,
                })?;
        }
        Ok(())
    }

    pub fn window_rule(&self) -> WindowRule {
        let w = &self.workload;
        match w.scenario {
            Scenario::Traffic => WindowRule::Keyed {
                open: EventType::new(TRAFFIC_BUILD),
                close: EventType::new(TRAFFIC_PROBE),
            },
            Scenario::Face => WindowRule::TimeScoped {
                open: EventType::new(workload::FACE_QUERY),
                ws: w.scope.ws.round() as u64,
            },
            Scenario::Custom => WindowRule::TimeScoped {
                open: EventType::new(&w.scope.open_type),
                ws: w.scope.ws.round() as u64,
            },
        }
    }

    /// The bound samples are checked against.
    pub fn bound(&self) -> Option<Millis> {
        self.evaluation_bound.or(match self.scheduler {
            SchedulerKind::ModelBased { latency_bound } => Some(latency_bound),
            _ => None,
        })
    }

    /// Copy of this config with the dotted `field` set to `value`; the sweep
    /// list is dropped. Fails if the field does not exist or rejects the value.
    pub fn with_field(&self, field: &str, value: toml::Value) -> Result<Self> {
        let mut base = self.clone();
        base.sweep.clear();
        let mut doc =
            toml::Value::try_from(&base).map_err(|e| Error::config(field, e.to_string()))?;
        let mut parts: Vec<&str> = field.split('.').collect();
        let leaf = parts
            .pop()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::config(field, "empty field path"))?;
        let mut cur = &mut doc;
        for p in &parts {
            cur = cur
                .get_mut(*p)
                .filter(|v| v.is_table())
                .ok_or_else(|| Error::config(field, format!("no table `{p}`")))?;
        }
        cur.as_table_mut()
            .expect("checked table")
            .insert(leaf.to_string(), value);
        let cfg: ExperimentConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(field, e.message().to_string()))?;
        cfg.sim_config().validate()?;
        cfg.workload.validate()?;
        Ok(cfg)
    }

    /// Runs this config (ignoring any sweep).
    pub fn run(&self) -> Result<RunMetrics> {
        let events = workload::generate_stream(&self.workload)?;
        runtime::run(
            &events,
            self.window_rule(),
            &self.workload.cost,
            &self.sim_config(),
        )
    }

    /// Expands the sweep into concrete configs (cartesian product, first
    /// axis outermost). Scaled axes need `rr_peak`.
    pub fn expand(&self, rr_peak: Option<Millis>) -> Result<Vec<(String, ExperimentConfig)>> {
        let mut out = vec![(String::new(), self.clone())];
        for axis in &self.sweep {
            let mut next = Vec::new();
            for (label, cfg) in &out {
                for v in &axis.values {
                    let value = match axis.scale {
                        SweepScale::Absolute => v.clone(),
                        SweepScale::RoundRobinPeak => {
                            let peak = rr_peak.ok_or_else(|| {
                                Error::config(&axis.field, "scaled sweep without baseline")
                            })?;
                            let f = v
                                .as_float()
                                .or_else(|| v.as_integer().map(|i| i as f64))
                                .ok_or_else(|| {
                                    Error::config(
                                        &axis.field,
                                        "scaled sweep values must be numbers",
                                    )
                                })?;
                            toml::Value::Float(f * peak)
                        }
                    };
                    let c = cfg.with_field(&axis.field, value.clone())?;
                    let part = format!("{}={}", axis.field, value);
                    let label = if label.is_empty() {
                        part
                    } else {
                        format!("{label},{part}")
                    };
                    next.push((label, c));
                }
            }
            out = next;
        }
        for (_, c) in &mut out {
            c.sweep.clear();
        }
        Ok(out)
    }

    pub fn needs_baseline(&self) -> bool {
        self.sweep
            .iter()
            .any(|a| a.scale == SweepScale::RoundRobinPeak)
    }

    pub fn round_robin_baseline(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.sweep.clear();
        c.scheduler = SchedulerKind::RoundRobin;
        c
    }
}

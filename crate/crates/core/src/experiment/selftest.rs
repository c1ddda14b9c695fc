use std::collections::BTreeMap;
use std::fmt;

use crate::error::Result;
use crate::event::{Event, EventType};
use crate::latency_model::{predict_gains, queue_peak, ModelParams};
use crate::runtime::{run, SimConfig};
use crate::scheduler::SchedulerKind;
use crate::splitter::WindowRule;
use crate::workload::CostModel;

/// Seven events, two of type A (8 ms), two B (7 ms), two C (4 ms) and one
/// D (2 ms), arriving 5 ms apart into one window on one instance.
pub const WORST_ORDER: [&str; 7] = ["A", "A", "B", "B", "C", "C", "D"];
pub const BEST_ORDER: [&str; 7] = ["A", "D", "A", "C", "B", "C", "B"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorkedExample {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// `(α, λ_q^max)` for α = 0, 0.8, 1.
    pub peaks: Vec<(f64, f64)>,
    /// Peak λ_q of the simulated worst and best arrival orders.
    pub simulated_worst: f64,
    pub simulated_best: f64,
}

impl fmt::Display for WorkedExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma_minus = {}", self.gamma_minus)?;
        writeln!(f, "gamma_plus = {}", self.gamma_plus)?;
        for (a, p) in &self.peaks {
            writeln!(f, "alpha = {a}: lambda_q_max = {p}")?;
        }
        writeln!(
            f,
            "simulated worst order {:?}: peak lambda_q = {}",
            WORST_ORDER, self.simulated_worst
        )?;
        write!(
            f,
            "simulated best order {:?}: peak lambda_q = {}",
            BEST_ORDER, self.simulated_best
        )
    }
}

fn ty(s: &str) -> EventType {
    EventType::new(s)
}

/// Peak queuing latency of the example events arriving in `order`.
pub fn simulate_order(order: &[&str]) -> Result<f64> {
    // a zero-cost opener at t=0 and trailer at t=40 bracket one 40 ms window
    let mut evs = vec![Event::new(0, 0, "Q")];
    for (i, t) in order.iter().enumerate() {
        evs.push(Event::new(i as u64 + 1, 5 * (i as u64 + 1), *t));
    }
    evs.push(Event::new(order.len() as u64 + 1, 40, "E"));
    let cost = CostModel::flat([
        ("Q", 0.0),
        ("A", 8.0),
        ("B", 7.0),
        ("C", 4.0),
        ("D", 2.0),
        ("E", 0.0),
    ]);
    let cfg = SimConfig {
        n_instances: 1,
        mtime: 1_000.0,
        feedback_interval: None,
        feedback_delay: 0.0,
        transfer_delay: 0.0,
        model: ModelParams::default(),
        scheduler: SchedulerKind::RoundRobin,
    };
    let rule = WindowRule::TimeScoped {
        open: ty("Q"),
        ws: 40,
    };
    let m = run(&evs, rule, &cost, &cfg)?;
    Ok(m.samples.iter().map(|s| s.lambda_q).fold(0.0, f64::max))
}

pub fn selftest_worked_example() -> Result<WorkedExample> {
    let lat: BTreeMap<EventType, Vec<(f64, f64)>> =
        [("A", 8.0), ("B", 7.0), ("C", 4.0), ("D", 2.0)]
            .into_iter()
            .map(|(t, v)| (ty(t), vec![(v, 1.0)]))
            .collect();
    let counts: BTreeMap<EventType, f64> = [("A", 2.0), ("B", 2.0), ("C", 2.0), ("D", 1.0)]
        .into_iter()
        .map(|(t, c)| (ty(t), c))
        .collect();
    let g = predict_gains(&lat, &counts, &[(5.0, 1.0)], 7.0, 1.0);
    let peaks = [0.0, 0.8, 1.0]
        .iter()
        .map(|&a| (a, queue_peak(0.0, g.minus, g.plus, a)))
        .collect();
    Ok(WorkedExample {
        gamma_minus: g.minus,
        gamma_plus: g.plus,
        peaks,
        simulated_worst: simulate_order(&WORST_ORDER)?,
        simulated_best: simulate_order(&BEST_ORDER)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_values() {
        let w = selftest_worked_example().unwrap();
        assert_eq!((w.gamma_minus, w.gamma_plus), (10.0, -5.0));
        assert_eq!(w.peaks[0].1, 10.0);
        assert!((w.peaks[1].1 - 6.0).abs() < 1e-12);
        assert_eq!(w.peaks[2].1, 5.0);
        assert_eq!(w.simulated_worst, 10.0);
        assert_eq!(w.simulated_best, 5.0);
        assert!(w.to_string().contains("gamma_minus = 10"));
    }
}

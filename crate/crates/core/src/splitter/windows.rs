use std::collections::BTreeMap;

use crate::event::{Event, EventType, InstanceId, WindowDescriptor, WindowId};

/// Scenario-specific window start/close predicate.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowRule {
    /// An `open` event with a fresh key opens a window; the `close` event
    /// with the same key closes it (aperiodic sequence over one key).
    Keyed { open: EventType, close: EventType },
    /// An `open` event opens a window that closes at the first event with
    /// `ts >= open_ts + ws`.
    TimeScoped { open: EventType, ws: u64 },
}

/// Outcome of running the window predicate on one event.
#[derive(Debug, Default)]
pub struct Detection {
    /// Windows opened by this event, still awaiting an instance.
    pub opened: Vec<WindowId>,
    /// Windows closed by this event. The event is their last member.
    pub closed: Vec<WindowDescriptor>,
    /// Every window the event belongs to, in window-id order.
    pub memberships: Vec<WindowId>,
}

/// Open-window bookkeeping of the splitter.
#[derive(Debug, Clone)]
pub struct WindowTracker {
    rule: WindowRule,
    open: BTreeMap<WindowId, WindowDescriptor>,
    by_key: BTreeMap<u64, WindowId>,
    open_per_instance: Vec<usize>,
    next_wid: WindowId,
    dropped_closes: u64,
}

impl WindowTracker {
    pub fn new(rule: WindowRule, n_instances: usize) -> Self {
        WindowTracker {
            rule,
            open: BTreeMap::new(),
            by_key: BTreeMap::new(),
            open_per_instance: vec![0; n_instances],
            next_wid: 0,
            dropped_closes: 0,
        }
    }

    pub fn rule(&self) -> &WindowRule {
        &self.rule
    }

    /// Close events that matched no open window.
    pub fn dropped_closes(&self) -> u64 {
        self.dropped_closes
    }

    /// Number of open windows assigned to each instance.
    pub fn open_per_instance(&self) -> &[usize] {
        &self.open_per_instance
    }

    pub fn open_windows(&self) -> impl Iterator<Item = &WindowDescriptor> {
        self.open.values()
    }

    pub fn get(&self, wid: WindowId) -> Option<&WindowDescriptor> {
        self.open.get(&wid)
    }

    pub fn get_mut(&mut self, wid: WindowId) -> Option<&mut WindowDescriptor> {
        self.open.get_mut(&wid)
    }

    pub fn assign(&mut self, wid: WindowId, instance: InstanceId) {
        let w = self
            .open
            .get_mut(&wid)
            .expect("assigning an unknown window");
        debug_assert!(w.assigned_instance.is_none());
        w.assigned_instance = Some(instance);
        self.open_per_instance[instance] += 1;
    }

    /// Applies the window predicate to `e`, which must arrive in total order.
    pub fn detect_windows(&mut self, e: &Event) -> Detection {
        let mut det = Detection::default();

        let closing: Vec<WindowId> = match &self.rule {
            WindowRule::Keyed { close, .. } => {
                if &e.etype == close {
                    match e.key.and_then(|k| self.by_key.get(&k).copied()) {
                        Some(wid) => vec![wid],
                        None => {
                            self.dropped_closes += 1;
                            Vec::new()
                        }
                    }
                } else {
                    Vec::new()
                }
            }
            WindowRule::TimeScoped { .. } => self
                .open
                .values()
                .filter(|w| w.close_at.is_some_and(|c| e.ts >= c))
                .map(|w| w.wid)
                .collect(),
        };

        det.memberships = self.open.keys().copied().collect();

        for wid in closing {
            let mut w = self.open.remove(&wid).expect("closing window is open");
            w.close(e);
            if let Some(k) = w.key {
                if self.by_key.get(&k) == Some(&wid) {
                    self.by_key.remove(&k);
                }
            }
            if let Some(inst) = w.assigned_instance {
                self.open_per_instance[inst] -= 1;
            }
            det.closed.push(w);
        }

        let opens = match &self.rule {
            WindowRule::Keyed { open, .. } => {
                &e.etype == open && e.key.is_some_and(|k| !self.by_key.contains_key(&k))
            }
            WindowRule::TimeScoped { open, .. } => &e.etype == open,
        };
        if opens {
            let wid = self.next_wid;
            self.next_wid += 1;
            let mut w = WindowDescriptor::open(wid, e);
            if let WindowRule::TimeScoped { ws, .. } = self.rule {
                w.close_at = Some(e.ts + ws);
            }
            if let Some(k) = w.key {
                if matches!(self.rule, WindowRule::Keyed { .. }) {
                    self.by_key.insert(k, wid);
                }
            }
            self.open.insert(wid, w);
            det.opened.push(wid);
            det.memberships.push(wid);
        }
        det
    }
}

/// De-duplicated, sorted set of instances that must receive an event, given
/// the instances owning each of its member windows. One transmission per
/// returned instance.
pub fn route_event(member_instances: impl IntoIterator<Item = InstanceId>) -> Vec<InstanceId> {
    let mut v: Vec<InstanceId> = member_instances.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

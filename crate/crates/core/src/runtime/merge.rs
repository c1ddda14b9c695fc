use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::event::{InstanceId, Millis};

/// One output emitted by an instance after processing an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputRecord {
    pub seq: u64,
    pub instance: InstanceId,
    pub emitted_at: Millis,
}

/// k-way merge of per-instance streams, each already sorted by `key`.
/// Equal keys keep the order of the input lists.
pub fn merge_sorted_by<T, K: Ord + Copy>(lists: Vec<Vec<T>>, key: impl Fn(&T) -> K) -> Vec<T> {
    let total = lists.iter().map(Vec::len).sum();
    let mut iters: Vec<std::vec::IntoIter<T>> = lists.into_iter().map(Vec::into_iter).collect();
    let mut heads: Vec<Option<T>> = iters.iter_mut().map(Iterator::next).collect();
    let mut heap = BinaryHeap::new();
    for (i, h) in heads.iter().enumerate() {
        if let Some(x) = h {
            heap.push(Reverse((key(x), i)));
        }
    }
    let mut out = Vec::with_capacity(total);
    while let Some(Reverse((_, i))) = heap.pop() {
        let x = heads[i].take().expect("head present while in heap");
        out.push(x);
        if let Some(next) = iters[i].next() {
            heap.push(Reverse((key(&next), i)));
            heads[i] = Some(next);
        }
    }
    out
}

/// Orders instance outputs into one deterministic sequence by event `seq`.
/// Replicated outputs of the same event are kept, ordered by instance.
pub fn merge(outputs: Vec<Vec<OutputRecord>>) -> Vec<OutputRecord> {
    debug_assert!(outputs
        .iter()
        .all(|o| o.windows(2).all(|w| w[0].seq <= w[1].seq)));
    merge_sorted_by(outputs, |r| (r.seq, r.instance))
}

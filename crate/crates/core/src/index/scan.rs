//! Bin scanning with shared-prefix reuse, and hit collection.

use std::collections::BinaryHeap;
use std::time::Duration;

use serde::Serialize;

use crate::ingest::{FragmentRef, SequenceStore};
use crate::query::QueryFunction;
use crate::{Value, INFINITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Hit {
    pub value: Value,
    pub fragment: FragmentRef,
}

/// Search results ordered by value, then by location.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HitList {
    pub entries: Vec<Hit>,
}

impl HitList {
    pub fn from_unsorted(mut entries: Vec<Hit>) -> Self {
        entries.sort_unstable();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<Value> {
        self.entries.iter().map(|h| h.value).collect()
    }

    /// Adds `shift` to every value.
    pub fn shifted(mut self, shift: Value) -> Self {
        for h in &mut self.entries {
            h.value += shift;
        }
        self
    }

    /// Largest value, the k-th smallest for a kNN result.
    pub fn max_value(&self) -> Option<Value> {
        self.entries.last().map(|h| h.value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Tree nodes whose lower bound was computed, the root included.
    pub nodes_visited: u64,
    /// Non-empty bins scanned.
    pub bins_scanned: u64,
    pub fragments_scanned: u64,
    /// Query positions evaluated during scans.
    pub residues_scanned: u64,
    pub hits: u64,
    pub elapsed: Duration,
}

/// Receives candidate hits; its radius may shrink as hits arrive.
pub trait HitSink {
    fn radius(&self) -> Value;
    fn offer(&mut self, fragment: FragmentRef, value: Value);
}

pub(crate) struct RangeSink {
    radius: Value,
    pub(crate) hits: Vec<Hit>,
}

impl RangeSink {
    pub(crate) fn new(radius: Value) -> Self {
        Self {
            radius,
            hits: Vec::new(),
        }
    }
}

impl HitSink for RangeSink {
    fn radius(&self) -> Value {
        self.radius
    }

    fn offer(&mut self, fragment: FragmentRef, value: Value) {
        debug_assert!(value <= self.radius);
        self.hits.push(Hit { value, fragment });
    }
}

/// Bounded max-heap of the `k` best hits.
///
/// A hit replaces the current worst only if strictly better, so among
/// equal values the first offered are kept. With `all_ties` every hit
/// equal to the final k-th value is returned as well.
pub(crate) struct KnnSink {
    k: usize,
    all_ties: bool,
    seq: u64,
    heap: BinaryHeap<(Value, u64, FragmentRef)>,
    ties: Vec<Hit>,
}

impl KnnSink {
    pub(crate) fn new(k: usize, all_ties: bool) -> Self {
        Self {
            k,
            all_ties,
            seq: 0,
            heap: BinaryHeap::with_capacity(k + 1),
            ties: Vec::new(),
        }
    }

    pub(crate) fn into_hits(self) -> Vec<Hit> {
        let mut hits: Vec<Hit> = self
            .heap
            .into_iter()
            .map(|(value, _, fragment)| Hit { value, fragment })
            .collect();
        hits.extend(self.ties);
        hits
    }
}

impl HitSink for KnnSink {
    fn radius(&self) -> Value {
        if self.heap.len() < self.k {
            return INFINITY;
        }
        let top = self.heap.peek().expect("heap is full").0;
        if self.all_ties {
            top
        } else {
            top - 1
        }
    }

    fn offer(&mut self, fragment: FragmentRef, value: Value) {
        self.seq += 1;
        if self.heap.len() < self.k {
            self.heap.push((value, self.seq, fragment));
            return;
        }
        let top = self.heap.peek().expect("heap is full").0;
        if value < top {
            let (old, _, old_fragment) = self.heap.pop().expect("heap is full");
            self.heap.push((value, self.seq, fragment));
            if self.all_ties {
                if self.heap.peek().expect("heap is full").0 < old {
                    self.ties.clear();
                } else {
                    self.ties.push(Hit {
                        value: old,
                        fragment: old_fragment,
                    });
                }
            }
        } else if value == top && self.all_ties {
            self.ties.push(Hit { value, fragment });
        }
    }
}

/// Evaluates `query` over the first `len` letters of the fragments in
/// `frag[lo..hi]`, reusing partial sums across shared prefixes.
///
/// `lcp[j]` is the prefix length `frag[j]` shares with `frag[j - 1]`. The
/// sums for the prefix shared with the next fragment are always computed;
/// the fragment is dropped as soon as that partial sum exceeds the radius,
/// which is sound because `query` is non-negative. Fragments with fewer
/// than `len` clean letters are never hits.
#[allow(clippy::too_many_arguments)]
pub(crate) fn scan_slots<S: HitSink>(
    store: &SequenceStore,
    frag: &[FragmentRef],
    lcp: &[u8],
    lo: usize,
    hi: usize,
    query: &QueryFunction,
    len: usize,
    cd: &mut Vec<Value>,
    stats: &mut SearchStats,
    sink: &mut S,
) {
    if lo >= hi {
        return;
    }
    if cd.len() < len + 1 {
        cd.resize(len + 1, 0);
    }
    cd[0] = 0;
    let mut valid = 0;
    for j in lo..hi {
        let f = frag[j];
        let shared = if j == lo { 0 } else { (lcp[j] as usize).min(len) };
        valid = valid.min(shared);
        let next = if j + 1 < hi { (lcp[j + 1] as usize).min(len) } else { 0 };
        let w = store.window(f, len);
        stats.fragments_scanned += 1;

        let mut k = valid;
        let stop = next.min(w.len());
        while k < stop {
            cd[k + 1] = cd[k] + query.value(k, w[k]);
            k += 1;
        }
        stats.residues_scanned += (k - valid) as u64;
        valid = k;

        let radius = sink.radius();
        if cd[k] > radius || w.len() < len {
            continue;
        }
        let start = k;
        let mut total = cd[k];
        while k < len {
            total += query.value(k, w[k]);
            k += 1;
        }
        stats.residues_scanned += (k - start) as u64;
        if total <= radius {
            stats.hits += 1;
            sink.offer(f, total);
        }
    }
}

//! Traversal of the implicit bin tree rooted at the query's own bin.
//!
//! A node is a bin; its children change one cluster rank at a position
//! after the one that produced the node, so every bin is reached exactly
//! once. Lower bounds only grow along edges, which makes pruning a subtree
//! at a node whose bound exceeds the radius safe.

use std::time::Instant;

use serde::Serialize;

use super::scan::{scan_slots, HitList, HitSink, KnnSink, RangeSink, SearchStats};
use super::FsIndex;
use crate::error::{Error, Result};
use crate::query::{normalize, LowerBoundTable, NormalizedQuery, QueryFunction};
use crate::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// All fragments with `f(x) <= epsilon`.
    Range(Value),
    /// The `k` fragments with the smallest values.
    Knn { k: usize, all_ties: bool },
}

/// Result of [`FsIndex::search`], values in the query's own units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub hits: HitList,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    Scanned,
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub rank: usize,
    pub bound: Value,
    pub kind: TraceKind,
}

struct Walk<'a, S> {
    index: &'a FsIndex,
    bounds: &'a LowerBoundTable,
    query: &'a QueryFunction,
    len: usize,
    span: usize,
    cd: Vec<Value>,
    stats: SearchStats,
    trace: Option<Vec<TraceEvent>>,
    sink: S,
}

impl<S: HitSink> Walk<'_, S> {
    fn record(&mut self, rank: usize, bound: Value, kind: TraceKind) {
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent { rank, bound, kind });
        }
    }

    fn run(&mut self) {
        let root = self.bounds.root_rank();
        let d = self.bounds.root_bound();
        self.stats.nodes_visited += 1;
        if d > self.sink.radius() {
            self.record(root, d, TraceKind::Pruned);
            return;
        }
        self.scan(root, d);
        self.check_node(root, d, 0);
    }

    fn scan(&mut self, u: usize, bound: Value) {
        self.record(u, bound, TraceKind::Scanned);
        let bin = &self.index.bin;
        let (lo, hi) = (bin[u] as usize, bin[u + self.span] as usize);
        if lo == hi {
            return;
        }
        self.stats.bins_scanned += if self.span == 1 {
            1
        } else {
            (u..u + self.span).filter(|&b| bin[b] != bin[b + 1]).count() as u64
        };
        scan_slots(
            &self.index.store,
            &self.index.frag,
            &self.index.lcp,
            lo,
            hi,
            self.query,
            self.len,
            &mut self.cd,
            &mut self.stats,
            &mut self.sink,
        );
    }

    fn check_node(&mut self, u: usize, d: Value, i: usize) {
        let bounds = self.bounds;
        for j in (i..bounds.depth()).rev() {
            let z = bounds.root_cluster(j);
            let size = bounds.bounds(j).len();
            if d.saturating_add(bounds.second_min(j)) > self.sink.radius() {
                if self.trace.is_some() {
                    for g in (0..size).filter(|&g| g != z) {
                        let v = u.wrapping_add_signed(bounds.rank_offset(j, g));
                        let e = d + bounds.bound(j, g) - bounds.bound(j, z);
                        self.record(v, e, TraceKind::Pruned);
                    }
                }
                continue;
            }
            for g in (0..size).filter(|&g| g != z) {
                let e = d + bounds.bound(j, g) - bounds.bound(j, z);
                let v = u.wrapping_add_signed(bounds.rank_offset(j, g));
                self.stats.nodes_visited += 1;
                if e > self.sink.radius() {
                    self.record(v, e, TraceKind::Pruned);
                    continue;
                }
                self.scan(v, e);
                self.check_node(v, e, j + 1);
            }
        }
    }
}

impl FsIndex {
    fn check_alphabet(&self, q: &NormalizedQuery) -> Result<()> {
        if q.base.alphabet_size() != self.scheme.alphabet().len() {
            return Err(Error::Query(format!(
                "query is over {} letters, index over {}",
                q.base.alphabet_size(),
                self.scheme.alphabet().len()
            )));
        }
        if q.is_empty() {
            return Err(Error::Query("query is empty".into()));
        }
        Ok(())
    }

    /// Runs the traversal for a query of any supported length.
    fn walk<S: HitSink>(
        &self,
        q: &NormalizedQuery,
        sink: S,
        trace: bool,
    ) -> Result<(S, SearchStats, Option<Vec<TraceEvent>>)> {
        self.check_alphabet(q)?;
        let start = Instant::now();
        let m = self.m();
        let len = q.len();
        let (bounds, span) = if len == m {
            (LowerBoundTable::new(q, &self.scheme)?, 1)
        } else if len > m {
            if self.suffix_floor.is_none() {
                return Err(Error::LengthMismatch {
                    query: len,
                    index: m,
                    reason: "queries longer than the index need a suffix-mode index",
                });
            }
            (LowerBoundTable::with_depth(q, &self.scheme, m), 1)
        } else {
            match self.suffix_floor {
                Some(floor) if floor <= len => {}
                _ => {
                    return Err(Error::LengthMismatch {
                        query: len,
                        index: m,
                        reason: "queries shorter than the index need a suffix-mode index whose floor is at most the query length",
                    })
                }
            }
            (
                LowerBoundTable::with_depth(q, &self.scheme, len),
                self.scheme.radix(len - 1),
            )
        };
        let mut walk = Walk {
            index: self,
            bounds: &bounds,
            query: &q.base,
            len,
            span,
            cd: vec![0; len + 1],
            stats: SearchStats::default(),
            trace: trace.then(Vec::new),
            sink,
        };
        walk.run();
        let mut stats = walk.stats;
        stats.elapsed = start.elapsed();
        Ok((walk.sink, stats, walk.trace))
    }

    fn require_length(&self, q: &NormalizedQuery, ok: bool, reason: &'static str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                query: q.len(),
                index: self.m(),
                reason,
            })
        }
    }

    fn range_walk(
        &self,
        q: &NormalizedQuery,
        epsilon: Value,
        trace: bool,
    ) -> Result<(HitList, SearchStats, Option<Vec<TraceEvent>>)> {
        let (sink, stats, events) = self.walk(q, RangeSink::new(epsilon), trace)?;
        Ok((HitList::from_unsorted(sink.hits), stats, events))
    }

    /// All fragments with `q(x) <= epsilon`; values and radius are in the
    /// normalized units of `q`.
    pub fn range_search(&self, q: &NormalizedQuery, epsilon: Value) -> Result<(HitList, SearchStats)> {
        self.require_length(q, q.len() == self.m(), "range search needs equal lengths")?;
        let (hits, stats, _) = self.range_walk(q, epsilon, false)?;
        Ok((hits, stats))
    }

    /// [`range_search`](Self::range_search) that also reports every bin
    /// scanned or pruned, in visiting order.
    pub fn traced_range_search(
        &self,
        q: &NormalizedQuery,
        epsilon: Value,
    ) -> Result<(HitList, SearchStats, Vec<TraceEvent>)> {
        self.require_length(q, q.len() == self.m(), "range search needs equal lengths")?;
        let (hits, stats, events) = self.range_walk(q, epsilon, true)?;
        Ok((hits, stats, events.unwrap_or_default()))
    }

    /// The `k` smallest values. Ties at the k-th value keep the fragments
    /// met first, unless `all_ties` asks for all of them.
    pub fn knn_search(&self, q: &NormalizedQuery, k: usize, all_ties: bool) -> Result<(HitList, SearchStats)> {
        self.require_length(q, q.len() == self.m(), "kNN search needs equal lengths")?;
        self.knn_walk(q, k, all_ties)
    }

    fn knn_walk(&self, q: &NormalizedQuery, k: usize, all_ties: bool) -> Result<(HitList, SearchStats)> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let (sink, stats, _) = self.walk(q, KnnSink::new(k, all_ties), false)?;
        Ok((HitList::from_unsorted(sink.into_hits()), stats))
    }

    /// Range search for a query longer than `m`: pruning uses its first `m`
    /// positions, scanning evaluates all of them.
    pub fn long_query_search(&self, q: &NormalizedQuery, epsilon: Value) -> Result<(HitList, SearchStats)> {
        self.require_length(
            q,
            q.len() >= self.m(),
            "long query search needs a query of at least m letters",
        )?;
        let (hits, stats, _) = self.range_walk(q, epsilon, false)?;
        Ok((hits, stats))
    }

    /// Range search for a query shorter than `m`: the tree is cut at the
    /// query length and each accepted node scans all bins below it.
    pub fn short_query_search(&self, q: &NormalizedQuery, epsilon: Value) -> Result<(HitList, SearchStats)> {
        self.require_length(
            q,
            q.len() <= self.m(),
            "short query search needs a query of at most m letters",
        )?;
        let (hits, stats, _) = self.range_walk(q, epsilon, false)?;
        Ok((hits, stats))
    }

    /// Normalizes `f`, picks the traversal for its length, and reports
    /// values in the units of `f`.
    pub fn search(&self, f: &QueryFunction, mode: SearchMode) -> Result<SearchOutcome> {
        let q = normalize(f);
        let (hits, stats) = match mode {
            SearchMode::Range(epsilon) => {
                let (hits, stats, _) = self.range_walk(&q, q.base_radius(epsilon), false)?;
                (hits, stats)
            }
            SearchMode::Knn { k, all_ties } => self.knn_walk(&q, k, all_ties)?,
        };
        Ok(SearchOutcome {
            hits: hits.shifted(q.shift),
            stats,
        })
    }
}

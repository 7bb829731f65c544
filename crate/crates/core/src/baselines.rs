//! Exhaustive oracles and the single-bin comparison method.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::index::{common_prefix, scan_slots, sort_fragments, Hit, HitList, RangeSink, SearchStats};
use crate::ingest::{FragmentRef, FragmentSource, SequenceStore};
use crate::matrix::{DistanceMatrix, ScoreMatrix, Symmetrization};
use crate::query::{NormalizedQuery, QueryFunction};
use crate::Value;

fn check_query<F: FragmentSource + ?Sized>(data: &F, q: &QueryFunction) -> Result<()> {
    if q.alphabet_size() != data.store().alphabet().len() {
        return Err(Error::Query(format!(
            "query is over {} letters, data over {}",
            q.alphabet_size(),
            data.store().alphabet().len()
        )));
    }
    Ok(())
}

/// Every `(fragment, f(x))` over fragments with at least `|q|` clean
/// letters, unsorted.
fn evaluate_all<'a, F: FragmentSource + ?Sized>(data: &'a F, q: &'a QueryFunction) -> impl Iterator<Item = Hit> + 'a {
    let store = data.store();
    let len = q.len();
    data.fragment_refs().iter().filter_map(move |&f| {
        let w = store.window(f, len);
        (w.len() == len).then(|| Hit {
            value: q.evaluate(w),
            fragment: f,
        })
    })
}

/// Evaluates `q` on every fragment and keeps those with `f(x) <= epsilon`.
///
/// Only fragments with at least `|q|` clean letters are considered.
pub fn linear_scan_range<F: FragmentSource + ?Sized>(data: &F, q: &QueryFunction, epsilon: Value) -> Result<HitList> {
    check_query(data, q)?;
    Ok(HitList::from_unsorted(
        evaluate_all(data, q).filter(|h| h.value <= epsilon).collect(),
    ))
}

/// The first `k` fragments by `(f(x), reference)`.
pub fn linear_scan_knn<F: FragmentSource + ?Sized>(data: &F, q: &QueryFunction, k: usize) -> Result<HitList> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    check_query(data, q)?;
    let mut hits = HitList::from_unsorted(evaluate_all(data, q).collect());
    hits.entries.truncate(k);
    Ok(hits)
}

/// All fragments sorted by content in one bin, searched by a single
/// shared-prefix scan.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    store: SequenceStore,
    m: usize,
    frag: Vec<FragmentRef>,
    lcp: Vec<u8>,
}

pub fn flat_build<F: FragmentSource + ?Sized>(data: &F) -> FlatIndex {
    let store = data.store().clone();
    let m = data.fragment_length();
    let mut frag = data.fragment_refs().to_vec();
    sort_fragments(&store, &mut frag, m);
    let mut lcp = vec![0u8; frag.len() + 1];
    for j in 1..frag.len() {
        lcp[j] = common_prefix(&store, frag[j - 1], frag[j], m) as u8;
    }
    FlatIndex { store, m, frag, lcp }
}

impl FlatIndex {
    pub fn len(&self) -> usize {
        self.frag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frag.is_empty()
    }

    pub fn frag(&self) -> &[FragmentRef] {
        &self.frag
    }

    pub fn lcp(&self) -> &[u8] {
        &self.lcp
    }

    pub fn store(&self) -> &SequenceStore {
        &self.store
    }
}

/// Range search over the flat index; `q` and `epsilon` are normalized.
pub fn flat_search(index: &FlatIndex, q: &NormalizedQuery, epsilon: Value) -> Result<(HitList, SearchStats)> {
    if q.len() != index.m {
        return Err(Error::LengthMismatch {
            query: q.len(),
            index: index.m,
            reason: "flat search needs equal lengths",
        });
    }
    if q.base.alphabet_size() != index.store.alphabet().len() {
        return Err(Error::Query("query and index alphabets differ".into()));
    }
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let mut sink = RangeSink::new(epsilon);
    let mut cd = vec![0; q.len() + 1];
    if !index.frag.is_empty() {
        stats.bins_scanned = 1;
    }
    scan_slots(
        &index.store,
        &index.frag,
        &index.lcp,
        0,
        index.frag.len(),
        &q.base,
        q.len(),
        &mut cd,
        &mut stats,
        &mut sink,
    );
    stats.elapsed = start.elapsed();
    Ok((HitList::from_unsorted(sink.hits), stats))
}

/// Fragments grouped by weight `w(x) = s(x, x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibrePartition {
    pub fibres: BTreeMap<Value, Vec<FragmentRef>>,
}

impl FibrePartition {
    /// Fragments with fewer than `m` clean letters are left out.
    pub fn new<F: FragmentSource + ?Sized>(data: &F, score: &ScoreMatrix) -> Self {
        let store = data.store();
        let m = data.fragment_length();
        let mut fibres: BTreeMap<Value, Vec<FragmentRef>> = BTreeMap::new();
        for &f in data.fragment_refs() {
            let w = store.window(f, m);
            if w.len() == m {
                fibres.entry(score.weight(w)).or_default().push(f);
            }
        }
        Self { fibres }
    }

    pub fn len(&self) -> usize {
        self.fibres.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fibres.is_empty()
    }
}

/// The ball `{x : d(ω, x) <= epsilon}` computed fibre by fibre.
///
/// Inside fibre `z` the symmetric distance `ρ(x, y) = (d(x,y) + d(y,x)) / 2`
/// is a metric, and the ball becomes `ρ(ω, x) <= epsilon + (z - w(ω)) / 2`.
/// Everything runs on doubled integers. Each fibre is scanned linearly.
pub fn fibre_range_query<F: FragmentSource + ?Sized>(
    data: &F,
    score: &ScoreMatrix,
    omega: &[u8],
    epsilon: Value,
) -> Result<HitList> {
    if !score.is_symmetric() {
        return Err(Error::NotQuasiMetric("score matrix is not symmetric".into()));
    }
    let d = DistanceMatrix::from_score(score)?;
    let report = d.check_quasi_metric();
    if !report.is_quasi_metric {
        return Err(Error::NotQuasiMetric(format!(
            "{} triangle violations",
            report.violation_count()
        )));
    }
    let m = data.fragment_length();
    if omega.len() != m {
        return Err(Error::LengthMismatch {
            query: omega.len(),
            index: m,
            reason: "fibre query needs equal lengths",
        });
    }
    let rho2 = d.symmetrize(Symmetrization::Average);
    let w_omega = score.weight(omega);
    let store = data.store();
    let partition = FibrePartition::new(data, score);
    let mut hits = Vec::new();
    for (&z, members) in &partition.fibres {
        let radius2 = 2 * epsilon + (z - w_omega);
        if radius2 < 0 {
            continue;
        }
        for &f in members {
            let r2 = rho2.distance(omega, store.window(f, m));
            if r2 <= radius2 {
                hits.push(Hit {
                    value: (r2 - (z - w_omega)) / 2,
                    fragment: f,
                });
            }
        }
    }
    Ok(HitList::from_unsorted(hits))
}

//! Benchmark protocol and report.
//!
//! For every query and every `k`, a kNN search fixes the radius (the k-th
//! smallest value) and a range search is then run at that radius. Rows
//! keep raw counters; aggregates are recomputed from rows only.

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{flat_search, linear_scan_knn, linear_scan_range, FlatIndex};
use crate::error::{Error, Result};
use crate::index::{FsIndex, HitList, IndexSummary, SearchMode, SearchStats};
use crate::ingest::FragmentSource;
use crate::query::{normalize, QueryFunction};
use crate::Value;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

/// Column order of [`BenchReport::rows_tsv`].
pub const TSV_HEADER: &str = "query\tlabel\tk\tradius\thits\tnodes_visited\tbins_scanned\tfragments_scanned\tresidues_scanned\trange_us\tknn_bins_scanned\tknn_fragments_scanned\tknn_us\tflat_residues_scanned\tflat_us\toracle";

pub struct BenchQuery {
    pub label: String,
    pub function: QueryFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusSource {
    /// Radius from a prior kNN search with this `k`.
    Knn(usize),
    /// Fixed radius, in query units.
    Fixed(Value),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub radii: Vec<RadiusSource>,
    /// Each search is repeated and the fastest time kept.
    pub repetitions: usize,
    pub oracle: bool,
    /// Record oracle mismatches instead of failing.
    pub no_assert: bool,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            radii: vec![RadiusSource::Knn(1)],
            repetitions: 1,
            oracle: false,
            no_assert: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub query: usize,
    pub label: String,
    pub k: Option<usize>,
    pub radius: Value,
    pub hits: usize,
    pub range: SearchStats,
    pub knn: Option<SearchStats>,
    pub flat: Option<SearchStats>,
    /// `None` when the oracle was not run.
    pub oracle_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatAggregate {
    pub mean_residues_scanned: f64,
    pub mean_overhead: f64,
    /// Mean flat residues over mean index residues.
    pub residue_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub radius: String,
    pub queries: usize,
    pub mean_bins_scanned: f64,
    pub median_bins_scanned: f64,
    pub mean_fragments_scanned: f64,
    pub median_fragments_scanned: f64,
    /// Mean of fragments scanned over fragments indexed.
    pub mean_fraction_scanned: f64,
    /// Mean of residues scanned over `m` × fragments scanned, as a percentage.
    /// Rows that scanned nothing are left out.
    pub mean_residue_percent: f64,
    /// Mean of fragments scanned over hits, over rows with hits.
    pub mean_overhead: f64,
    pub median_radius: f64,
    /// Mean of per-query kNN over range bin counts, over rows where the
    /// range search scanned a bin.
    pub mean_knn_range_bin_ratio: Option<f64>,
    pub mean_range_us: f64,
    pub mean_knn_us: Option<f64>,
    pub flat: Option<FlatAggregate>,
    pub oracle_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub index: IndexSummary,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

fn micros(s: &SearchStats) -> f64 {
    s.elapsed.as_secs_f64() * 1e6
}

fn radius_label(k: Option<usize>, radius: Value) -> String {
    match k {
        Some(k) => format!("knn{k}"),
        None => format!("eps{radius}"),
    }
}

/// Aggregates grouped by radius source, in order of first appearance.
pub fn aggregate(rows: &[BenchRow], n: usize, m: usize) -> Vec<Aggregate> {
    let mut groups: Vec<(String, Vec<&BenchRow>)> = Vec::new();
    for r in rows {
        let label = radius_label(r.k, r.radius);
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, g)) => g.push(r),
            None => groups.push((label, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(label, g)| {
            let bins: Vec<f64> = g.iter().map(|r| r.range.bins_scanned as f64).collect();
            let frags: Vec<f64> = g.iter().map(|r| r.range.fragments_scanned as f64).collect();
            let knn_ratio: Vec<f64> = g
                .iter()
                .filter_map(|r| {
                    let knn = r.knn.as_ref()?;
                    (r.range.bins_scanned > 0).then(|| knn.bins_scanned as f64 / r.range.bins_scanned as f64)
                })
                .collect();
            let flat = g.iter().all(|r| r.flat.is_some()).then(|| {
                let flat_res = mean(g.iter().map(|r| r.flat.as_ref().unwrap().residues_scanned as f64));
                let own_res = mean(g.iter().map(|r| r.range.residues_scanned as f64));
                FlatAggregate {
                    mean_residues_scanned: flat_res,
                    mean_overhead: mean(
                        g.iter()
                            .filter(|r| r.hits > 0)
                            .map(|r| r.flat.as_ref().unwrap().fragments_scanned as f64 / r.hits as f64),
                    ),
                    residue_ratio: if own_res == 0.0 {
                        f64::INFINITY
                    } else {
                        flat_res / own_res
                    },
                }
            });
            let has_knn = g.iter().all(|r| r.knn.is_some());
            Aggregate {
                radius: label,
                queries: g.len(),
                mean_bins_scanned: mean(bins.iter().copied()),
                median_bins_scanned: median(bins),
                mean_fragments_scanned: mean(frags.iter().copied()),
                median_fragments_scanned: median(frags.clone()),
                mean_fraction_scanned: if n == 0 {
                    0.0
                } else {
                    mean(frags.iter().map(|f| f / n as f64))
                },
                mean_residue_percent: mean(
                    g.iter().filter(|r| r.range.fragments_scanned > 0).map(|r| {
                        100.0 * r.range.residues_scanned as f64 / (m as f64 * r.range.fragments_scanned as f64)
                    }),
                ),
                mean_overhead: mean(
                    g.iter()
                        .filter(|r| r.hits > 0)
                        .map(|r| r.range.fragments_scanned as f64 / r.hits as f64),
                ),
                median_radius: median(g.iter().map(|r| r.radius as f64).collect()),
                mean_knn_range_bin_ratio: has_knn.then(|| mean(knn_ratio)),
                mean_range_us: mean(g.iter().map(|r| micros(&r.range))),
                mean_knn_us: has_knn.then(|| mean(g.iter().map(|r| micros(r.knn.as_ref().unwrap())))),
                flat,
                oracle_failures: g.iter().filter(|r| r.oracle_ok == Some(false)).count(),
            }
        })
        .collect()
}

fn repeat<T>(times: usize, mut run: impl FnMut() -> Result<(T, SearchStats)>) -> Result<(T, SearchStats)> {
    let (out, mut stats) = run()?;
    for _ in 1..times {
        let (_, again) = run()?;
        stats.elapsed = stats.elapsed.min(again.elapsed);
    }
    Ok((out, stats))
}

fn hits_triples(h: &HitList) -> Vec<(u32, u32, Value)> {
    h.entries
        .iter()
        .map(|h| (h.fragment.sequence, h.fragment.offset, h.value))
        .collect()
}

fn bench_query(
    index: &FsIndex,
    flat: Option<&FlatIndex>,
    config: &BenchConfig,
    qi: usize,
    query: &BenchQuery,
) -> Result<Vec<BenchRow>> {
    let f = &query.function;
    let reps = config.repetitions.max(1);
    let mut rows = Vec::new();
    for &source in &config.radii {
        let (k, radius, knn) = match source {
            RadiusSource::Knn(k) => {
                let (hits, stats) = repeat(reps, || {
                    let o = index.search(f, SearchMode::Knn { k, all_ties: false })?;
                    Ok((o.hits, o.stats))
                })?;
                let Some(radius) = hits.max_value() else {
                    continue;
                };
                (Some(k), radius, Some((hits, stats)))
            }
            RadiusSource::Fixed(e) => (None, e, None),
        };
        let (hits, range) = repeat(reps, || {
            let o = index.search(f, SearchMode::Range(radius))?;
            Ok((o.hits, o.stats))
        })?;
        let flat_stats = match flat {
            Some(flat) => {
                let q = normalize(f);
                Some(repeat(reps, || flat_search(flat, &q, q.base_radius(radius)))?.1)
            }
            None => None,
        };
        let oracle_ok = if config.oracle {
            let mut ok = hits_triples(&hits) == hits_triples(&linear_scan_range(index, f, radius)?);
            if let (Some(k), Some((knn_hits, _))) = (k, &knn) {
                ok &= knn_hits.values() == linear_scan_knn(index, f, k)?.values();
            }
            if !ok && !config.no_assert {
                return Err(Error::Assertion(format!(
                    "query {qi} ({}) at radius {radius}: index and oracle disagree",
                    query.label
                )));
            }
            Some(ok)
        } else {
            None
        };
        rows.push(BenchRow {
            query: qi,
            label: query.label.clone(),
            k,
            radius,
            hits: hits.len(),
            range,
            knn: knn.map(|(_, s)| s),
            flat: flat_stats,
            oracle_ok,
        });
    }
    Ok(rows)
}

/// Runs the protocol over `queries`. With `config.oracle` every result is
/// compared with a linear scan and a mismatch is an error unless
/// `config.no_assert` is set.
pub fn run_bench(
    index: &FsIndex,
    flat: Option<&FlatIndex>,
    queries: &[BenchQuery],
    config: &BenchConfig,
) -> Result<BenchReport> {
    let per_query: Vec<Result<Vec<BenchRow>>> = if config.parallel {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| bench_query(index, flat, config, i, q))
            .collect()
    } else {
        queries
            .iter()
            .enumerate()
            .map(|(i, q)| bench_query(index, flat, config, i, q))
            .collect()
    };
    let mut rows = Vec::new();
    for r in per_query {
        rows.extend(r?);
    }
    Ok(BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        index: index.summary(),
        aggregates: aggregate(&rows, index.len(), index.m()),
        rows,
    })
}

impl BenchReport {
    /// One line per row, columns as in [`TSV_HEADER`].
    pub fn rows_tsv(&self) -> String {
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        for r in &self.rows {
            let fields = [
                r.query.to_string(),
                r.label.clone(),
                opt(r.k.map(|k| k.to_string())),
                r.radius.to_string(),
                r.hits.to_string(),
                r.range.nodes_visited.to_string(),
                r.range.bins_scanned.to_string(),
                r.range.fragments_scanned.to_string(),
                r.range.residues_scanned.to_string(),
                format!("{:.1}", micros(&r.range)),
                opt(r.knn.as_ref().map(|s| s.bins_scanned.to_string())),
                opt(r.knn.as_ref().map(|s| s.fragments_scanned.to_string())),
                opt(r.knn.as_ref().map(|s| format!("{:.1}", micros(s)))),
                opt(r.flat.as_ref().map(|s| s.residues_scanned.to_string())),
                opt(r.flat.as_ref().map(|s| format!("{:.1}", micros(s)))),
                opt(r.oracle_ok.map(|ok| if ok { "ok" } else { "FAIL" }.to_string())),
            ];
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Re-evaluates `f` directly on up to `sample` hits spread over the list
/// and checks the reported values.
pub fn spot_audit<F: FragmentSource + ?Sized>(
    data: &F,
    f: &QueryFunction,
    hits: &HitList,
    sample: usize,
) -> Result<()> {
    if hits.is_empty() || sample == 0 {
        return Ok(());
    }
    let step = hits.len().div_ceil(sample).max(1);
    for h in hits.entries.iter().step_by(step) {
        let w = data.store().window(h.fragment, f.len());
        let direct = f.evaluate(w);
        if w.len() != f.len() || direct != h.value {
            return Err(Error::Assertion(format!(
                "hit at {}:{} reports {} but evaluates to {direct}",
                data.store().id(h.fragment.sequence),
                h.fragment.offset,
                h.value
            )));
        }
    }
    Ok(())
}

use std::fmt::Write;

use fsindex::index::IndexSummary;
use fsindex::ingest::{DatasetManifest, FragmentSource};
use fsindex::matrix::QuasiMetricReport;
use fsindex::{DistanceMatrix, FsIndex, ScoreMatrix, SearchMode, SearchOutcome, Value};
use serde_json::json;

pub const HITS_SCHEMA_VERSION: u32 = 1;

/// Violating triples listed in the text report.
const SAMPLE_TRIPLES: usize = 10;

pub fn build_manifest(manifest: &DatasetManifest, summary: &IndexSummary, bytes: u64) -> String {
    let value = json!({
        "records": manifest.records,
        "residues": manifest.residues,
        "fragments": manifest.fragments,
        "rejected_windows": manifest.rejected_windows,
        "m": summary.m,
        "bins": summary.bins,
        "empty_bins": summary.empty_bins,
        "largest_bin": summary.largest_bin,
        "suffix_floor": summary.suffix_floor,
        "partition": summary.partition,
        "bytes": bytes,
    });
    format!("{}\n", serde_json::to_string_pretty(&value).expect("plain JSON"))
}

fn fragment_text(index: &FsIndex, hit: &fsindex::Hit, len: usize) -> String {
    index.store().text(hit.fragment, len)
}

/// Columns: sequence id, offset, fragment, value, rank. Stats follow as
/// `#` lines.
pub fn hits_tsv(index: &FsIndex, outcome: &SearchOutcome, len: usize, epsilon: Option<Value>) -> String {
    let mut out = String::from("sequence_id\toffset\tfragment\tvalue\trank\n");
    for (rank, h) in outcome.hits.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            index.store().id(h.fragment.sequence),
            h.fragment.offset,
            fragment_text(index, h, len),
            h.value,
            rank + 1
        );
    }
    let s = &outcome.stats;
    if let Some(e) = epsilon {
        let _ = writeln!(out, "# epsilon\t{e}");
    }
    let _ = writeln!(out, "# hits\t{}", outcome.hits.len());
    let _ = writeln!(out, "# nodes_visited\t{}", s.nodes_visited);
    let _ = writeln!(out, "# bins_scanned\t{}", s.bins_scanned);
    let _ = writeln!(out, "# fragments_scanned\t{}", s.fragments_scanned);
    let _ = writeln!(out, "# residues_scanned\t{}", s.residues_scanned);
    let _ = writeln!(out, "# elapsed_us\t{:.1}", s.elapsed.as_secs_f64() * 1e6);
    out
}

pub fn hits_json(
    index: &FsIndex,
    outcome: &SearchOutcome,
    query: &str,
    len: usize,
    mode: SearchMode,
    epsilon: Option<Value>,
) -> anyhow::Result<String> {
    let hits: Vec<_> = outcome
        .hits
        .entries
        .iter()
        .enumerate()
        .map(|(rank, h)| {
            json!({
                "sequence_id": index.store().id(h.fragment.sequence),
                "offset": h.fragment.offset,
                "fragment": fragment_text(index, h, len),
                "value": h.value,
                "rank": rank + 1,
            })
        })
        .collect();
    let (mode_name, k, all_ties) = match mode {
        SearchMode::Range(_) => ("range", None, None),
        SearchMode::Knn { k, all_ties } => ("knn", Some(k), Some(all_ties)),
    };
    let s = &outcome.stats;
    let value = json!({
        "schema_version": HITS_SCHEMA_VERSION,
        "query": query,
        "mode": mode_name,
        "epsilon": epsilon,
        "k": k,
        "all_ties": all_ties,
        "hits": hits,
        "stats": {
            "nodes_visited": s.nodes_visited,
            "bins_scanned": s.bins_scanned,
            "fragments_scanned": s.fragments_scanned,
            "residues_scanned": s.residues_scanned,
            "hits": outcome.hits.len(),
            "elapsed_us": s.elapsed.as_secs_f64() * 1e6,
        },
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn matrix_report_text(name: &str, score: &ScoreMatrix, d: &DistanceMatrix, report: &QuasiMetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "matrix: {name}");
    let _ = writeln!(out, "letters: {}", score.alphabet());
    let _ = writeln!(out, "quasi-metric: {}", yes(report.is_quasi_metric));
    let _ = writeln!(
        out,
        "triangle violations: {} ({} ordered triples)",
        report.violation_count(),
        report.triangle_violations.len()
    );
    let code = |c: char| score.alphabet().code(c as u8).expect("letter from the matrix");
    for t in report.triangle_violations.iter().take(SAMPLE_TRIPLES) {
        let (a, b, c) = (code(t.a), code(t.b), code(t.c));
        let _ = writeln!(
            out,
            "  D({a},{c}) = {} > D({a},{b}) + D({b},{c}) = {} + {}",
            d.get(a, c),
            d.get(a, b),
            d.get(b, c),
            a = t.a,
            b = t.b,
            c = t.c,
        );
    }
    let _ = writeln!(out, "separation: {}", yes(report.separation_ok));
    let _ = writeln!(out, "score matrix symmetric: {}", yes(score.is_symmetric()));
    let _ = writeln!(out, "distance symmetric: {}", yes(report.is_symmetric));
    let _ = writeln!(
        out,
        "co-weightable: {}",
        yes(score.coweightability_defects().is_empty())
    );
    out
}

pub fn matrix_report_json(name: &str, score: &ScoreMatrix, report: &QuasiMetricReport) -> anyhow::Result<String> {
    let value = json!({
        "matrix": name,
        "letters": score.alphabet().as_str(),
        "quasi_metric": report.is_quasi_metric,
        "violation_count": report.violation_count(),
        "ordered_violations": report.triangle_violations,
        "separation": report.separation_ok,
        "nonnegative": report.nonneg_ok,
        "score_symmetric": score.is_symmetric(),
        "distance_symmetric": report.is_symmetric,
        "coweightable": score.coweightability_defects().is_empty(),
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

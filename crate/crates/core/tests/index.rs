mod common;

use common::*;
use fsindex::baselines::{linear_scan_knn, linear_scan_range};
use fsindex::index::{TraceEvent, TraceKind};
use fsindex::ingest::{extract_fragments, FragmentSource};
use fsindex::query::{distance_query, normalize};
use fsindex::{Alphabet, FsIndex, PartitionScheme, SearchMode, INFINITY};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXAMPLE_SCHEME: &str = "ac,bd";

fn sigma3_index() -> FsIndex {
    let words = all_words(b"abcd", 3);
    let ds = extract_fragments(&db_of(&words), &abcd(), 3, None).unwrap();
    FsIndex::build(ds, &PartitionScheme::parse(EXAMPLE_SCHEME, &abcd(), 3).unwrap()).unwrap()
}

#[test]
fn every_bin_of_sigma3_holds_eight() {
    let index = sigma3_index();
    index.audit().unwrap();
    assert_eq!(index.len(), 64);
    for u in 0..8 {
        assert_eq!(index.bin_range(u).len(), 8);
    }
}

#[test]
fn empty_dataset() {
    let ds = extract_fragments(&db_of(&["ab"]), &abcd(), 3, None).unwrap();
    let index = FsIndex::build(ds, &PartitionScheme::parse(EXAMPLE_SCHEME, &abcd(), 3).unwrap()).unwrap();
    index.audit().unwrap();
    assert!(index.bin_offsets().iter().all(|&b| b == 0));
    assert_eq!(index.lcp(), &[0]);
    let q = normalize(&distance_query(&example_distance(), b"\x00\x01\x03"));
    let (hits, _) = index.knn_search(&q, 3, false).unwrap();
    assert!(hits.is_empty());
}

#[test]
fn overlapping_duplicates_share_full_prefix() {
    let ds = extract_fragments(&db_of(&["aaaa"]), &abcd(), 3, None).unwrap();
    let index = FsIndex::build(ds, &PartitionScheme::parse(EXAMPLE_SCHEME, &abcd(), 3).unwrap()).unwrap();
    index.audit().unwrap();
    assert_eq!(index.len(), 2);
    assert_eq!(index.lcp(), &[0, 3, 0]);
    let q = normalize(&distance_query(&example_distance(), &abcd().encode(b"aaa").unwrap()));
    let (hits, stats) = index.range_search(&q, 0).unwrap();
    assert_eq!(hits.len(), 2);
    assert_eq!(stats.residues_scanned, 3);
}

#[test]
fn example_trace() {
    let index = sigma3_index();
    let omega = abcd().encode(b"abd").unwrap();
    let q = normalize(&distance_query(&example_distance(), &omega));
    assert_eq!(q.shift, 0);
    let (hits, stats, trace) = index.traced_range_search(&q, 7).unwrap();
    let scheme = index.scheme();
    let label = |e: &TraceEvent| scheme.bin_label(e.rank);
    let scanned: Vec<String> = trace
        .iter()
        .filter(|e| e.kind == TraceKind::Scanned)
        .map(label)
        .collect();
    assert_eq!(scanned, ["ac|bd|bd", "bd|bd|bd"]);
    let pruned: Vec<(String, i64)> = trace
        .iter()
        .filter(|e| e.kind == TraceKind::Pruned)
        .map(|e| (label(e), e.bound))
        .collect();
    assert_eq!(
        pruned,
        [
            ("ac|bd|ac".to_string(), 8),
            ("ac|ac|bd".to_string(), 8),
            ("bd|bd|ac".to_string(), 15),
            ("bd|ac|bd".to_string(), 15),
        ]
    );
    assert_eq!(stats.bins_scanned, 2);
    assert_eq!(stats.fragments_scanned, 16);
    let oracle = linear_scan_range(&index, &distance_query(&example_distance(), &omega), 7).unwrap();
    assert_eq!(triples(&hits), triples(&oracle));
}

#[test]
fn negative_radius_touches_nothing() {
    let index = sigma3_index();
    let q = normalize(&distance_query(&example_distance(), &[0, 1, 3]));
    let (hits, stats) = index.range_search(&q, -1).unwrap();
    assert!(hits.is_empty());
    assert_eq!((stats.nodes_visited, stats.fragments_scanned), (1, 0));
}

#[test]
fn knn_examples() {
    let index = sigma3_index();
    let f = distance_query(&example_distance(), &[0, 1, 3]);
    let q = normalize(&f);
    let (hits, _) = index.knn_search(&q, 1, false).unwrap();
    assert_eq!(hits.values(), [0]);
    let (hits, _) = index.knn_search(&q, 10, false).unwrap();
    assert_eq!(hits.values(), linear_scan_knn(&index, &f, 10).unwrap().values());
    let (hits, _) = index.knn_search(&q, 100, false).unwrap();
    assert_eq!(hits.len(), 64);
    assert!(index.knn_search(&q, 0, false).is_err());

    let all = linear_scan_range(&index, &f, INFINITY).unwrap().values();
    for k in 1..=64 {
        let (ties, _) = index.knn_search(&q, k, true).unwrap();
        let kth = all[k - 1];
        assert_eq!(
            ties.values(),
            all.iter().copied().filter(|&v| v <= kth).collect::<Vec<_>>()
        );
    }
}

#[test]
fn length_mismatch_is_reported() {
    let index = sigma3_index();
    let q = normalize(&distance_query(&example_distance(), &[0, 1]));
    assert!(index.range_search(&q, 5).is_err());
    assert!(index.short_query_search(&q, 5).is_err());
    let q = normalize(&distance_query(&example_distance(), &[0, 1, 2, 3]));
    assert!(index.long_query_search(&q, 5).is_err());
}

fn check_against_oracles(seed: u64, sigma_letters: &str, m: usize, records: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = Alphabet::new(sigma_letters).unwrap();
    let db = random_db(&mut rng, &alphabet, records, 60, 0.02);
    let ds = extract_fragments(&db, &alphabet, m, None).unwrap();
    let scheme = random_scheme(&mut rng, &alphabet, m, 6);
    let index = FsIndex::build(ds, &scheme).unwrap();
    index.audit().unwrap();
    for _ in 0..4 {
        let f = if rng.random_bool(0.5) {
            random_pssm(&mut rng, alphabet.len(), m)
        } else {
            let omega: Vec<u8> = (0..m).map(|_| rng.random_range(0..alphabet.len()) as u8).collect();
            distance_query(&random_distance(&mut rng, &alphabet), &omega)
        };
        let all = linear_scan_range(&index, &f, INFINITY).unwrap();
        let eps = if all.is_empty() {
            0
        } else {
            all.entries[rng.random_range(0..all.len())].value
        };
        let got = index.search(&f, SearchMode::Range(eps)).unwrap();
        assert_eq!(
            triples(&got.hits),
            triples(&linear_scan_range(&index, &f, eps).unwrap())
        );
        assert!(got.stats.residues_scanned <= m as u64 * got.stats.fragments_scanned);
        assert!(got.stats.hits <= got.stats.fragments_scanned);
        for k in [1, 10, 50] {
            let got = index.search(&f, SearchMode::Knn { k, all_ties: false }).unwrap();
            assert_eq!(got.hits.values(), linear_scan_knn(&index, &f, k).unwrap().values());
        }
    }
}

#[test]
fn random_indexes_match_linear_scan() {
    for seed in 0..12 {
        check_against_oracles(seed, "abcd", [3, 4, 6][seed as usize % 3], 40);
        check_against_oracles(
            seed + 100,
            fsindex::alphabet::PROTEIN_LETTERS,
            [3, 4][seed as usize % 2],
            40,
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn range_equals_oracle(seed in any::<u64>(), m in 2usize..6) {
        check_against_oracles(seed, "abcd", m, 20);
    }

    #[test]
    fn pruned_subtrees_hold_no_hits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = abcd();
        let m = 3;
        let db = random_db(&mut rng, &alphabet, 30, 30, 0.0);
        let scheme = random_scheme(&mut rng, &alphabet, m, 3);
        let index = FsIndex::build(extract_fragments(&db, &alphabet, m, None).unwrap(), &scheme).unwrap();
        let f = random_pssm(&mut rng, 4, m);
        let q = normalize(&f);
        let eps = rng.random_range(0..20);
        let (_, _, trace) = index.traced_range_search(&q, eps).unwrap();
        let table = fsindex::LowerBoundTable::new(&q, &scheme).unwrap();
        let root = scheme.digits(table.root_rank());
        for e in trace.iter().filter(|e| e.kind == TraceKind::Pruned) {
            prop_assert!(e.bound > eps);
            let node = scheme.digits(e.rank);
            prop_assert_eq!(e.bound, table.bin_bound(&node));
            // descendants change only positions after the last one that
            // differs from the root; at worst, every bin matching the node
            // on the positions up to that one
            let last = (0..m).rev().find(|&i| node[i] != root[i]).unwrap_or(0);
            for &fr in index.fragment_refs() {
                let w = index.store().window(fr, m);
                let d = scheme.digits(scheme.bin_of(w));
                if d[..=last] == node[..=last] {
                    prop_assert!(q.base.evaluate(w) > eps);
                }
            }
        }
    }
}

#[test]
fn variable_length_queries_match_sliding_windows() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = if seed % 2 == 0 { abcd() } else { Alphabet::protein() };
        let m = rng.random_range(3..6);
        let db = random_db(&mut rng, &alphabet, 30, 40, 0.03);
        let ds = extract_fragments(&db, &alphabet, m, Some(1)).unwrap();
        let scheme = random_scheme(&mut rng, &alphabet, m, 5);
        let index = FsIndex::build(ds, &scheme).unwrap();
        index.audit().unwrap();
        for len in [m - 1, m, m + 1, m + 3] {
            let f = random_pssm(&mut rng, alphabet.len(), len);
            let all = sliding_window_oracle(&db, &alphabet, &f, INFINITY);
            let eps = if all.is_empty() {
                5
            } else {
                all[rng.random_range(0..all.len())].2
            };
            let expected = sliding_window_oracle(&db, &alphabet, &f, eps);
            let got = index.search(&f, SearchMode::Range(eps)).unwrap();
            assert_eq!(triples(&got.hits), expected, "seed {seed} m {m} len {len}");
            let q = normalize(&f);
            let direct = if len < m {
                index.short_query_search(&q, q.base_radius(eps))
            } else {
                index.long_query_search(&q, q.base_radius(eps))
            }
            .unwrap();
            assert_eq!(triples(&direct.0.shifted(q.shift)), expected);
            let k = 7;
            let knn = index.search(&f, SearchMode::Knn { k, all_ties: false }).unwrap();
            let mut values: Vec<_> = all.iter().map(|t| t.2).collect();
            values.sort();
            values.truncate(k);
            assert_eq!(knn.hits.values(), values);
        }
    }
}

#[test]
fn variable_length_needs_suffix_mode() {
    let ds = extract_fragments(&db_of(&["abcdabcd"]), &abcd(), 3, None).unwrap();
    let index = FsIndex::build(ds, &PartitionScheme::parse(EXAMPLE_SCHEME, &abcd(), 3).unwrap()).unwrap();
    let f = distance_query(&example_distance(), &[0, 1, 2, 3]);
    assert!(index.search(&f, SearchMode::Range(10)).is_err());
    let f = distance_query(&example_distance(), &[0, 1]);
    assert!(index.search(&f, SearchMode::Range(10)).is_err());

    let ds = extract_fragments(&db_of(&["abcdabcd"]), &abcd(), 3, Some(3)).unwrap();
    let index = FsIndex::build(ds, &PartitionScheme::parse(EXAMPLE_SCHEME, &abcd(), 3).unwrap()).unwrap();
    assert!(index.search(&f, SearchMode::Range(10)).is_err());
}

#[test]
fn short_query_scans_contiguous_ranges() {
    let alphabet = abcd();
    let scheme = PartitionScheme::parse("ab,cd", &alphabet, 4).unwrap();
    // depth-2 node (d0, d1): all bins with those leading digits are
    // consecutive ranks
    for d0 in 0..2 {
        for d1 in 0..2 {
            let lo = scheme.rank(&[d0, d1, 0, 0]);
            let hi = scheme.rank(&[d0, d1, 1, 1]) + 1;
            assert_eq!(hi - lo, scheme.radix(1));
            for r in lo..hi {
                assert_eq!(&scheme.digits(r)[..2], &[d0, d1]);
            }
        }
    }
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = Alphabet::protein();
        let m = 4;
        let db = random_db(&mut rng, &alphabet, 20, 50, 0.05);
        let floor = if seed % 2 == 0 { None } else { Some(2) };
        let ds = extract_fragments(&db, &alphabet, m, floor).unwrap();
        let index = FsIndex::build(ds, &random_scheme(&mut rng, &alphabet, m, 4)).unwrap();
        let path = dir.path().join(format!("i{seed}.fsx"));
        index.save(&path).unwrap();
        let loaded = FsIndex::load(&path).unwrap();
        loaded.audit().unwrap();
        assert_eq!(loaded, index);
        assert_eq!(loaded.to_bytes(), std::fs::read(&path).unwrap());
        let f = random_pssm(&mut rng, 20, m);
        for mode in [SearchMode::Range(10), SearchMode::Knn { k: 5, all_ties: true }] {
            assert_eq!(
                index.search(&f, mode).unwrap().hits,
                loaded.search(&f, mode).unwrap().hits
            );
        }
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let bytes = sigma3_index().to_bytes();
    assert!(FsIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(FsIndex::from_bytes(b"nonsense").is_err());
    let mut bad = bytes.clone();
    bad[8] = 9;
    assert!(FsIndex::from_bytes(&bad).is_err());
    let mut extra = bytes;
    extra.push(0);
    assert!(FsIndex::from_bytes(&extra).is_err());
}

#![allow(dead_code)]

use fsindex::ingest::{SequenceDb, SequenceRecord};
use fsindex::query::QueryFunction;
use fsindex::{Alphabet, DistanceMatrix, PartitionScheme, ScoreMatrix, Value};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EXAMPLE_SCORES: &str = "\
   a  b  c  d
a  5 -3  2 -2
b -3  5 -4  3
c  2 -4  6 -4
d -2  3 -4  6
";

pub fn abcd() -> Alphabet {
    Alphabet::new("abcd").unwrap()
}

pub fn example_scores() -> ScoreMatrix {
    ScoreMatrix::parse(EXAMPLE_SCORES, Some(&abcd())).unwrap()
}

pub fn example_distance() -> DistanceMatrix {
    DistanceMatrix::from_score(&example_scores()).unwrap()
}

/// Records named s0, s1, ... from letter strings.
pub fn db_of<S: AsRef<[u8]>>(seqs: &[S]) -> SequenceDb {
    let records = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| SequenceRecord {
            id: format!("s{i}"),
            residues: s.as_ref().to_vec(),
        })
        .collect();
    SequenceDb::from_records(records).unwrap()
}

/// All words of length `m` over `letters`.
pub fn all_words(letters: &[u8], m: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|w: Vec<u8>| {
                letters.iter().map(move |&c| {
                    let mut w = w.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

/// Random sequences over `alphabet`, with an occasional foreign `X`.
pub fn random_db(rng: &mut impl Rng, alphabet: &Alphabet, records: usize, max_len: usize, foreign: f64) -> SequenceDb {
    let seqs: Vec<Vec<u8>> = (0..records)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| {
                    if rng.random_bool(foreign) {
                        b'X'
                    } else {
                        alphabet.letter(rng.random_range(0..alphabet.len()) as u8)
                    }
                })
                .collect()
        })
        .collect();
    db_of(&seqs)
}

/// A partition with between 2 and `max_clusters` clusters per position.
pub fn random_scheme(rng: &mut impl Rng, alphabet: &Alphabet, m: usize, max_clusters: usize) -> PartitionScheme {
    let specs: Vec<String> = (0..m)
        .map(|_| {
            let k = rng.random_range(2..=max_clusters.min(alphabet.len() - 1).max(2));
            let mut letters = alphabet.letters().to_vec();
            letters.shuffle(rng);
            let mut clusters = vec![String::new(); k];
            for (i, &l) in letters.iter().enumerate() {
                let c = if i < k { i } else { rng.random_range(0..k) };
                clusters[c].push(l as char);
            }
            clusters.join(",")
        })
        .collect();
    PartitionScheme::parse(&specs.join(";"), alphabet, m).unwrap()
}

/// Random additive query, possibly with negative entries.
pub fn random_pssm(rng: &mut impl Rng, sigma: usize, m: usize) -> QueryFunction {
    let cols: Vec<Vec<Value>> = (0..m)
        .map(|_| (0..sigma).map(|_| rng.random_range(-6..=9)).collect())
        .collect();
    fsindex::query::pssm_query(sigma, &cols).unwrap()
}

/// Random non-negative distance table with a zero diagonal.
pub fn random_distance(rng: &mut impl Rng, alphabet: &Alphabet) -> DistanceMatrix {
    let n = alphabet.len();
    let rows: Vec<Vec<Value>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| if a == b { 0 } else { rng.random_range(0..=12) })
                .collect()
        })
        .collect();
    DistanceMatrix::from_rows(alphabet.clone(), &rows).unwrap()
}

/// Sorted `(record, offset, value)` over every window of `q.len()` letters
/// of `alphabet` in `db`, straight from the raw residues.
pub fn sliding_window_oracle(
    db: &SequenceDb,
    alphabet: &Alphabet,
    q: &QueryFunction,
    epsilon: Value,
) -> Vec<(u32, u32, Value)> {
    let len = q.len();
    let mut out = Vec::new();
    for (s, r) in db.records().iter().enumerate() {
        if r.residues.len() < len {
            continue;
        }
        for o in 0..=r.residues.len() - len {
            if let Ok(codes) = alphabet.encode(&r.residues[o..o + len]) {
                let v = q.evaluate(&codes);
                if v <= epsilon {
                    out.push((s as u32, o as u32, v));
                }
            }
        }
    }
    out.sort_by_key(|&(s, o, v)| (v, s, o));
    out
}

pub fn triples(hits: &fsindex::HitList) -> Vec<(u32, u32, Value)> {
    let mut v: Vec<_> = hits
        .entries
        .iter()
        .map(|h| (h.fragment.sequence, h.fragment.offset, h.value))
        .collect();
    v.sort_by_key(|&(s, o, v)| (v, s, o));
    v
}

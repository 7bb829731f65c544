//! FASTA ingestion, fragment extraction and benchmark query sampling.

use std::collections::HashSet;
use std::io::BufRead;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alphabet::{Alphabet, INVALID};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    pub residues: Vec<u8>,
}

/// Named sequences in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceDb {
    records: Vec<SequenceRecord>,
    total_residues: usize,
}

impl SequenceDb {
    /// Residues are stored as given; identifiers must be unique and
    /// sequences non-empty.
    pub fn from_records(records: Vec<SequenceRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Fasta {
                    line: 0,
                    message: format!("duplicate identifier {:?}", r.id),
                });
            }
            if r.residues.is_empty() {
                return Err(Error::Fasta {
                    line: 0,
                    message: format!("record {:?} has no residues", r.id),
                });
            }
        }
        if records.len() > u32::MAX as usize {
            return Err(Error::Fasta {
                line: 0,
                message: "too many records".into(),
            });
        }
        let total_residues = records.iter().map(|r| r.residues.len()).sum();
        Ok(Self {
            records,
            total_residues,
        })
    }

    pub fn records(&self) -> &[SequenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_residues(&self) -> usize {
        self.total_residues
    }
}

/// Parses FASTA: `>` header lines followed by residue lines.
///
/// The identifier is the first whitespace-delimited token of the header.
/// Whitespace inside sequence lines is dropped and letters are uppercased.
pub fn parse_fasta<R: BufRead>(reader: R) -> Result<SequenceDb> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut seen = HashSet::new();
    let mut header_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            if let Some(last) = records.last() {
                if last.residues.is_empty() {
                    return Err(Error::Fasta {
                        line: header_line,
                        message: format!("record {:?} has no residues", last.id),
                    });
                }
            }
            let id = header.split_whitespace().next().unwrap_or_default().to_string();
            if id.is_empty() {
                return Err(Error::Fasta {
                    line: lineno,
                    message: "header has no identifier".into(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Fasta {
                    line: lineno,
                    message: format!("duplicate identifier {id:?}"),
                });
            }
            header_line = lineno;
            records.push(SequenceRecord {
                id,
                residues: Vec::new(),
            });
        } else if !line.trim().is_empty() {
            let Some(record) = records.last_mut() else {
                return Err(Error::Fasta {
                    line: lineno,
                    message: "sequence data before the first header".into(),
                });
            };
            record.residues.extend(
                line.bytes()
                    .filter(|b| !b.is_ascii_whitespace())
                    .map(|b| b.to_ascii_uppercase()),
            );
        }
    }
    match records.last() {
        None => Err(Error::Fasta {
            line: 0,
            message: "no records".into(),
        }),
        Some(last) if last.residues.is_empty() => Err(Error::Fasta {
            line: header_line,
            message: format!("record {:?} has no residues", last.id),
        }),
        _ => SequenceDb::from_records(records),
    }
}

/// Location of a fragment: sequence ordinal and start offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FragmentRef {
    pub sequence: u32,
    pub offset: u32,
}

impl FragmentRef {
    pub fn new(sequence: u32, offset: u32) -> Self {
        Self { sequence, offset }
    }

    /// Sequence id in the high 32 bits, offset in the low 32.
    pub fn pack(self) -> u64 {
        (self.sequence as u64) << 32 | self.offset as u64
    }

    pub fn unpack(v: u64) -> Self {
        Self {
            sequence: (v >> 32) as u32,
            offset: v as u32,
        }
    }
}

/// Sequences encoded against an alphabet, concatenated for locality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceStore {
    alphabet: Alphabet,
    ids: Vec<String>,
    residues: Vec<u8>,
    codes: Vec<u8>,
    starts: Vec<usize>,
    // clean-run length from each position, saturating at 255
    clean: Vec<u8>,
}

impl SequenceStore {
    pub fn new(db: &SequenceDb, alphabet: &Alphabet) -> Self {
        let mut ids = Vec::with_capacity(db.len());
        let mut residues = Vec::with_capacity(db.total_residues());
        let mut starts = Vec::with_capacity(db.len() + 1);
        for r in db.records() {
            starts.push(residues.len());
            ids.push(r.id.clone());
            residues.extend_from_slice(&r.residues);
        }
        starts.push(residues.len());
        let codes: Vec<u8> = residues.iter().map(|&b| alphabet.code_or_invalid(b)).collect();
        let mut clean = vec![0u8; codes.len()];
        for s in 0..ids.len() {
            let mut run = 0u8;
            for p in (starts[s]..starts[s + 1]).rev() {
                run = if codes[p] == INVALID { 0 } else { run.saturating_add(1) };
                clean[p] = run;
            }
        }
        Self {
            alphabet: alphabet.clone(),
            ids,
            residues,
            codes,
            starts,
            clean,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_sequences(&self) -> usize {
        self.ids.len()
    }

    pub fn id(&self, sequence: u32) -> &str {
        &self.ids[sequence as usize]
    }

    pub fn sequence_len(&self, sequence: u32) -> usize {
        self.starts[sequence as usize + 1] - self.starts[sequence as usize]
    }

    pub fn total_residues(&self) -> usize {
        self.residues.len()
    }

    /// Encoded residues of one whole sequence; foreign letters are [`INVALID`].
    pub fn sequence_codes(&self, sequence: u32) -> &[u8] {
        let s = sequence as usize;
        &self.codes[self.starts[s]..self.starts[s + 1]]
    }

    pub fn sequence_residues(&self, sequence: u32) -> &[u8] {
        let s = sequence as usize;
        &self.residues[self.starts[s]..self.starts[s + 1]]
    }

    /// Number of consecutive alphabet letters starting at `fragment`,
    /// counted up to `cap`.
    #[inline]
    pub fn clean_len(&self, fragment: FragmentRef, cap: usize) -> usize {
        let p = self.starts[fragment.sequence as usize] + fragment.offset as usize;
        let quick = self.clean[p] as usize;
        if quick < u8::MAX as usize || cap <= quick {
            return quick.min(cap);
        }
        let end = self.starts[fragment.sequence as usize + 1].min(p + cap);
        self.codes[p..end].iter().position(|&c| c == INVALID).unwrap_or(end - p)
    }

    /// Encoded letters of `fragment`, truncated to `len` and to its clean run.
    #[inline]
    pub fn window(&self, fragment: FragmentRef, len: usize) -> &[u8] {
        let p = self.starts[fragment.sequence as usize] + fragment.offset as usize;
        &self.codes[p..p + self.clean_len(fragment, len)]
    }

    /// Raw residue text of `len` letters from `fragment`, clipped at the
    /// sequence end.
    pub fn text(&self, fragment: FragmentRef, len: usize) -> String {
        let s = fragment.sequence as usize;
        let p = self.starts[s] + fragment.offset as usize;
        let end = self.starts[s + 1].min(p + len);
        String::from_utf8_lossy(&self.residues[p..end]).into_owned()
    }

    /// Reconstructs the source records.
    pub fn to_db(&self) -> SequenceDb {
        let records = (0..self.ids.len())
            .map(|s| SequenceRecord {
                id: self.ids[s].clone(),
                residues: self.residues[self.starts[s]..self.starts[s + 1]].to_vec(),
            })
            .collect();
        SequenceDb::from_records(records).expect("store came from a valid db")
    }
}

/// Anything that exposes fragment occurrences over a sequence store.
pub trait FragmentSource {
    fn store(&self) -> &SequenceStore;
    /// Index fragment length `m`.
    fn fragment_length(&self) -> usize;
    fn fragment_refs(&self) -> &[FragmentRef];
}

/// All clean length-`m` windows of a database (plus shorter suffixes in
/// suffix mode), in record-then-offset order.
#[derive(Debug, Clone)]
pub struct FragmentDataset {
    store: SequenceStore,
    m: usize,
    fragments: Vec<FragmentRef>,
    suffix_floor: Option<usize>,
    rejected: usize,
}

impl FragmentSource for FragmentDataset {
    fn store(&self) -> &SequenceStore {
        &self.store
    }

    fn fragment_length(&self) -> usize {
        self.m
    }

    fn fragment_refs(&self) -> &[FragmentRef] {
        &self.fragments
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetManifest {
    pub records: usize,
    pub residues: usize,
    pub fragments: usize,
    pub rejected_windows: usize,
}

impl FragmentDataset {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn suffix_floor(&self) -> Option<usize> {
        self.suffix_floor
    }

    /// Full-length windows dropped because they contain a foreign letter.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            records: self.store.num_sequences(),
            residues: self.store.total_residues(),
            fragments: self.fragments.len(),
            rejected_windows: self.rejected,
        }
    }

    pub fn into_parts(self) -> (SequenceStore, Vec<FragmentRef>) {
        (self.store, self.fragments)
    }
}

/// Slides a width-`m` window over every sequence, keeping windows made only
/// of alphabet letters.
///
/// With `suffix_floor = Some(f)` a position whose clean run is shorter than
/// `m` but at least `f` letters is also kept, as a short fragment. The run
/// ends at the sequence end or at the first foreign letter.
pub fn extract_fragments(
    db: &SequenceDb,
    alphabet: &Alphabet,
    m: usize,
    suffix_floor: Option<usize>,
) -> Result<FragmentDataset> {
    if m == 0 {
        return Err(Error::Query("fragment length must be at least 1".into()));
    }
    if let Some(f) = suffix_floor {
        if f == 0 || f > m {
            return Err(Error::Query(format!("suffix floor {f} outside 1..={m}")));
        }
    }
    let store = SequenceStore::new(db, alphabet);
    let mut fragments = Vec::new();
    let mut rejected = 0;
    for s in 0..store.num_sequences() as u32 {
        let len = store.sequence_len(s);
        if len > u32::MAX as usize {
            return Err(Error::Query(format!("sequence {} is too long", store.id(s))));
        }
        for offset in 0..len {
            let fragment = FragmentRef::new(s, offset as u32);
            let run = store.clean_len(fragment, m);
            if run == m {
                fragments.push(fragment);
                continue;
            }
            if offset + m <= len {
                rejected += 1;
            }
            if suffix_floor.is_some_and(|f| run >= f) {
                fragments.push(fragment);
            }
        }
    }
    Ok(FragmentDataset {
        store,
        m,
        fragments,
        suffix_floor,
        rejected,
    })
}

/// Amino-acid background frequencies (Robinson & Robinson, 1991).
pub const BACKGROUND_FREQUENCIES: [(u8, f64); 20] = [
    (b'A', 0.07805),
    (b'R', 0.05129),
    (b'N', 0.04487),
    (b'D', 0.05364),
    (b'C', 0.01925),
    (b'Q', 0.04264),
    (b'E', 0.06295),
    (b'G', 0.07377),
    (b'H', 0.02199),
    (b'I', 0.05142),
    (b'L', 0.09019),
    (b'K', 0.05744),
    (b'M', 0.02243),
    (b'F', 0.03856),
    (b'P', 0.05203),
    (b'S', 0.07120),
    (b'T', 0.05841),
    (b'W', 0.01330),
    (b'Y', 0.03216),
    (b'V', 0.06441),
];

/// [`BACKGROUND_FREQUENCIES`] in the ordinal order of `alphabet`,
/// renormalized to sum to one.
pub fn background_frequencies(alphabet: &Alphabet) -> Result<Vec<f64>> {
    let mut freqs = vec![0.0; alphabet.len()];
    for &(letter, f) in &BACKGROUND_FREQUENCIES {
        let code = alphabet
            .code(letter)
            .ok_or(Error::UnknownLetter { letter: letter as char })?;
        freqs[code as usize] = f;
    }
    if freqs.contains(&0.0) {
        return Err(Error::Sampling("alphabet is not the amino-acid alphabet".into()));
    }
    let total: f64 = freqs.iter().sum();
    Ok(freqs.into_iter().map(|f| f / total).collect())
}

pub enum QuerySource<'a> {
    /// i.i.d. letters with these per-ordinal frequencies.
    Background(&'a [f64]),
    /// Non-overlapping clean windows of these sequences.
    HeldOut(&'a SequenceDb),
}

/// Draws `count` encoded query fragments of length `m`, deterministically
/// for a given `seed`.
pub fn sample_queries(
    source: QuerySource<'_>,
    alphabet: &Alphabet,
    m: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<u8>>> {
    if count == 0 || m == 0 {
        return Err(Error::Sampling("count and length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match source {
        QuerySource::Background(freqs) => {
            if freqs.len() != alphabet.len() {
                return Err(Error::Sampling(format!(
                    "{} frequencies for a {}-letter alphabet",
                    freqs.len(),
                    alphabet.len()
                )));
            }
            if freqs.iter().any(|f| !f.is_finite() || *f < 0.0) {
                return Err(Error::Sampling("frequencies must be finite and non-negative".into()));
            }
            let total: f64 = freqs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Sampling(format!("frequencies sum to {total}, not 1")));
            }
            let lattice: Vec<u64> = freqs.iter().map(|f| (f * (1u64 << 32) as f64).round() as u64).collect();
            let dist = WeightedIndex::new(&lattice).map_err(|e| Error::Sampling(format!("bad frequencies: {e}")))?;
            Ok((0..count)
                .map(|_| (0..m).map(|_| dist.sample(&mut rng) as u8).collect())
                .collect())
        }
        QuerySource::HeldOut(db) => {
            let store = SequenceStore::new(db, alphabet);
            let mut windows = Vec::new();
            for s in 0..store.num_sequences() as u32 {
                let len = store.sequence_len(s);
                let mut offset = 0;
                while offset + m <= len {
                    let f = FragmentRef::new(s, offset as u32);
                    if store.clean_len(f, m) == m {
                        windows.push(f);
                        offset += m;
                    } else {
                        offset += 1;
                    }
                }
            }
            if count > windows.len() {
                return Err(Error::Sampling(format!(
                    "requested {count} windows but only {} non-overlapping windows exist",
                    windows.len()
                )));
            }
            windows.shuffle(&mut rng);
            Ok(windows[..count].iter().map(|&f| store.window(f, m).to_vec()).collect())
        }
    }
}

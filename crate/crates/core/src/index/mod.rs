//! The bin-partitioned fragment index.
//!
//! `frag` lists every fragment grouped by bin rank and sorted by content
//! within a bin; `bin[u]..bin[u + 1]` is the slot range of bin `u`; `lcp[j]`
//! is the prefix length slot `j` shares with slot `j - 1` inside its bin.

mod io;
mod scan;
mod search;
mod sort;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{FragmentDataset, FragmentRef, FragmentSource, SequenceStore};
use crate::partition::PartitionScheme;

pub use scan::{Hit, HitList, HitSink, SearchStats};
pub use search::{SearchMode, SearchOutcome, TraceEvent, TraceKind};

pub(crate) use scan::{scan_slots, RangeSink};
pub(crate) use sort::{common_prefix, sort_fragments};

/// Largest bin count accepted by [`FsIndex::build`]; the offset table alone
/// takes four bytes per bin.
pub const MAX_BINS: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsIndex {
    scheme: PartitionScheme,
    store: SequenceStore,
    suffix_floor: Option<usize>,
    frag: Vec<FragmentRef>,
    bin: Vec<u32>,
    lcp: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub m: usize,
    pub fragments: usize,
    pub bins: usize,
    pub empty_bins: usize,
    pub largest_bin: usize,
    pub mean_nonempty_bin: f64,
    pub sequences: usize,
    pub residues: usize,
    pub suffix_floor: Option<usize>,
    pub partition: String,
}

impl FsIndex {
    /// Counts bin sizes, places each fragment in its bin, then sorts every
    /// bin by content and records shared prefix lengths.
    pub fn build(dataset: FragmentDataset, scheme: &PartitionScheme) -> Result<Self> {
        let m = dataset.fragment_length();
        if scheme.len() != m {
            return Err(Error::LengthMismatch {
                query: scheme.len(),
                index: m,
                reason: "partition scheme and fragments differ in length",
            });
        }
        if scheme.alphabet() != dataset.store().alphabet() {
            return Err(Error::Partition(format!(
                "scheme alphabet {} differs from dataset alphabet {}",
                scheme.alphabet(),
                dataset.store().alphabet()
            )));
        }
        let n_bins = scheme.n_bins();
        if n_bins > MAX_BINS {
            return Err(Error::TooManyBins { bins: n_bins as u128 });
        }
        let suffix_floor = dataset.suffix_floor();
        let (store, fragments) = dataset.into_parts();
        let n = fragments.len();
        if n >= u32::MAX as usize {
            return Err(Error::TooManyFragments(n));
        }

        let ranks: Vec<u32> = fragments
            .iter()
            .map(|&f| scheme.bin_of(store.window(f, m)) as u32)
            .collect();
        let mut bin = vec![0u32; n_bins + 1];
        for &r in &ranks {
            bin[r as usize + 1] += 1;
        }
        for u in 0..n_bins {
            bin[u + 1] += bin[u];
        }
        let mut next: Vec<u32> = bin[..n_bins].to_vec();
        let mut frag = vec![FragmentRef::new(0, 0); n];
        for (&f, &r) in fragments.iter().zip(&ranks) {
            let slot = &mut next[r as usize];
            frag[*slot as usize] = f;
            *slot += 1;
        }
        drop(ranks);
        drop(next);

        let mut lcp = vec![0u8; n + 1];
        for u in 0..n_bins {
            let (lo, hi) = (bin[u] as usize, bin[u + 1] as usize);
            if hi - lo > 1 {
                sort_fragments(&store, &mut frag[lo..hi], m);
                for j in lo + 1..hi {
                    lcp[j] = common_prefix(&store, frag[j - 1], frag[j], m) as u8;
                }
            }
        }
        Ok(Self {
            scheme: scheme.clone(),
            store,
            suffix_floor,
            frag,
            bin,
            lcp,
        })
    }

    pub fn scheme(&self) -> &PartitionScheme {
        &self.scheme
    }

    pub fn m(&self) -> usize {
        self.scheme.len()
    }

    /// Number of fragments `n`.
    pub fn len(&self) -> usize {
        self.frag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frag.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.scheme.n_bins()
    }

    pub fn suffix_floor(&self) -> Option<usize> {
        self.suffix_floor
    }

    pub fn frag(&self) -> &[FragmentRef] {
        &self.frag
    }

    pub fn bin_offsets(&self) -> &[u32] {
        &self.bin
    }

    pub fn lcp(&self) -> &[u8] {
        &self.lcp
    }

    /// Slot range of bin `u`.
    pub fn bin_range(&self, u: usize) -> std::ops::Range<usize> {
        self.bin[u] as usize..self.bin[u + 1] as usize
    }

    pub fn summary(&self) -> IndexSummary {
        let mut empty = 0;
        let mut largest = 0;
        for u in 0..self.n_bins() {
            let size = (self.bin[u + 1] - self.bin[u]) as usize;
            if size == 0 {
                empty += 1;
            }
            largest = largest.max(size);
        }
        let nonempty = self.n_bins() - empty;
        IndexSummary {
            m: self.m(),
            fragments: self.len(),
            bins: self.n_bins(),
            empty_bins: empty,
            largest_bin: largest,
            mean_nonempty_bin: if nonempty == 0 {
                0.0
            } else {
                self.len() as f64 / nonempty as f64
            },
            sequences: self.store.num_sequences(),
            residues: self.store.total_residues(),
            suffix_floor: self.suffix_floor,
            partition: self.scheme.spec_string(),
        }
    }

    /// Full pass over the structural invariants: bin offsets, rank of every
    /// slot, order within bins, and lcp values.
    pub fn audit(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Audit(msg));
        let n = self.len();
        let m = self.m();
        let nb = self.n_bins();
        if self.bin.len() != nb + 1 || self.lcp.len() != n + 1 {
            return fail("array lengths do not match n and N".into());
        }
        if self.bin[0] != 0 || self.bin[nb] as usize != n {
            return fail(format!("bin[0] = {}, bin[N] = {}, n = {n}", self.bin[0], self.bin[nb]));
        }
        if let Some(u) = (0..nb).find(|&u| self.bin[u] > self.bin[u + 1]) {
            return fail(format!("bin offsets decrease at {u}"));
        }
        if self.lcp[n] != 0 {
            return fail("lcp sentinel is not 0".into());
        }
        let need = self.suffix_floor.unwrap_or(m);
        for u in 0..nb {
            let range = self.bin_range(u);
            for j in range.clone() {
                let f = self.frag[j];
                if f.sequence as usize >= self.store.num_sequences()
                    || f.offset as usize >= self.store.sequence_len(f.sequence)
                {
                    return fail(format!("slot {j} points outside the sequences"));
                }
                let w = self.store.window(f, m);
                if w.len() < need {
                    return fail(format!("slot {j} has only {} clean letters", w.len()));
                }
                if self.scheme.bin_of(w) != u {
                    return fail(format!("slot {j} lies in bin {u} but ranks {}", self.scheme.bin_of(w)));
                }
                if j == range.start {
                    if self.lcp[j] != 0 {
                        return fail(format!("lcp at the start of bin {u} is {}", self.lcp[j]));
                    }
                    continue;
                }
                let prev = self.store.window(self.frag[j - 1], m);
                if prev > w {
                    return fail(format!("slots {} and {j} are out of order", j - 1));
                }
                let shared = common_prefix(&self.store, self.frag[j - 1], f, m);
                if self.lcp[j] as usize != shared {
                    return fail(format!("lcp[{j}] = {} but the prefix is {shared}", self.lcp[j]));
                }
            }
        }
        Ok(())
    }
}

impl FragmentSource for FsIndex {
    fn store(&self) -> &SequenceStore {
        &self.store
    }

    fn fragment_length(&self) -> usize {
        self.m()
    }

    fn fragment_refs(&self) -> &[FragmentRef] {
        &self.frag
    }
}

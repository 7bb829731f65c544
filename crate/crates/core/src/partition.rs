//! Position-wise alphabet partitions and the mixed-radix bin ranking.
//!
//! A scheme assigns every letter, at every position, to one cluster. The
//! cluster ranks of a fragment read as mixed-radix digits (most significant
//! first) give the rank of its bin in `0..N`.

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// Longest supported fragment length; lcp values are stored in one byte.
pub const MAX_LENGTH: usize = u8::MAX as usize;

/// Partitions of the standard amino-acid alphabet used by the reference
/// indexes. Position-specs are separated by `;`.
pub mod presets {
    pub const SPEQ06: &str = "T,SA,N,ILV,M,KR,DE,Q,WF,Y,H,G,P,C";
    pub const SPEQ09: &str = "TSAN,ILVM,KR,DEQ,WFYH,GPC";
    pub const SPEQ12: &str = "TSAN,ILVM,KRDEQ,WFYHGPC";
    pub const SPNA09: &str = "KR,Q,E,D,N,T,SA,G,H,W,Y,F,P,C,ILV,M;\
        KR,Q,ED,N,T,SA,G,HW,YF,P,C,ILV,M;\
        KR,QED,N,TSA,G,HW,YF,P,C,ILVM;\
        KR,QEDN,TSA,G,HWYF,PC,ILVM;\
        KR,QEDN,TSA,G,HWYFPC,ILVM;\
        KR,QEDN,TSAG,HWYFPC,ILVM;\
        KRQEDN,TSAG,HWYFPC,ILVM;\
        KRQEDN,TSAG,HWYFPCILVM;\
        KRQEDNTSAG,HWYFPCILVM";
    /// Ten position-specs; the published bin count (8,643,600) is their product.
    pub const SPNB09: &str = "KR,QEDN,TSA,G,HWYF,PC,ILVM;\
        KR,QEDN,TSA,G,HWYF,PC,ILVM;\
        KR,QEDN,TSA,G,HWYF,PC,ILVM;\
        KR,QEDN,TSA,G,HWYF,PC,ILVM;\
        KR,QEDN,TSA,G,HWYFPC,ILVM;\
        KR,QEDN,TSAG,HWYFPC,ILVM;\
        KR,QEDN,TSAG,HWYFPC,ILVM;\
        KRQEDN,TSAG,HWYFPC,ILVM;\
        KRQEDN,TSAG,HWYFPCILVM;\
        KRQEDNTSAG,HWYFPCILVM";

    /// Looks a preset up by name (case-insensitive).
    pub fn lookup(name: &str) -> Option<&'static str> {
        match name.to_ascii_uppercase().as_str() {
            "SPEQ06" => Some(SPEQ06),
            "SPEQ09" => Some(SPEQ09),
            "SPEQ12" => Some(SPEQ12),
            "SPNA09" => Some(SPNA09),
            "SPNB09" => Some(SPNB09),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Position {
    clusters: Vec<Vec<u8>>,
    cluster_of: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionScheme {
    alphabet: Alphabet,
    positions: Vec<Position>,
    n_bins: usize,
    radix: Vec<usize>,
}

impl PartitionScheme {
    /// Parses `cluster("," cluster)*` position-specs joined by `;` or
    /// newlines. A single position-spec applies to all `m` positions.
    pub fn parse(spec: &str, alphabet: &Alphabet, m: usize) -> Result<Self> {
        if m == 0 || m > MAX_LENGTH {
            return Err(Error::Partition(format!(
                "fragment length {m} outside 1..={MAX_LENGTH}"
            )));
        }
        if alphabet.len() < 2 {
            return Err(Error::Partition("alphabet needs at least two letters".into()));
        }
        let specs: Vec<&str> = spec
            .split([';', '\n'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let specs = match specs.len() {
            1 => vec![specs[0]; m],
            k if k == m => specs,
            k => return Err(Error::Partition(format!("{k} position-specs for fragment length {m}"))),
        };

        let mut positions = Vec::with_capacity(m);
        for (i, text) in specs.iter().enumerate() {
            positions.push(parse_position(text, alphabet, i)?);
        }

        let mut radix = vec![1usize; m];
        let mut n_bins = 1usize;
        for i in (0..m).rev() {
            radix[i] = n_bins;
            n_bins = n_bins
                .checked_mul(positions[i].clusters.len())
                .ok_or_else(|| Error::Partition("bin count overflows".into()))?;
        }
        if n_bins == usize::MAX {
            return Err(Error::Partition("bin count overflows".into()));
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            positions,
            n_bins,
            radix,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Fragment length `m`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Total bin count `N`.
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Number of clusters at position `i`.
    pub fn size(&self, i: usize) -> usize {
        self.positions[i].clusters.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.positions.iter().map(|p| p.clusters.len()).collect()
    }

    /// Cluster rank of the letter ordinal `code` at position `i`.
    #[inline]
    pub fn cluster_of(&self, i: usize, code: u8) -> usize {
        self.positions[i].cluster_of[code as usize] as usize
    }

    /// Letter ordinals of cluster `rank` at position `i`.
    pub fn cluster(&self, i: usize, rank: usize) -> &[u8] {
        &self.positions[i].clusters[rank]
    }

    /// Place value of position `i`: the product of the cluster counts of
    /// all later positions.
    #[inline]
    pub fn radix(&self, i: usize) -> usize {
        self.radix[i]
    }

    /// Rank of the bin with the given cluster ranks, one per position.
    pub fn rank(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.len());
        digits.iter().zip(&self.radix).map(|(d, r)| d * r).sum()
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn digits(&self, mut rank: usize) -> Vec<usize> {
        self.radix
            .iter()
            .map(|&r| {
                let d = rank / r;
                rank %= r;
                d
            })
            .collect()
    }

    /// Bin rank of an encoded fragment. Fragments shorter than `m` take
    /// cluster rank 0 at the missing positions.
    #[inline]
    pub fn bin_of(&self, fragment: &[u8]) -> usize {
        fragment
            .iter()
            .take(self.len())
            .enumerate()
            .map(|(i, &c)| self.cluster_of(i, c) * self.radix[i])
            .sum()
    }

    /// Canonical textual form; parsing it yields an equal scheme.
    pub fn spec_string(&self) -> String {
        let position = |p: &Position| {
            p.clusters
                .iter()
                .map(|c| self.alphabet.decode(c))
                .collect::<Vec<_>>()
                .join(",")
        };
        let first = position(&self.positions[0]);
        if self.positions.iter().all(|p| p == &self.positions[0]) {
            first
        } else {
            self.positions.iter().map(position).collect::<Vec<_>>().join(";")
        }
    }

    /// Human-readable bin label such as `TSAN|KR|GPC`.
    pub fn bin_label(&self, rank: usize) -> String {
        self.digits(rank)
            .iter()
            .enumerate()
            .map(|(i, &d)| self.alphabet.decode(self.cluster(i, d)))
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn parse_position(text: &str, alphabet: &Alphabet, i: usize) -> Result<Position> {
    let mut cluster_of = vec![u8::MAX; alphabet.len()];
    let mut clusters = Vec::new();
    for (rank, cluster) in text.split(',').map(str::trim).enumerate() {
        if cluster.is_empty() {
            return Err(Error::Partition(format!("position {i}: empty cluster")));
        }
        let mut codes = Vec::with_capacity(cluster.len());
        for b in cluster.bytes() {
            let code = alphabet.code(b).ok_or_else(|| {
                Error::Partition(format!("position {i}: letter {:?} is not in the alphabet", b as char))
            })?;
            if cluster_of[code as usize] != u8::MAX {
                return Err(Error::Partition(format!(
                    "position {i}: letter {:?} repeated",
                    b as char
                )));
            }
            cluster_of[code as usize] = rank as u8;
            codes.push(code);
        }
        clusters.push(codes);
    }
    if let Some(missing) = cluster_of.iter().position(|&r| r == u8::MAX) {
        return Err(Error::Partition(format!(
            "position {i}: letter {:?} missing",
            alphabet.letter(missing as u8) as char
        )));
    }
    if clusters.len() >= alphabet.len() {
        return Err(Error::Partition(format!(
            "position {i}: {} clusters for a {}-letter alphabet",
            clusters.len(),
            alphabet.len()
        )));
    }
    Ok(Position { clusters, cluster_of })
}

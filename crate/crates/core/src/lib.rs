//! Exact similarity search over fixed-length protein fragments.
//!
//! Score matrices are turned into quasi-metrics, database fragments are
//! bucketed by a per-position clustering of the alphabet, and queries walk
//! the bins in rank order while pruning with per-position lower bounds.

pub mod alphabet;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod index;
pub mod ingest;
pub mod matrix;
pub mod partition;
pub mod query;

pub use alphabet::Alphabet;
pub use error::{Error, Result};
pub use index::{FsIndex, Hit, HitList, SearchMode, SearchOutcome, SearchStats};
pub use ingest::{
    extract_fragments, parse_fasta, FragmentDataset, FragmentRef, FragmentSource, SequenceDb, SequenceStore,
};
pub use matrix::{DistanceMatrix, ScoreMatrix, Symmetrization};
pub use partition::PartitionScheme;
pub use query::{LowerBoundTable, NormalizedQuery, QueryFunction};

/// Integer distances and scores.
pub type Value = i64;

/// Radius meaning "unbounded".
pub const INFINITY: Value = Value::MAX;

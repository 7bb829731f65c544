use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("letter {letter:?} is not in the alphabet")]
    UnknownLetter { letter: char },

    #[error("matrix line {line}: {message}")]
    MatrixFormat { line: usize, message: String },

    #[error("matrix is missing letter {0:?} of the requested alphabet")]
    MissingMatrixLetter(char),

    #[error("score S({a},{b}) exceeds S({a},{a}); distance would be {value}")]
    NegativeDistance { a: char, b: char, value: i64 },

    #[error("invalid distance matrix: {0}")]
    DistanceMatrix(String),

    #[error("partition: {0}")]
    Partition(String),

    #[error("query: {0}")]
    Query(String),

    #[error("PSSM line {line}: {message}")]
    PssmFormat { line: usize, message: String },

    #[error("FASTA line {line}: {message}")]
    Fasta { line: usize, message: String },

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("index with {bins} bins cannot be allocated")]
    TooManyBins { bins: u128 },

    #[error("index holds {0} fragments, more than 32-bit offsets allow")]
    TooManyFragments(usize),

    #[error("query length {query} is incompatible with index length {index}: {reason}")]
    LengthMismatch {
        query: usize,
        index: usize,
        reason: &'static str,
    },

    #[error("k must be at least 1")]
    ZeroK,

    #[error("metric check failed: {0}")]
    NotQuasiMetric(String),

    #[error("index invariant violated: {0}")]
    Audit(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("index file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("duplicate judgment for ({query_id}, {doc_id})")]
    DuplicateJudgment { query_id: String, doc_id: String },
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("empty collection")]
    EmptyCollection,
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("text has no tokens")]
    NoTokens,
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unexpected end of input")]
    Truncated,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("workspace has no transposed copy of X")]
    MissingTranspose,
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },
    #[error("slice sampler exceeded {0} stepping-out expansions")]
    SliceWidenLimit(usize),
    #[error("gamma rejection loop exceeded {0} iterations")]
    RejectionLimit(usize),
    #[error("dirichlet draw underflowed to zero after resampling")]
    DirichletUnderflow,
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

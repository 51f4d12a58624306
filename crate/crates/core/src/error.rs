use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    Domain(String),

    #[error("numerical rank failure: {0}")]
    NumericalRank(String),

    #[error("matrix is singular to working precision at pivot {pivot} (|pivot| = {magnitude:e})")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("block Vandermonde system is singular (rank {rank} of {dim}, relative residual {residual:e})")]
    SingularVandermonde { rank: usize, dim: usize, residual: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("iteration diverged on sub-interval {sub_interval} (|c| = {norm:e})")]
    Divergence { sub_interval: usize, norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Numerical failures map to exit code 2 in the CLI; everything else is a usage problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalRank(_)
                | Error::Singular { .. }
                | Error::SingularVandermonde { .. }
                | Error::Convergence(_)
                | Error::Divergence { .. }
                | Error::Domain(_)
        )
    }
}

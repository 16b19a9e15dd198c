use thiserror::Error;

use crate::grid::Rep;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepMismatch { expected: Rep, found: Rep },

    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("packet specification: {0}")]
    PacketSpec(String),

    #[error("Morse fit did not converge: rms residual {rms:.3e} after {iterations} iterations")]
    FitFailed { rms: f64, iterations: usize },

    #[error("wavefunction reached the grid edge at t = {time:.6e} (edge-band probability {probability:.3e})")]
    BoundaryBreach { time: f64, probability: f64 },

    #[error("Møller state not converged after {doublings} doublings; residuals {residuals:?}")]
    MollerNotConverged { doublings: usize, residuals: Vec<f64> },

    #[error("correlation has not decayed by the final time: tail/peak ratio {ratio:.3e}")]
    Horizon { ratio: f64 },

    #[error("operator is not Hermitian: max |H - H†| = {0:.3e}")]
    NotHermitian(f64),

    #[error("dense form limited to {max} qubits, requested {requested}")]
    DenseTooLarge { max: usize, requested: usize },

    #[error("potential: {0}")]
    Potential(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Name of the module an error originates from, used in CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::RepMismatch { .. } | Error::NotPowerOfTwo(_) => "grid",
            Error::Geometry(_) | Error::PacketSpec(_) | Error::FitFailed { .. } => "wavepackets",
            Error::BoundaryBreach { .. } => "propagation",
            Error::MollerNotConverged { .. } => "moller",
            Error::Horizon { .. } => "smatrix",
            Error::NotHermitian(_) | Error::DenseTooLarge { .. } | Error::Potential(_) => {
                "hamiltonians"
            }
            Error::Dimension { .. } | Error::Invalid(_) | Error::Io(_) => "core",
        }
    }
}

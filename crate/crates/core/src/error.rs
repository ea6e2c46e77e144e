use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice vectors are linearly dependent (gram determinant {gram_det:e})")]
    DegenerateLattice { gram_det: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resonators {first} and {second} overlap (gap {gap:e})")]
    Overlap { first: usize, second: usize, gap: f64 },

    #[error("quasi-periodicity is zero modulo the dual lattice")]
    AlphaZero,

    #[error("lattice sum did not reach tolerance {tolerance:e} (estimated error {estimated:e} after {terms} terms)")]
    NoConvergence {
        tolerance: f64,
        estimated: f64,
        terms: usize,
    },

    #[error("potential matrix is numerically singular (condition estimate {condition:e})")]
    SingularPotential { condition: f64 },

    #[error("discarded imaginary part {residue:e} exceeds the quadrature threshold")]
    QuadratureResidue { residue: f64 },

    #[error("real-space coefficients do not cover lattice offset {offset:?}")]
    Coverage { offset: [i64; 3] },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigenvalue {value:e} is negative beyond the clipping threshold")]
    NegativeEigenvalue { value: f64 },

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("reference grid has {samples} samples, need at least {required}")]
    Resolution { samples: usize, required: usize },

    #[error("band edge reached at omega = {omega} (|d omega/d alpha| = {slope:e})")]
    BandEdge { omega: f64, slope: f64 },

    #[error("histogram bin edges differ")]
    BinMismatch,

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DegenerateLattice { .. }
                | Error::Unsupported(_)
                | Error::Overlap { .. }
                | Error::AlphaZero
                | Error::IndexOutOfRange { .. }
                | Error::SizeMismatch { .. }
                | Error::BinMismatch
                | Error::InvalidArgument(_)
        )
    }
}

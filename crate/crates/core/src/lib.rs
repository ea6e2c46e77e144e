//! Capacitance-matrix spectra of finite and periodic lattices of small resonators.
//!
//! The crate builds finite and quasi-periodic capacitance matrices for sphere
//! lattices, computes band structures, densities of states and convergence
//! measures between the two, and assigns quasi-periodicities to finite modes
//! through a truncated Floquet transform.

pub mod capacitance;
pub mod error;
pub mod floquet;
pub mod geometry;
pub mod lattice_sums;
pub mod spectra;

pub use capacitance::{
    finite_capacitance, finite_capacitance_of, quasi_capacitance, CapacitanceMatrix,
    GeneralizedScaling, QuasiCapacitance, RealSpaceCoeffs,
};
pub use error::{Error, Result};
pub use floquet::{discrete_bands, FloquetOptions, ModeAssignment};
pub use geometry::{
    generate, BrillouinGrid, FiniteLatticeIndex, FiniteStructure, GeneratorParams, LatticeSpec,
    ResonatorCell, Structure, StructureKind, Vec3,
};
pub use lattice_sums::{SumMethod, SumRequest, SumResult};
pub use spectra::{BandStructure, DOSHistogram, FiniteSpectrum};

pub type C64 = nalgebra::Complex<f64>;

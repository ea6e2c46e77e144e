//! Fixtures shared by the benchmarks.

use lattice_spectra_core::{generate, FiniteStructure, GeneratorParams, Structure, StructureKind};

/// Periodic structure with default parameters.
pub fn structure(kind: StructureKind) -> Structure {
    generate(kind, &GeneratorParams::default()).expect("default parameters are valid")
}

/// Monomer chain block of `cells` resonators.
pub fn monomer_block(cells: usize) -> FiniteStructure {
    structure(StructureKind::MonomerChain)
        .block(&[cells])
        .expect("block of a chain")
}

/// Honeycomb truncated to radius `r`.
pub fn honeycomb_patch(r: f64) -> FiniteStructure {
    structure(StructureKind::Honeycomb)
        .truncate(r)
        .expect("truncation of a screen")
}

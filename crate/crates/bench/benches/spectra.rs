use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lattice_spectra_bench::{honeycomb_patch, monomer_block, structure};
use lattice_spectra_core::spectra::{band_structure, finite_frequencies};
use lattice_spectra_core::{
    discrete_bands, finite_capacitance_of, BrillouinGrid, FloquetOptions, StructureKind,
};

fn finite(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_spectrum");
    group.sample_size(10);
    for cells in [100, 400] {
        let block = monomer_block(cells);
        group.bench_with_input(BenchmarkId::new("monomer", cells), &block, |b, f| {
            b.iter(|| finite_frequencies(&finite_capacitance_of(f).unwrap()).unwrap())
        });
    }
    let patch = honeycomb_patch(6.0);
    group.bench_function(BenchmarkId::new("honeycomb", patch.len()), |b| {
        b.iter(|| finite_frequencies(&finite_capacitance_of(&patch).unwrap()).unwrap())
    });
    group.finish();
}

fn bands(c: &mut Criterion) {
    let mut group = c.benchmark_group("band_structure");
    group.sample_size(10);
    for (kind, n) in [(StructureKind::SshDimer, 256), (StructureKind::Honeycomb, 16)] {
        let s = structure(kind);
        let grid = BrillouinGrid::new(&s.lattice, n).unwrap();
        group.bench_function(format!("{kind:?}/{n}"), |b| {
            b.iter(|| band_structure(&s.lattice, &s.cell, &grid, 1e-10, false).unwrap())
        });
    }
    group.finish();
}

fn floquet(c: &mut Criterion) {
    let s = structure(StructureKind::MonomerChain);
    let block = monomer_block(200);
    let spectrum = finite_frequencies(&finite_capacitance_of(&block).unwrap()).unwrap();
    let options = FloquetOptions::default();
    c.bench_function("discrete_bands/monomer_200", |b| {
        b.iter(|| discrete_bands(&spectrum, &block, &s.lattice, &options).unwrap())
    });
}

criterion_group!(benches, finite, bands, floquet);
criterion_main!(benches);

//! Central blocks of truncated capacitance matrices against the real-space
//! coefficients of the periodic problem.

use lattice_spectra_core::capacitance::toeplitz_block_gaps;
use lattice_spectra_core::{generate, GeneratorParams, StructureKind};

fn golden() -> Vec<(f64, f64)> {
    let text = include_str!("golden/block_gaps_monomer.csv");
    text.lines()
        .skip(1)
        .map(|line| {
            let (r, g) = line.split_once(',').unwrap();
            (r.parse().unwrap(), g.parse().unwrap())
        })
        .collect()
}

#[test]
fn monomer_central_block_matches_golden_values() {
    let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
    let expected = golden();
    let radii: Vec<f64> = expected.iter().map(|(r, _)| *r).collect();
    let rows = toeplitz_block_gaps(&s.lattice, &s.cell, [0; 3], [0; 3], &radii, 262_144, 1e-12).unwrap();
    for (row, (r, gap)) in rows.iter().zip(&expected) {
        assert_eq!(row.r, *r);
        assert!(
            (row.gap - gap).abs() < 1e-9 * gap,
            "r = {r}: {} vs {gap}",
            row.gap
        );
    }
}

#[test]
fn monomer_central_block_gap_decreases() {
    let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
    let rows =
        toeplitz_block_gaps(&s.lattice, &s.cell, [0; 3], [0; 3], &[5.0, 10.0, 20.0], 65_536, 1e-12)
            .unwrap();
    assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap));
    assert!(rows[2].gap < 0.5 * rows[0].gap);
}

#[test]
fn dimer_offdiagonal_block_gap_decreases() {
    let s = generate(StructureKind::SshDimer, &GeneratorParams::default()).unwrap();
    let rows =
        toeplitz_block_gaps(&s.lattice, &s.cell, [1, 0, 0], [0; 3], &[5.0, 10.0, 20.0], 16_384, 1e-11)
            .unwrap();
    assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap), "{rows:?}");
}

#[test]
fn block_outside_truncation_is_rejected() {
    let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
    assert!(toeplitz_block_gaps(&s.lattice, &s.cell, [7, 0, 0], [0; 3], &[5.0], 256, 1e-10).is_err());
}

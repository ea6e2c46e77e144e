use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{eig_herm, frequencies};
use crate::capacitance::quasi_capacitance;
use crate::error::Result;
use crate::geometry::{BrillouinGrid, LatticeSpec, ResonatorCell, Vec3};
use crate::C64;

/// Band functions `ω̂_k(α)` sampled on a Brillouin grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure {
    grid: BrillouinGrid,
    frequencies: Vec<Vec<f64>>,
    vectors: Option<Vec<DMatrix<C64>>>,
}

impl BandStructure {
    pub fn grid(&self) -> &BrillouinGrid {
        &self.grid
    }

    /// Ascending frequencies at each grid sample.
    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.frequencies
    }

    /// Eigenvectors of `Ĉ^α` per sample, if they were kept.
    pub fn vectors(&self) -> Option<&[DMatrix<C64>]> {
        self.vectors.as_deref()
    }

    pub fn bands(&self) -> usize {
        self.frequencies.first().map_or(0, |f| f.len())
    }

    /// `(min, max)` of band `k` over the grid.
    pub fn band_range(&self, k: usize) -> (f64, f64) {
        self.frequencies
            .iter()
            .map(|f| f[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(w), hi.max(w))
            })
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Largest change of any band between neighbouring samples along a grid axis.
    pub fn max_adjacent_jump(&self) -> f64 {
        let n = self.grid.n();
        let d = self.grid.dim();
        let mut worst: f64 = 0.0;
        for idx in 0..self.frequencies.len() {
            let mut stride = 1;
            for _ in 0..d {
                if (idx / stride) % n + 1 < n {
                    let next = &self.frequencies[idx + stride];
                    for (a, b) in self.frequencies[idx].iter().zip(next) {
                        worst = worst.max((a - b).abs());
                    }
                }
                stride *= n;
            }
        }
        worst
    }

    /// `alpha_1..alpha_d, omega_1..omega_N`, one row per grid sample.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.grid.dim();
        let header: Vec<String> = (1..=d)
            .map(|i| format!("alpha_{i}"))
            .chain((1..=self.bands()).map(|k| format!("omega_{k}")))
            .collect();
        w.write_record(&header)?;
        for (a, f) in self.grid.points().iter().zip(&self.frequencies) {
            let row: Vec<String> = a
                .iter()
                .take(d)
                .chain(f.iter())
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `ω̂_k(α)` and the eigenvectors of `Ĉ^α` at one quasi-periodicity.
pub fn band_at(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    alpha: &Vec3,
    tol: f64,
) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let q = quasi_capacitance(lattice, cell, alpha, tol)?;
    let e = eig_herm(&q.matrix)?;
    Ok((frequencies(&e.values)?, e.vectors))
}

pub fn band_structure(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    grid: &BrillouinGrid,
    tol: f64,
    keep_vectors: bool,
) -> Result<BandStructure> {
    let per_alpha: Vec<(Vec<f64>, DMatrix<C64>)> = grid
        .points()
        .par_iter()
        .map(|a| band_at(lattice, cell, a, tol))
        .collect::<Result<_>>()?;
    let (frequencies, vectors): (Vec<_>, Vec<_>) = per_alpha.into_iter().unzip();
    Ok(BandStructure {
        grid: grid.clone(),
        frequencies,
        vectors: keep_vectors.then_some(vectors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, GeneratorParams, StructureKind};
    use std::f64::consts::PI;

    fn bands(kind: StructureKind, n: usize) -> BandStructure {
        let s = generate(kind, &GeneratorParams::default()).unwrap();
        let grid = BrillouinGrid::new(&s.lattice, n).unwrap();
        band_structure(&s.lattice, &s.cell, &grid, 1e-11, false).unwrap()
    }

    #[test]
    fn monomer_closed_form() {
        let b = bands(StructureKind::MonomerChain, 32);
        for (a, f) in b.grid().points().iter().zip(b.frequencies()) {
            let exact = (4.0 * PI / (10.0 - 2.0 * (2.0 * (a.x / 2.0).sin().abs()).ln())).sqrt();
            assert!((f[0] - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn time_reversal_symmetry() {
        for (kind, n) in [
            (StructureKind::MonomerChain, 16),
            (StructureKind::SshDimer, 16),
            (StructureKind::SquareDimer, 6),
            (StructureKind::Honeycomb, 6),
        ] {
            let b = bands(kind, n);
            for i in 0..b.grid().len() {
                let m = b.grid().mirror(i);
                for (x, y) in b.frequencies()[i].iter().zip(&b.frequencies()[m]) {
                    assert!((x - y).abs() < 1e-10, "{kind}");
                }
                assert!(b.frequencies()[i].windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn ssh_dimer_has_a_gap() {
        let b = bands(StructureKind::SshDimer, 32);
        assert!(b.band_range(0).1 < b.band_range(1).0);
    }

    #[test]
    fn refinement_shrinks_jumps() {
        let coarse = bands(StructureKind::SshDimer, 16).max_adjacent_jump();
        let fine = bands(StructureKind::SshDimer, 64).max_adjacent_jump();
        // the logarithmic kink at α = 0 slows the decay below first order
        assert!(fine < 0.8 * coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn csv_layout() {
        let b = bands(StructureKind::SshDimer, 4);
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("alpha_1,omega_1,omega_2\n"));
        assert_eq!(text.lines().count(), 5);
    }
}

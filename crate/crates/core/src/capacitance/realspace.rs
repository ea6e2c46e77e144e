use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{finite_capacitance, quasi_capacitance_grid, CapacitanceMatrix};
use crate::error::{Error, Result};
use crate::geometry::{
    index_set, BrillouinGrid, FiniteLatticeIndex, LatticeSpec, ResonatorCell, SiteLabel,
};
use crate::C64;

pub const DEFAULT_QUADRATURE_1D: usize = 256;
pub const DEFAULT_QUADRATURE_2D: usize = 64;

/// Discarded imaginary parts above this fraction of `max |C^0|` are an error.
const RESIDUE_THRESHOLD: f64 = 1e-8;

/// Fourier coefficients `C^m = (1/|Y*|) ∫ Ĉ^α e^{−iα·m} dα` by the midpoint rule.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSpaceCoeffs {
    slots: usize,
    n_quad: usize,
    blocks: BTreeMap<[i64; 3], DMatrix<f64>>,
}

impl RealSpaceCoeffs {
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Quadrature points per axis.
    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    pub fn get(&self, m: [i64; 3]) -> Option<&DMatrix<f64>> {
        self.blocks.get(&m)
    }

    pub fn offsets(&self) -> impl Iterator<Item = &[i64; 3]> {
        self.blocks.keys()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `Σ_m C^m e^{iα·m}` over the stored offsets.
    pub fn resum(&self, lattice: &LatticeSpec, alpha: &crate::geometry::Vec3) -> DMatrix<C64> {
        let mut out = DMatrix::<C64>::zeros(self.slots, self.slots);
        for (m, block) in &self.blocks {
            let phase = C64::from_polar(1.0, alpha.dot(&lattice.point(*m)));
            out += block.map(|v| phase * v);
        }
        out
    }
}

/// Coefficients for every lattice point with `|m| ≤ m_max`.
pub fn realspace_coeffs(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    m_max: f64,
    n_quad: usize,
    tol: f64,
) -> Result<RealSpaceCoeffs> {
    if !(m_max >= 0.0 && m_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "m_max must be nonnegative, got {m_max}"
        )));
    }
    let reach = m_max * (1.0 + 1e-12) + 1e-12;
    let offsets: Vec<[i64; 3]> = index_set(lattice, reach)?
        .points()
        .iter()
        .map(|p| p.coords)
        .collect();
    realspace_coeffs_with_offsets(lattice, cell, &offsets, n_quad, tol)
}

/// Coefficients for every difference `m − n` of points in `index`.
pub fn realspace_coeffs_for(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    index: &FiniteLatticeIndex,
    n_quad: usize,
    tol: f64,
) -> Result<RealSpaceCoeffs> {
    let mut offsets = Vec::new();
    for a in index.points() {
        for b in index.points() {
            offsets.push(sub(a.coords, b.coords));
        }
    }
    offsets.sort_unstable();
    offsets.dedup();
    realspace_coeffs_with_offsets(lattice, cell, &offsets, n_quad, tol)
}

fn sub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn neg(a: [i64; 3]) -> [i64; 3] {
    [-a[0], -a[1], -a[2]]
}

/// Coefficients at the given offsets; `C^{−m}` is stored as the exact transpose of `C^m`.
pub fn realspace_coeffs_with_offsets(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    offsets: &[[i64; 3]],
    n_quad: usize,
    tol: f64,
) -> Result<RealSpaceCoeffs> {
    let reach = offsets
        .iter()
        .flat_map(|m| m.iter().map(|k| k.unsigned_abs()))
        .max()
        .unwrap_or(0) as usize;
    if n_quad < 2 * reach {
        return Err(Error::InvalidArgument(format!(
            "quadrature with {n_quad} points per axis cannot resolve offsets up to {reach}; need at least {}",
            2 * reach
        )));
    }
    let grid = BrillouinGrid::new(lattice, n_quad)?;
    let samples = quasi_capacitance_grid(lattice, cell, &grid, tol)?;
    let n = cell.len();
    let norm = 1.0 / grid.len() as f64;

    // one representative of each ±m pair
    let mut reps: Vec<[i64; 3]> = offsets.iter().map(|&m| m.max(neg(m))).collect();
    reps.sort_unstable();
    reps.dedup();

    let computed: Vec<(DMatrix<f64>, f64)> = reps
        .par_iter()
        .map(|m| {
            let x = lattice.point(*m);
            let mut acc = DMatrix::<C64>::zeros(n, n);
            for s in &samples {
                let phase = C64::from_polar(norm, -s.alpha.dot(&x));
                acc += s.matrix.map(|v| v * phase);
            }
            let residue = acc.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            (acc.map(|z| z.re), residue)
        })
        .collect();

    let scale = reps
        .iter()
        .position(|m| *m == [0, 0, 0])
        .map(|k| computed[k].0.amax())
        .unwrap_or_else(|| computed.iter().map(|(b, _)| b.amax()).fold(0.0, f64::max));
    let residue = computed.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    if scale > 0.0 && residue > RESIDUE_THRESHOLD * scale {
        return Err(Error::QuadratureResidue {
            residue: residue / scale,
        });
    }

    let mut blocks = BTreeMap::new();
    for (m, (block, _)) in reps.iter().zip(computed) {
        if *m == [0, 0, 0] {
            blocks.insert(*m, (&block + block.transpose()) * 0.5);
        } else {
            blocks.insert(neg(*m), block.transpose());
            blocks.insert(*m, block);
        }
    }
    Ok(RealSpaceCoeffs {
        slots: n,
        n_quad,
        blocks,
    })
}

/// Block Toeplitz truncation: block `(m, n)` is `C^{m−n}`.
pub fn truncated_toeplitz(
    coeffs: &RealSpaceCoeffs,
    index: &FiniteLatticeIndex,
) -> Result<CapacitanceMatrix> {
    let n = coeffs.slots;
    let size = n * index.len();
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    for (a, pa) in index.points().iter().enumerate() {
        for (b, pb) in index.points().iter().enumerate() {
            let offset = sub(pa.coords, pb.coords);
            let block = coeffs.get(offset).ok_or(Error::Coverage { offset })?;
            matrix.view_mut((a * n, b * n), (n, n)).copy_from(block);
        }
    }
    let labels = index
        .points()
        .iter()
        .flat_map(|p| (0..n).map(move |local| SiteLabel {
            cell: p.coords,
            local,
        }))
        .collect();
    CapacitanceMatrix::new(matrix, labels)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRow {
    pub r: f64,
    /// Frobenius norm of `C_f^{mn}(r) − C^{m−n}`.
    pub gap: f64,
}

/// Distance between the `(m, n)` block of the finite matrix on `I_r` and `C^{m−n}`
/// for each truncation radius.
pub fn toeplitz_block_gaps(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    m: [i64; 3],
    n: [i64; 3],
    r_list: &[f64],
    n_quad: usize,
    tol: f64,
) -> Result<Vec<GapRow>> {
    let coeffs = realspace_coeffs_with_offsets(lattice, cell, &[sub(m, n)], n_quad, tol)?;
    let reference = coeffs.get(sub(m, n)).expect("requested offset is stored");
    r_list
        .par_iter()
        .map(|&r| {
            let index = index_set(lattice, r)?;
            for p in [m, n] {
                if index.position_of(p).is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "lattice point {p:?} lies outside I_r for r = {r}"
                    )));
                }
            }
            let c = finite_capacitance(lattice, cell, &index)?;
            let block = c.block(m, n, cell.len()).expect("both cells are in I_r");
            Ok(GapRow {
                r,
                gap: (block - reference).norm(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::quasi_capacitance;
    use crate::geometry::{generate, GeneratorParams, StructureKind, Vec3};

    fn monomer() -> (LatticeSpec, ResonatorCell) {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        (s.lattice, s.cell)
    }

    #[test]
    fn monomer_coefficients_are_diagonally_dominant() {
        let (l, c) = monomer();
        let k = realspace_coeffs(&l, &c, 6.0, 512, 1e-11).unwrap();
        assert_eq!(k.len(), 13);
        let c0 = k.get([0, 0, 0]).unwrap()[(0, 0)];
        assert!(c0 > 0.0);
        for m in 1..=6 {
            let cm = k.get([m, 0, 0]).unwrap()[(0, 0)];
            assert!(cm.abs() < c0);
            assert!(cm < 0.0);
            assert_eq!(cm, k.get([-m, 0, 0]).unwrap()[(0, 0)]);
        }
    }

    #[test]
    fn dimer_blocks_transpose_under_reflection() {
        let s = generate(StructureKind::SshDimer, &GeneratorParams::default()).unwrap();
        let k = realspace_coeffs(&s.lattice, &s.cell, 3.0, 256, 1e-11).unwrap();
        for m in 1..=3 {
            assert_eq!(k.get([m, 0, 0]).unwrap().transpose(), *k.get([-m, 0, 0]).unwrap());
        }
        let c0 = k.get([0, 0, 0]).unwrap();
        assert!((c0[(0, 1)] - c0[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn resummation_approaches_quasi_capacitance() {
        let (l, c) = monomer();
        let alpha = Vec3::new(1.234, 0.0, 0.0);
        let exact = quasi_capacitance(&l, &c, &alpha, 1e-12).unwrap().matrix[(0, 0)];
        let errors: Vec<f64> = [4.0, 16.0, 64.0]
            .iter()
            .map(|&m_max| {
                let k = realspace_coeffs(&l, &c, m_max, 4096, 1e-12).unwrap();
                (k.resum(&l, &alpha)[(0, 0)] - exact).norm()
            })
            .collect();
        assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
        assert!(errors[2] < 1e-3 * exact.norm());
    }

    #[test]
    fn under_resolved_quadrature_rejected() {
        let (l, c) = monomer();
        assert!(realspace_coeffs(&l, &c, 10.0, 16, 1e-10).is_err());
    }

    #[test]
    fn toeplitz_structure() {
        let (l, c) = monomer();
        let index = index_set(&l, 2.5).unwrap();
        let k = realspace_coeffs_for(&l, &c, &index, 256, 1e-11).unwrap();
        let t = truncated_toeplitz(&k, &index).unwrap();
        assert_eq!(t.len(), 5);
        for a in 0..5 {
            for b in 0..5 {
                let expected = k.get([a as i64 - b as i64, 0, 0]).unwrap()[(0, 0)];
                assert_eq!(t.matrix()[(a, b)], expected);
                if a + 1 < 5 && b + 1 < 5 {
                    assert_eq!(t.matrix()[(a, b)], t.matrix()[(a + 1, b + 1)]);
                }
            }
        }
        assert_eq!(t.asymmetry(), 0.0);

        let single = index_set(&l, 0.5).unwrap();
        let t1 = truncated_toeplitz(&k, &single).unwrap();
        assert_eq!(t1.matrix()[(0, 0)], k.get([0, 0, 0]).unwrap()[(0, 0)]);
    }

    #[test]
    fn toeplitz_needs_coverage() {
        let (l, c) = monomer();
        let k = realspace_coeffs(&l, &c, 2.0, 64, 1e-10).unwrap();
        let index = index_set(&l, 3.5).unwrap();
        assert!(matches!(
            truncated_toeplitz(&k, &index),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn square_dimer_toeplitz_blocks() {
        let s = generate(StructureKind::SquareDimer, &GeneratorParams::default()).unwrap();
        let index = index_set(&s.lattice, 1.5).unwrap();
        let k = realspace_coeffs_for(&s.lattice, &s.cell, &index, 8, 1e-10).unwrap();
        let t = truncated_toeplitz(&k, &index).unwrap();
        assert_eq!(t.len(), 18);
        assert!(t.asymmetry() < 1e-14);
        let b = t.block([1, 0, 0], [0, 1, 0], 2).unwrap();
        assert_eq!(b, *k.get([1, -1, 0]).unwrap());
    }
}

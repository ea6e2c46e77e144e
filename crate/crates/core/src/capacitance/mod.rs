//! Capacitance matrices of sphere lattices in the point-potential model.
//!
//! A system of well-separated spheres is described by its potential matrix
//! `P` with `1/(4πR_i)` on the diagonal and `1/(4π|x_i − x_j|)` elsewhere; the
//! capacitance matrix is `C = P⁻¹`. It is symmetric positive definite with
//! nonpositive off-diagonal entries. The periodic counterparts are the
//! quasi-periodic matrices `Ĉ^α`, their Fourier coefficients `C^m`, and the
//! block Toeplitz truncation `C_t` built from those coefficients.

mod export;
mod quasi;
mod realspace;
mod scaling;

pub use export::{read_capm, write_capm, write_matrix_csv, CAPM_MAGIC, CAPM_VERSION};
pub use quasi::{quasi_capacitance, quasi_capacitance_grid, QuasiCapacitance};
pub use realspace::{
    realspace_coeffs, realspace_coeffs_for, realspace_coeffs_with_offsets, toeplitz_block_gaps,
    truncated_toeplitz, GapRow, RealSpaceCoeffs, DEFAULT_QUADRATURE_1D, DEFAULT_QUADRATURE_2D,
};
pub use scaling::{apply_defect, defect_mode, generalize, generalized_symmetric, GeneralizedScaling};

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::geometry::{FiniteLatticeIndex, FiniteStructure, LatticeSpec, ResonatorCell, SiteLabel};

/// Potential matrices with a larger condition estimate are rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Dense real symmetric capacitance matrix with one row per resonator.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitanceMatrix {
    matrix: DMatrix<f64>,
    labels: Vec<SiteLabel>,
}

impl CapacitanceMatrix {
    pub fn new(matrix: DMatrix<f64>, labels: Vec<SiteLabel>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::SizeMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if labels.len() != matrix.nrows() {
            return Err(Error::SizeMismatch {
                expected: matrix.nrows(),
                actual: labels.len(),
            });
        }
        Ok(Self { matrix, labels })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `(cell, slot)` of each row.
    pub fn labels(&self) -> &[SiteLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_of(&self, label: SiteLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// The `N × N` block coupling cell `m` to cell `n`.
    pub fn block(&self, m: [i64; 3], n: [i64; 3], slots: usize) -> Option<DMatrix<f64>> {
        let rows: Option<Vec<usize>> = (0..slots)
            .map(|i| self.row_of(SiteLabel { cell: m, local: i }))
            .collect();
        let cols: Option<Vec<usize>> = (0..slots)
            .map(|j| self.row_of(SiteLabel { cell: n, local: j }))
            .collect();
        let (rows, cols) = (rows?, cols?);
        Some(DMatrix::from_fn(slots, slots, |i, j| {
            self.matrix[(rows[i], cols[j])]
        }))
    }

    /// `max |C_ij − C_ji| / max |C_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }

    /// Largest off-diagonal entry; nonpositive for a physical capacitance matrix.
    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.len();
        let mut best = f64::NEG_INFINITY;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    best = best.max(self.matrix[(i, j)]);
                }
            }
        }
        best
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.matrix.clone()).is_some()
    }
}

/// `P⁻¹` for a symmetric positive definite potential matrix.
pub(crate) fn invert_potential(p: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(p).ok_or(Error::SingularPotential {
        condition: f64::INFINITY,
    })?;
    let condition = cholesky_condition(chol.l_dirty().diagonal().iter().copied());
    if condition > MAX_CONDITION {
        return Err(Error::SingularPotential { condition });
    }
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Lower bound `(max L_ii / min L_ii)²` on the condition number.
pub(crate) fn cholesky_condition(diag: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).powi(2)
    }
}

pub fn finite_capacitance(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    index: &FiniteLatticeIndex,
) -> Result<CapacitanceMatrix> {
    finite_capacitance_of(&FiniteStructure::periodic(lattice, cell, index))
}

/// Capacitance matrix of an arbitrary finite structure, rows in label order.
pub fn finite_capacitance_of(structure: &FiniteStructure) -> Result<CapacitanceMatrix> {
    structure.check_disjoint()?;
    let spheres = structure.spheres();
    let n = spheres.len();
    if n == 0 {
        return Err(Error::InvalidArgument("structure has no resonators".into()));
    }
    let p = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / (4.0 * PI * spheres[i].radius)
        } else {
            1.0 / (4.0 * PI * (spheres[i].center - spheres[j].center).norm())
        }
    });
    let c = invert_potential(p)?;
    CapacitanceMatrix::new(c, structure.labels().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{index_set, Sphere, Vec3};
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn spheres(centres: &[Vec3], radius: f64) -> FiniteStructure {
        let lattice = LatticeSpec::chain(1.0).unwrap();
        let labels = (0..centres.len())
            .map(|k| SiteLabel {
                cell: [k as i64, 0, 0],
                local: 0,
            })
            .collect();
        let s = centres
            .iter()
            .map(|c| Sphere {
                center: *c,
                radius,
            })
            .collect();
        FiniteStructure::from_parts(&lattice, s, labels, 1).unwrap()
    }

    #[test]
    fn single_sphere() {
        let c = finite_capacitance_of(&spheres(&[Vec3::zeros()], 0.3)).unwrap();
        assert!((c.matrix()[(0, 0)] - 4.0 * PI * 0.3).abs() < 1e-14);
    }

    #[test]
    fn two_spheres_closed_form() {
        let c = finite_capacitance_of(&spheres(&[Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)], 0.1))
            .unwrap();
        // P = (1/4π)[[10, 1], [1, 10]], so C = (4π/99)[[10, −1], [−1, 10]]
        let k = 4.0 * PI / 99.0;
        assert!((c.matrix()[(0, 0)] - 10.0 * k).abs() < 1e-13);
        assert!((c.matrix()[(0, 1)] + k).abs() < 1e-13);
        let mut ev: Vec<f64> = SymmetricEigen::new(c.matrix().clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 4.0 * PI / 11.0).abs() < 1e-13);
        assert!((ev[1] - 4.0 * PI / 9.0).abs() < 1e-13);
    }

    #[test]
    fn chain_invariants() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let cell = ResonatorCell::new(vec![Vec3::zeros()], vec![0.1]).unwrap();
        let c = finite_capacitance(&l, &cell, &index_set(&l, 10.5).unwrap()).unwrap();
        assert_eq!(c.len(), 21);
        assert!(c.asymmetry() < 1e-12);
        assert!(c.max_offdiagonal() <= 0.0);
        assert!(c.is_positive_definite());
        let b = c.block([1, 0, 0], [-2, 0, 0], 1).unwrap();
        assert_eq!(b[(0, 0)], c.matrix()[(11, 8)]);
    }

    #[test]
    fn overlap_rejected() {
        let s = spheres(&[Vec3::zeros(), Vec3::new(0.15, 0.0, 0.0)], 0.1);
        assert!(matches!(finite_capacitance_of(&s), Err(Error::Overlap { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Random dilute clouds: radii at most a fifth of the closest distance.
        #[test]
        fn random_dilute_configurations_are_spd_with_nonpositive_offdiagonals(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0), 2..24),
            frac in 0.01f64..0.2,
        ) {
            let centres: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
            let mut dmin = f64::INFINITY;
            for i in 0..centres.len() {
                for j in 0..i {
                    dmin = dmin.min((centres[i] - centres[j]).norm());
                }
            }
            prop_assume!(dmin > 1e-3);
            let c = finite_capacitance_of(&spheres(&centres, frac * dmin)).unwrap();
            prop_assert!(c.asymmetry() < 1e-12);
            prop_assert!(c.max_offdiagonal() <= 0.0);
            prop_assert!(c.is_positive_definite());
            for i in 0..c.len() {
                prop_assert!(c.matrix()[(i, i)] > 0.0);
            }
        }
    }
}

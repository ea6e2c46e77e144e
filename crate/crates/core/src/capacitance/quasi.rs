use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;

use super::{cholesky_condition, MAX_CONDITION};
use crate::error::{Error, Result};
use crate::geometry::{BrillouinGrid, LatticeSpec, ResonatorCell, Vec3};
use crate::lattice_sums::quasi_periodic_sum;
use crate::C64;

/// Hermitian `N × N` capacitance matrix `Ĉ^α` of the periodic structure.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiCapacitance {
    pub alpha: Vec3,
    pub matrix: DMatrix<C64>,
}

impl QuasiCapacitance {
    /// `max |Ĉ_ij − conj Ĉ_ji| / max |Ĉ_ij|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// `Ĉ^α = (P̂^α)⁻¹` with `P̂^α_ij = δ_ij/(4πR_i) + Q(z_i − z_j; α)`.
pub fn quasi_capacitance(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    alpha: &Vec3,
    tol: f64,
) -> Result<QuasiCapacitance> {
    lattice.require_summable()?;
    let n = cell.len();
    let z = cell.centers();
    let mut p = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let q = quasi_periodic_sum(lattice, &(z[i] - z[j]), alpha, tol)?.value;
            if i == j {
                p[(i, i)] = C64::new(q.re + 1.0 / (4.0 * PI * cell.radii()[i]), 0.0);
            } else {
                p[(i, j)] = q;
                p[(j, i)] = q.conj();
            }
        }
    }

    let chol = Cholesky::new(p).ok_or(Error::SingularPotential {
        condition: f64::INFINITY,
    })?;
    let condition = cholesky_condition(chol.l_dirty().diagonal().iter().map(|d| d.re));
    if condition > MAX_CONDITION {
        return Err(Error::SingularPotential { condition });
    }
    let inv = chol.inverse();
    Ok(QuasiCapacitance {
        alpha: *alpha,
        matrix: (&inv + inv.adjoint()) * C64::new(0.5, 0.0),
    })
}

/// `Ĉ^α` at every grid sample, in grid order.
pub fn quasi_capacitance_grid(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    grid: &BrillouinGrid,
    tol: f64,
) -> Result<Vec<QuasiCapacitance>> {
    grid.points()
        .par_iter()
        .map(|a| quasi_capacitance(lattice, cell, a, tol))
        .collect()
}

//! Lattices, resonator cells, finite truncations and Brillouin-zone sampling.
//!
//! A lattice of dimension `d` lives in R³ and is spanned by its first `d`
//! coordinate axes. Resonators are spheres; a unit cell holds `N` of them and
//! is repeated over every lattice point.

mod brillouin;
mod generators;
mod index;
mod structure;

pub use brillouin::BrillouinGrid;
pub use generators::{generate, GeneratorParams, PointDefect, Structure, StructureKind};
pub use index::{index_set, FiniteLatticeIndex, LatticePoint};
pub use structure::{FiniteStructure, SiteLabel, Sphere};

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Bravais lattice `Λ` together with its dual basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    dim: usize,
    vectors: Vec<Vec3>,
    dual_vectors: Vec<Vec3>,
    cell_measure: f64,
}

impl LatticeSpec {
    pub fn new(dim: usize, vectors: &[Vec3]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "lattice dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if vectors.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: vectors.len(),
            });
        }
        for v in vectors {
            let scale = v.norm();
            if v.iter().skip(dim).any(|c| c.abs() > 1e-12 * scale.max(1.0)) {
                return Err(Error::Unsupported(
                    "lattice vectors must lie in the span of the first d coordinate axes".into(),
                ));
            }
        }

        let gram = DMatrix::from_fn(dim, dim, |i, j| vectors[i].dot(&vectors[j]));
        let gram_det = gram.determinant();
        let scale: f64 = vectors.iter().map(|v| v.norm_squared()).product();
        if !(gram_det > 1e-12 * scale) {
            return Err(Error::DegenerateLattice { gram_det });
        }
        let inv = gram
            .try_inverse()
            .ok_or(Error::DegenerateLattice { gram_det })?;

        let dual_vectors = (0..dim)
            .map(|i| {
                (0..dim).fold(Vec3::zeros(), |acc, j| {
                    acc + vectors[j] * (2.0 * PI * inv[(i, j)])
                })
            })
            .collect();

        Ok(Self {
            dim,
            vectors: vectors.to_vec(),
            dual_vectors,
            cell_measure: gram_det.sqrt(),
        })
    }

    /// Chain along the x axis with the given spacing.
    pub fn chain(spacing: f64) -> Result<Self> {
        Self::new(1, &[Vec3::new(spacing, 0.0, 0.0)])
    }

    pub fn square(spacing: f64) -> Result<Self> {
        Self::new(
            2,
            &[Vec3::new(spacing, 0.0, 0.0), Vec3::new(0.0, spacing, 0.0)],
        )
    }

    /// Triangular (hexagonal) Bravais lattice with lattice constant `a`.
    pub fn triangular(a: f64) -> Result<Self> {
        Self::new(
            2,
            &[
                Vec3::new(a, 0.0, 0.0),
                Vec3::new(0.5 * a, 0.5 * 3f64.sqrt() * a, 0.0),
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn dual_vectors(&self) -> &[Vec3] {
        &self.dual_vectors
    }

    /// Length (d = 1), area (d = 2) or volume (d = 3) of the unit cell.
    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    /// Measure of the Brillouin zone, `(2π)^d / |Y|`.
    pub fn dual_cell_measure(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32) / self.cell_measure
    }

    /// Cartesian position of the lattice point with integer coordinates `k`.
    pub fn point(&self, k: [i64; 3]) -> Vec3 {
        self.vectors
            .iter()
            .zip(k)
            .fold(Vec3::zeros(), |acc, (v, c)| acc + v * c as f64)
    }

    /// Fractional coordinates of `alpha` in the dual basis.
    pub fn dual_coordinates(&self, alpha: &Vec3) -> [f64; 3] {
        let mut f = [0.0; 3];
        for (fi, l) in f.iter_mut().zip(&self.vectors) {
            *fi = alpha.dot(l) / (2.0 * PI);
        }
        f
    }

    /// Fractional coordinates of the in-lattice part of `x`.
    pub fn lattice_coordinates(&self, x: &Vec3) -> [f64; 3] {
        let mut f = [0.0; 3];
        for (fi, a) in f.iter_mut().zip(&self.dual_vectors) {
            *fi = x.dot(a) / (2.0 * PI);
        }
        f
    }

    /// Whether `alpha` coincides with a dual lattice point (the excluded `α = 0` of `Y*`).
    pub fn is_dual_lattice_point(&self, alpha: &Vec3) -> bool {
        let f = self.dual_coordinates(alpha);
        let on_lattice = f[..self.dim]
            .iter()
            .all(|c| (c - c.round()).abs() < 1e-12);
        let in_plane = alpha.iter().skip(self.dim).all(|c| c.abs() < 1e-12);
        on_lattice && in_plane
    }

    /// Sum routines only handle chains and screens.
    pub fn require_summable(&self) -> Result<()> {
        if self.dim == 3 {
            Err(Error::Unsupported(
                "lattice sums are implemented for d = 1 and d = 2 only".into(),
            ))
        } else {
            Ok(())
        }
    }
}

/// Spheres making up one unit cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonatorCell {
    centers: Vec<Vec3>,
    radii: Vec<f64>,
}

impl ResonatorCell {
    pub fn new(centers: Vec<Vec3>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument("cell has no resonators".into()));
        }
        if centers.len() != radii.len() {
            return Err(Error::SizeMismatch {
                expected: centers.len(),
                actual: radii.len(),
            });
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "resonator radius must be positive, got {r}"
            )));
        }
        Ok(Self { centers, radii })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn translates(lattice: &LatticeSpec) -> Vec<Vec3> {
        let range = |axis: usize| if axis < lattice.dim() { -2..=2 } else { 0..=0 };
        let mut out = Vec::new();
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    out.push(lattice.point([a, b, c]));
                }
            }
        }
        out
    }

    /// Checks `|z_i + m − z_j| > R_i + R_j` over the first two shells of translates.
    pub fn check_disjoint(&self, lattice: &LatticeSpec) -> Result<()> {
        for m in Self::translates(lattice) {
            for i in 0..self.len() {
                for j in 0..self.len() {
                    if i == j && m.norm() == 0.0 {
                        continue;
                    }
                    let gap = (self.centers[i] + m - self.centers[j]).norm()
                        - self.radii[i]
                        - self.radii[j];
                    if gap <= 0.0 {
                        return Err(Error::Overlap {
                            first: i,
                            second: j,
                            gap,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Smallest distance between two distinct sphere centres, translates included.
    pub fn min_separation(&self, lattice: &LatticeSpec) -> f64 {
        let mut best = f64::INFINITY;
        for m in Self::translates(lattice) {
            for i in 0..self.len() {
                for j in 0..self.len() {
                    let d = (self.centers[i] + m - self.centers[j]).norm();
                    if d > 0.0 {
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }

    /// The point-potential model degrades once `max R / min separation > 0.2`.
    pub fn dilute_warning(&self, lattice: &LatticeSpec) -> bool {
        let rmax = self.radii.iter().cloned().fold(0.0, f64::max);
        rmax / self.min_separation(lattice) > 0.2
    }
}

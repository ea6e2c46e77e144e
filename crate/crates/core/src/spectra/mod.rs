//! Eigensolvers, band structures, finite spectra, densities of states and
//! convergence diagnostics between finite and periodic spectra.

mod bands;
mod convergence;
mod dos;

pub use bands::{band_at, band_structure, BandStructure};
pub use convergence::{frobenius_gap, loglog_slope, operator_norm, pointwise_gap, PointwiseGap};
pub use dos::{
    default_bins, dos_1d_analytic, dos_histogram, dos_histogram_with_edges, dos_l1_error,
    dos_reference, dos_reference_with_edges, uniform_edges, BandFunction1d, DOSHistogram,
    MonomerBand, SampledBand1d,
};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::capacitance::CapacitanceMatrix;
use crate::error::{Error, Result};
use crate::geometry::SiteLabel;
use crate::C64;

/// Relative asymmetry accepted by the eigensolvers.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Negative eigenvalues within this fraction of `‖C‖₂` are clipped to zero.
pub const CLIP_THRESHOLD: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// Ascending eigenvalues with matching orthonormal eigenvectors in the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen<T: nalgebra::Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

fn sorted<T: nalgebra::Scalar + Copy>(values: Vec<f64>, vectors: DMatrix<T>) -> Eigen<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&k| values[k]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), order.len(), |i, j| vectors[(i, order[j])]);
    Eigen {
        values: vals,
        vectors: vecs,
    }
}

fn clip(values: &mut [f64]) {
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for v in values.iter_mut() {
        if *v < 0.0 && *v >= -CLIP_THRESHOLD * norm {
            *v = 0.0;
        }
    }
}

pub fn eig_sym(m: &DMatrix<f64>) -> Result<Eigen<f64>> {
    if !m.is_square() {
        return Err(Error::SizeMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let scale = m.amax();
    let asymmetry = if scale > 0.0 {
        (m - m.transpose()).amax() / scale
    } else {
        0.0
    };
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS).ok_or(Error::NoConvergence {
        tolerance: f64::EPSILON,
        estimated: f64::NAN,
        terms: MAX_SWEEPS,
    })?;
    let mut out = sorted(e.eigenvalues.iter().copied().collect(), e.eigenvectors);
    clip(&mut out.values);
    Ok(out)
}

pub fn eig_herm(m: &DMatrix<C64>) -> Result<Eigen<C64>> {
    if !m.is_square() {
        return Err(Error::SizeMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asymmetry = if scale > 0.0 {
        (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
    } else {
        0.0
    };
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let e = SymmetricEigen::try_new(herm, f64::EPSILON, MAX_SWEEPS).ok_or(Error::NoConvergence {
        tolerance: f64::EPSILON,
        estimated: f64::NAN,
        terms: MAX_SWEEPS,
    })?;
    let mut out = sorted(e.eigenvalues.iter().copied().collect(), e.eigenvectors);
    clip(&mut out.values);
    Ok(out)
}

/// `√λ` of clipped eigenvalues; anything still negative is an error.
pub(crate) fn frequencies(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < 0.0 {
                Err(Error::NegativeEigenvalue { value: v })
            } else {
                Ok(v.sqrt())
            }
        })
        .collect()
}

/// Eigenfrequencies `ω_i = √λ_i` and modes of a finite capacitance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpectrum {
    eigenvalues: Vec<f64>,
    frequencies: Vec<f64>,
    vectors: DMatrix<f64>,
    labels: Vec<SiteLabel>,
}

impl FiniteSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Orthonormal eigenvectors, one per column, in ascending frequency order.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn mode(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).iter().copied().collect()
    }

    pub fn labels(&self) -> &[SiteLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Replaces the modes, e.g. after mapping back from a symmetrised problem.
    pub fn with_vectors(mut self, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.shape() != self.vectors.shape() {
            return Err(Error::SizeMismatch {
                expected: self.vectors.len(),
                actual: vectors.len(),
            });
        }
        self.vectors = vectors;
        Ok(self)
    }
}

pub fn finite_frequencies(c: &CapacitanceMatrix) -> Result<FiniteSpectrum> {
    let e = eig_sym(c.matrix())?;
    Ok(FiniteSpectrum {
        frequencies: frequencies(&e.values)?,
        eigenvalues: e.values,
        vectors: e.vectors,
        labels: c.labels().to_vec(),
    })
}

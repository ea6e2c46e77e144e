use nalgebra::{DMatrix, DVector};

use super::{eig_sym, FiniteSpectrum};
use crate::error::{Error, Result};
use crate::geometry::{LatticeSpec, Vec3};
use crate::C64;

/// Normalised Frobenius distance `(Σ|a_ij − b_ij|² / n)^{1/2}`.
pub fn frobenius_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok((a - b).norm() / (a.nrows() as f64).sqrt())
}

/// Spectral norm of a symmetric matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    let e = eig_sym(m)?;
    Ok(e.values.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(
            "log-log fit needs at least two positive points".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointwiseGap {
    /// `min_i |ω̂² − ω_i²|`.
    pub min_gap: f64,
    /// Distance from the normalised Bloch extension to its projection onto
    /// the eigenvectors with `|ω_i² − ω̂²| < window`.
    pub residual: f64,
    /// Eigenvectors spanning the projection.
    pub span: usize,
}

/// Compares a band value `ω̂(α)` with Bloch vector `v` of `Ĉ^α` against a finite
/// spectrum. The Bloch extension is `ũ_(m,i) = v_i e^{−iα·m}` over the rows of
/// the spectrum, normalised to unit length.
pub fn pointwise_gap(
    lattice: &LatticeSpec,
    omega_hat: f64,
    bloch: &DVector<C64>,
    alpha: &Vec3,
    spectrum: &FiniteSpectrum,
    window: f64,
) -> Result<PointwiseGap> {
    if spectrum.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let target = omega_hat * omega_hat;
    let min_gap = spectrum
        .eigenvalues()
        .iter()
        .map(|l| (l - target).abs())
        .fold(f64::INFINITY, f64::min);

    let mut u = DVector::<C64>::zeros(spectrum.len());
    for (row, label) in spectrum.labels().iter().enumerate() {
        let v = *bloch.get(label.local).ok_or(Error::IndexOutOfRange {
            index: label.local,
            size: bloch.len(),
        })?;
        let phase = C64::from_polar(1.0, -alpha.dot(&lattice.point(label.cell)));
        u[row] = v * phase;
    }
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("Bloch vector is zero".into()));
    }
    u /= C64::new(norm, 0.0);

    let mut projection = DVector::<C64>::zeros(u.len());
    let mut span = 0;
    for (j, l) in spectrum.eigenvalues().iter().enumerate() {
        if (l - target).abs() < window {
            let e = spectrum.vectors().column(j).map(|x| C64::new(x, 0.0));
            let coeff = e.dotc(&u);
            projection += e * coeff;
            span += 1;
        }
    }
    Ok(PointwiseGap {
        min_gap,
        residual: (u - projection).norm(),
        span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::finite_capacitance;
    use crate::geometry::{generate, index_set, GeneratorParams, StructureKind};
    use crate::spectra::{band_at, finite_frequencies};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_gap() {
        let i = DMatrix::<f64>::identity(4, 4);
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(frobenius_gap(&i, &i).unwrap(), 0.0);
        assert!((frobenius_gap(&i, &z).unwrap() - 1.0).abs() < 1e-15);
        assert!(frobenius_gap(&i, &DMatrix::zeros(3, 3)).is_err());
    }

    proptest! {
        #[test]
        fn gap_is_a_metric(seed in prop::collection::vec(-1.0f64..1.0, 27)) {
            let m = |k: usize| DMatrix::from_column_slice(3, 3, &seed[9 * k..9 * k + 9]);
            let (a, b, c) = (m(0), m(1), m(2));
            let ab = frobenius_gap(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, frobenius_gap(&b, &a).unwrap());
            prop_assert!(frobenius_gap(&a, &c).unwrap() <= ab + frobenius_gap(&b, &c).unwrap() + 1e-15);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn pointwise_gap_limits() {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        let c = finite_capacitance(&s.lattice, &s.cell, &index_set(&s.lattice, 30.5).unwrap()).unwrap();
        let f = finite_frequencies(&c).unwrap();
        let alpha = Vec3::new(PI / 2.0, 0.0, 0.0);
        let (w, v) = band_at(&s.lattice, &s.cell, &alpha, 1e-11).unwrap();
        let bloch = v.column(0).into_owned();
        let narrow = pointwise_gap(&s.lattice, w[0], &bloch, &alpha, &f, 1e-3).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&narrow.residual));
        assert!(narrow.min_gap < 1e-2 * w[0] * w[0]);
        let full = pointwise_gap(&s.lattice, w[0], &bloch, &alpha, &f, f64::INFINITY).unwrap();
        assert_eq!(full.span, f.len());
        assert!(full.residual < 1e-12);
        let none = pointwise_gap(&s.lattice, w[0], &bloch, &alpha, &f, 0.0).unwrap();
        assert!((none.residual - 1.0).abs() < 1e-12);
    }
}

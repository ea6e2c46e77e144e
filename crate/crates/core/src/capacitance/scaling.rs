use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::CapacitanceMatrix;
use crate::error::{Error, Result};

/// Per-slot material parameters; slot `i` is scaled by `δ_i v_i² / |D_i|`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedScaling {
    contrast: Vec<f64>,
    speed: Vec<f64>,
    volume: Vec<f64>,
}

impl GeneralizedScaling {
    pub fn new(contrast: Vec<f64>, speed: Vec<f64>, volume: Vec<f64>) -> Result<Self> {
        for v in [&speed, &volume] {
            if v.len() != contrast.len() {
                return Err(Error::SizeMismatch {
                    expected: contrast.len(),
                    actual: v.len(),
                });
            }
        }
        let all = contrast.iter().chain(&speed).chain(&volume);
        if let Some(x) = all.into_iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "scaling parameters must be positive, got {x}"
            )));
        }
        Ok(Self {
            contrast,
            speed,
            volume,
        })
    }

    /// Scaling factor 1 in every slot.
    pub fn unit(slots: usize) -> Self {
        Self {
            contrast: vec![1.0; slots],
            speed: vec![1.0; slots],
            volume: vec![1.0; slots],
        }
    }

    /// Sphere volumes `4πR³/3` from the radii.
    pub fn spheres(contrast: Vec<f64>, speed: Vec<f64>, radii: &[f64]) -> Result<Self> {
        let volume = radii.iter().map(|r| 4.0 / 3.0 * PI * r.powi(3)).collect();
        Self::new(contrast, speed, volume)
    }

    pub fn slots(&self) -> usize {
        self.contrast.len()
    }

    pub fn factors(&self) -> Vec<f64> {
        self.contrast
            .iter()
            .zip(&self.speed)
            .zip(&self.volume)
            .map(|((d, v), vol)| d * v * v / vol)
            .collect()
    }
}

fn row_factors(c: &CapacitanceMatrix, scaling: &GeneralizedScaling) -> Result<Vec<f64>> {
    let f = scaling.factors();
    c.labels()
        .iter()
        .map(|l| {
            f.get(l.local).copied().ok_or(Error::IndexOutOfRange {
                index: l.local,
                size: f.len(),
            })
        })
        .collect()
}

/// Generalized capacitance matrix `S C` with `S` the diagonal of slot factors.
pub fn generalize(c: &CapacitanceMatrix, scaling: &GeneralizedScaling) -> Result<DMatrix<f64>> {
    let f = row_factors(c, scaling)?;
    let mut out = c.matrix().clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= f[i];
    }
    Ok(out)
}

/// `S^{1/2} C S^{1/2}`, symmetric and with the spectrum of `S C`.
pub fn generalized_symmetric(
    c: &CapacitanceMatrix,
    scaling: &GeneralizedScaling,
) -> Result<CapacitanceMatrix> {
    let f: Vec<f64> = row_factors(c, scaling)?.iter().map(|x| x.sqrt()).collect();
    let m = DMatrix::from_fn(c.len(), c.len(), |i, j| f[i] * c.matrix()[(i, j)] * f[j]);
    CapacitanceMatrix::new(m, c.labels().to_vec())
}

/// `B^{1/2} C B^{1/2}` with `B` the identity except `factor` at `site`.
pub fn apply_defect(c: &CapacitanceMatrix, site: usize, factor: f64) -> Result<CapacitanceMatrix> {
    if site >= c.len() {
        return Err(Error::IndexOutOfRange {
            index: site,
            size: c.len(),
        });
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "defect factor must be positive, got {factor}"
        )));
    }
    let s = factor.sqrt();
    let mut m = c.matrix().clone();
    m.row_mut(site).scale_mut(s);
    m.column_mut(site).scale_mut(s);
    CapacitanceMatrix::new(m, c.labels().to_vec())
}

/// Maps an eigenvector `v` of `B^{1/2} C B^{1/2}` to the normalised eigenvector
/// `B^{1/2} v` of `B C`.
pub fn defect_mode(v: &[f64], site: usize, factor: f64) -> Result<Vec<f64>> {
    if site >= v.len() {
        return Err(Error::IndexOutOfRange {
            index: site,
            size: v.len(),
        });
    }
    let mut out = v.to_vec();
    out[site] *= factor.sqrt();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::finite_capacitance;
    use crate::geometry::{index_set, LatticeSpec, ResonatorCell, SiteLabel, Vec3};
    use nalgebra::SymmetricEigen;

    fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigenvalues of a general real matrix with real spectrum, via the Schur form.
    fn general_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
        let mut ev: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-10);
                z.re
            })
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn chain(r: f64) -> CapacitanceMatrix {
        let l = LatticeSpec::chain(1.0).unwrap();
        let cell = ResonatorCell::new(vec![Vec3::zeros()], vec![0.1]).unwrap();
        finite_capacitance(&l, &cell, &index_set(&l, r).unwrap()).unwrap()
    }

    #[test]
    fn unit_scaling_is_identity() {
        let c = chain(3.5);
        assert_eq!(generalize(&c, &GeneralizedScaling::unit(1)).unwrap(), *c.matrix());
    }

    #[test]
    fn uniform_scaling_scales_spectrum() {
        let c = chain(4.5);
        let s = GeneralizedScaling::new(vec![3.0], vec![2.0], vec![1.5]).unwrap();
        let base = sorted_eigenvalues(c.matrix().clone());
        let scaled = general_eigenvalues(generalize(&c, &s).unwrap());
        for (a, b) in base.iter().zip(&scaled) {
            assert!((8.0 * a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mixed_contrast_on_two_resonators() {
        let l = LatticeSpec::chain(2.0).unwrap();
        let cell = ResonatorCell::new(
            vec![Vec3::zeros(), Vec3::new(0.7, 0.0, 0.0)],
            vec![0.1, 0.15],
        )
        .unwrap();
        let c = finite_capacitance(&l, &cell, &index_set(&l, 0.5).unwrap()).unwrap();
        let s = GeneralizedScaling::spheres(vec![0.5, 2.0], vec![1.0, 3.0], cell.radii()).unwrap();
        let f = s.factors();
        // explicit 2×2: eigenvalues of [[f0 c00, f0 c01], [f1 c10, f1 c11]]
        let m = c.matrix();
        let (a, b, cc, d) = (f[0] * m[(0, 0)], f[0] * m[(0, 1)], f[1] * m[(1, 0)], f[1] * m[(1, 1)]);
        let tr = a + d;
        let disc = ((a - d).powi(2) + 4.0 * b * cc).sqrt();
        let expected = [(tr - disc) / 2.0, (tr + disc) / 2.0];
        let sym = sorted_eigenvalues(generalized_symmetric(&c, &s).unwrap().into_matrix());
        for (e, g) in expected.iter().zip(&sym) {
            assert!((e - g).abs() < 1e-10 * e.abs());
        }
    }

    #[test]
    fn defect_factor_one_is_identity() {
        let c = chain(5.5);
        assert_eq!(apply_defect(&c, 3, 1.0).unwrap(), c);
    }

    #[test]
    fn defect_matches_similarity_oracle() {
        let c = chain(2.5);
        let d = apply_defect(&c, 2, 2.5).unwrap();
        let mut b = DMatrix::<f64>::identity(5, 5);
        b[(2, 2)] = 2.5;
        let bc = general_eigenvalues(&b * c.matrix());
        let sym = sorted_eigenvalues(d.matrix().clone());
        for (x, y) in bc.iter().zip(&sym) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(d.asymmetry() < 1e-15);

        let eig = SymmetricEigen::new(d.matrix().clone());
        let v: Vec<f64> = eig.eigenvectors.column(0).iter().copied().collect();
        let w = DMatrix::from_column_slice(5, 1, &defect_mode(&v, 2, 2.5).unwrap());
        let bcw = &b * c.matrix() * &w;
        assert!((bcw - &w * eig.eigenvalues[0]).norm() < 1e-12);
    }

    #[test]
    fn defect_validation() {
        let c = chain(2.5);
        assert!(matches!(
            apply_defect(&c, 5, 2.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(apply_defect(&c, 0, 0.0).is_err());
        let bad = CapacitanceMatrix::new(
            DMatrix::identity(1, 1),
            vec![SiteLabel {
                cell: [0; 3],
                local: 1,
            }],
        )
        .unwrap();
        assert!(generalize(&bad, &GeneralizedScaling::unit(1)).is_err());
    }
}

use super::{LatticeSpec, Vec3};
use crate::error::{Error, Result};

/// Midpoint sampling of the Brillouin zone `Y*`.
///
/// Samples are `α = Σ_i ((k_i + 1/2)/n − 1/2) α̂_i`, `k_i = 0..n−1`, ordered
/// with the last axis fastest. `n` must be even, so the grid never contains
/// `α = 0`; it is closed under `α ↦ −α`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrillouinGrid {
    dim: usize,
    n: usize,
    points: Vec<Vec3>,
    fractions: Vec<[f64; 3]>,
    weight: f64,
}

impl BrillouinGrid {
    pub fn new(lattice: &LatticeSpec, n: usize) -> Result<Self> {
        if n < 2 || n % 2 == 1 {
            return Err(Error::InvalidArgument(format!(
                "Brillouin grid needs an even number (≥ 2) of samples per axis, got {n}"
            )));
        }
        let dim = lattice.dim();
        let frac = |k: usize| (k as f64 + 0.5) / n as f64 - 0.5;
        let total = n.pow(dim as u32);

        let mut points = Vec::with_capacity(total);
        let mut fractions = Vec::with_capacity(total);
        for flat in 0..total {
            let mut f = [0.0; 3];
            let mut rest = flat;
            for axis in (0..dim).rev() {
                f[axis] = frac(rest % n);
                rest /= n;
            }
            let alpha = lattice
                .dual_vectors()
                .iter()
                .zip(f)
                .fold(Vec3::zeros(), |acc, (a, c)| acc + a * c);
            points.push(alpha);
            fractions.push(f);
        }

        Ok(Self {
            dim,
            n,
            points,
            fractions,
            weight: lattice.dual_cell_measure() / total as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Dual-basis coordinates of each sample, in `(−1/2, 1/2)`.
    pub fn fractions(&self) -> &[[f64; 3]] {
        &self.fractions
    }

    /// Quadrature weight of every sample; they sum to `|Y*|`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Index of the sample at `−α` for the sample at `index`.
    pub fn mirror(&self, index: usize) -> usize {
        let mut digits = [0usize; 3];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            digits[axis] = rest % self.n;
            rest /= self.n;
        }
        digits[..self.dim]
            .iter()
            .fold(0, |acc, &d| acc * self.n + (self.n - 1 - d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn chain_samples() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let g = BrillouinGrid::new(&l, 2).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|a| a.x).collect();
        assert_relative_eq!(xs[0], -PI / 2.0);
        assert_relative_eq!(xs[1], PI / 2.0);

        let g = BrillouinGrid::new(&l, 4).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|a| a.x).collect();
        for (x, e) in xs.iter().zip([-0.75, -0.25, 0.25, 0.75]) {
            assert_relative_eq!(*x, e * PI, epsilon = 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_zone_measure() {
        let l = LatticeSpec::triangular(1.0).unwrap();
        for n in [2, 4, 8] {
            let g = BrillouinGrid::new(&l, n).unwrap();
            assert_relative_eq!(
                g.weight() * g.len() as f64,
                l.dual_cell_measure(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn excludes_zero_and_mirrors() {
        let l = LatticeSpec::triangular(1.0).unwrap();
        for n in [2, 6, 8] {
            let g = BrillouinGrid::new(&l, n).unwrap();
            for (i, a) in g.points().iter().enumerate() {
                assert!(a.norm() > 1e-12);
                let m = g.mirror(i);
                assert!((g.points()[m] + a).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_tiny_and_odd_grids() {
        let l = LatticeSpec::chain(1.0).unwrap();
        assert!(BrillouinGrid::new(&l, 1).is_err());
        assert!(BrillouinGrid::new(&l, 5).is_err());
    }
}

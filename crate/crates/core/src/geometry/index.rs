use std::f64::consts::PI;

use super::{LatticeSpec, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    /// Integer coordinates in the lattice basis (unused axes are zero).
    pub coords: [i64; 3],
    pub position: Vec3,
}

/// Ordered set of lattice points of a finite truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteLatticeIndex {
    radius: Option<f64>,
    points: Vec<LatticePoint>,
}

/// All lattice points with `|m| < r`, in lexicographic order of their integer coordinates.
pub fn index_set(lattice: &LatticeSpec, r: f64) -> Result<FiniteLatticeIndex> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "truncation radius must be positive, got {r}"
        )));
    }
    // |k_i| = |α̂_i · m| / 2π ≤ |α̂_i| r / 2π
    let bound = |axis: usize| -> i64 {
        if axis < lattice.dim() {
            (r * lattice.dual_vectors()[axis].norm() / (2.0 * PI)).floor() as i64
        } else {
            0
        }
    };
    let (b0, b1, b2) = (bound(0), bound(1), bound(2));

    let mut points = Vec::new();
    for a in -b0..=b0 {
        for b in -b1..=b1 {
            for c in -b2..=b2 {
                let coords = [a, b, c];
                let position = lattice.point(coords);
                if position.norm() < r {
                    points.push(LatticePoint { coords, position });
                }
            }
        }
    }
    Ok(FiniteLatticeIndex {
        radius: Some(r),
        points,
    })
}

impl FiniteLatticeIndex {
    /// Rectangular block of cells `0 ≤ k_i < counts[i]`, for truncations whose
    /// size cannot be written as `|I_r|` (e.g. an even number of chain cells).
    pub fn block(lattice: &LatticeSpec, counts: &[usize]) -> Result<Self> {
        if counts.len() != lattice.dim() {
            return Err(Error::SizeMismatch {
                expected: lattice.dim(),
                actual: counts.len(),
            });
        }
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("cell counts must be positive".into()));
        }
        let n = |axis: usize| counts.get(axis).copied().unwrap_or(1) as i64;
        let mut points = Vec::new();
        for a in 0..n(0) {
            for b in 0..n(1) {
                for c in 0..n(2) {
                    let coords = [a, b, c];
                    points.push(LatticePoint {
                        coords,
                        position: lattice.point(coords),
                    });
                }
            }
        }
        Ok(Self {
            radius: None,
            points,
        })
    }

    /// Arbitrary list of lattice points; sorted into lexicographic order.
    pub fn from_coords(lattice: &LatticeSpec, coords: impl IntoIterator<Item = [i64; 3]>) -> Self {
        let mut coords: Vec<_> = coords.into_iter().collect();
        coords.sort_unstable();
        coords.dedup();
        let points = coords
            .into_iter()
            .map(|coords| LatticePoint {
                coords,
                position: lattice.point(coords),
            })
            .collect();
        Self {
            radius: None,
            points,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position_of(&self, coords: [i64; 3]) -> Option<usize> {
        self.points.binary_search_by(|p| p.coords.cmp(&coords)).ok()
    }

    /// Number of distinct integer coordinates spanned along each axis.
    pub fn extent(&self) -> [usize; 3] {
        let mut out = [1; 3];
        for (axis, o) in out.iter_mut().enumerate() {
            let lo = self.points.iter().map(|p| p.coords[axis]).min();
            let hi = self.points.iter().map(|p| p.coords[axis]).max();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                *o = (hi - lo + 1) as usize;
            }
        }
        out
    }

    /// Largest `|m − n|` over pairs of points in the set.
    pub fn max_offset_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for p in &self.points {
            for q in &self.points {
                best = best.max((p.position - q.position).norm());
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_truncation() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let idx = index_set(&l, 2.5).unwrap();
        let xs: Vec<i64> = idx.points().iter().map(|p| p.coords[0]).collect();
        assert_eq!(xs, vec![-2, -1, 0, 1, 2]);
        assert_eq!(index_set(&l, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn square_truncation_includes_diagonals() {
        let l = LatticeSpec::square(1.0).unwrap();
        assert_eq!(index_set(&l, 1.5).unwrap().len(), 9);
        assert_eq!(index_set(&l, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn brute_force_membership_on_triangular() {
        let l = LatticeSpec::triangular(1.0).unwrap();
        let r = 4.3;
        let idx = index_set(&l, r).unwrap();
        let mut expected = Vec::new();
        for a in -20..=20 {
            for b in -20..=20 {
                if l.point([a, b, 0]).norm() < r {
                    expected.push([a, b, 0]);
                }
            }
        }
        let got: Vec<_> = idx.points().iter().map(|p| p.coords).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn block_and_extent() {
        let l = LatticeSpec::square(1.0).unwrap();
        let b = FiniteLatticeIndex::block(&l, &[3, 2]).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.extent(), [3, 2, 1]);
        assert_eq!(b.position_of([2, 1, 0]), Some(5));
    }

    proptest! {
        #[test]
        fn index_set_is_monotone(r1 in 0.1f64..6.0, dr in 0.0f64..3.0) {
            let l = LatticeSpec::triangular(1.0).unwrap();
            let small = index_set(&l, r1).unwrap();
            let large = index_set(&l, r1 + dr).unwrap();
            for p in small.points() {
                prop_assert!(large.position_of(p.coords).is_some());
            }
        }
    }
}

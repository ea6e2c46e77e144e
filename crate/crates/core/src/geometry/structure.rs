use std::io::Write;

use super::{FiniteLatticeIndex, LatticeSpec, ResonatorCell, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Cell and in-cell slot a resonator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteLabel {
    pub cell: [i64; 3],
    pub local: usize,
}

/// A finite collection of spheres, each labelled by a lattice cell and a slot.
///
/// Periodic truncations fill every slot of every cell in lexicographic order of
/// `(cell, local)`. Aperiodic structures may leave slots vacant; their modes are
/// zero-padded by [`FiniteStructure::cell_blocks`].
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteStructure {
    spheres: Vec<Sphere>,
    labels: Vec<SiteLabel>,
    cells: FiniteLatticeIndex,
    slots: usize,
}

impl FiniteStructure {
    pub fn periodic(
        lattice: &LatticeSpec,
        cell: &ResonatorCell,
        index: &FiniteLatticeIndex,
    ) -> Self {
        let mut spheres = Vec::with_capacity(index.len() * cell.len());
        let mut labels = Vec::with_capacity(index.len() * cell.len());
        for p in index.points() {
            for (i, (z, r)) in cell.centers().iter().zip(cell.radii()).enumerate() {
                spheres.push(Sphere {
                    center: z + lattice.point(p.coords),
                    radius: *r,
                });
                labels.push(SiteLabel {
                    cell: p.coords,
                    local: i,
                });
            }
        }
        Self {
            spheres,
            labels,
            cells: index.clone(),
            slots: cell.len(),
        }
    }

    /// Aperiodic structure with explicit labels; `slots` is the cell width `N`.
    pub fn from_parts(
        lattice: &LatticeSpec,
        spheres: Vec<Sphere>,
        labels: Vec<SiteLabel>,
        slots: usize,
    ) -> Result<Self> {
        if spheres.len() != labels.len() {
            return Err(Error::SizeMismatch {
                expected: spheres.len(),
                actual: labels.len(),
            });
        }
        if let Some(l) = labels.iter().find(|l| l.local >= slots) {
            return Err(Error::IndexOutOfRange {
                index: l.local,
                size: slots,
            });
        }
        let cells = FiniteLatticeIndex::from_coords(lattice, labels.iter().map(|l| l.cell));
        Ok(Self {
            spheres,
            labels,
            cells,
            slots,
        })
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn labels(&self) -> &[SiteLabel] {
        &self.labels
    }

    pub fn cells(&self) -> &FiniteLatticeIndex {
        &self.cells
    }

    /// Slots per cell (`N`).
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    /// Pairwise disjointness of every sphere in the structure.
    pub fn check_disjoint(&self) -> Result<()> {
        // Sort along x so the sweep only compares nearby spheres.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.spheres[a]
                .center
                .x
                .total_cmp(&self.spheres[b].center.x)
        });
        let rmax = self.spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
        for (pos, &i) in order.iter().enumerate() {
            let si = &self.spheres[i];
            for &j in &order[pos + 1..] {
                let sj = &self.spheres[j];
                if sj.center.x - si.center.x > 2.0 * rmax {
                    break;
                }
                let gap = (si.center - sj.center).norm() - si.radius - sj.radius;
                if gap <= 0.0 {
                    return Err(Error::Overlap {
                        first: i.min(j),
                        second: i.max(j),
                        gap,
                    });
                }
            }
        }
        Ok(())
    }

    /// Spreads a per-resonator vector over `N · |cells|` slots, zero in vacant ones.
    pub fn cell_blocks(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        let mut out = vec![0.0; self.cells.len() * self.slots];
        for (v, label) in values.iter().zip(&self.labels) {
            let c = self
                .cells
                .position_of(label.cell)
                .expect("label cell is part of the cell index");
            out[c * self.slots + label.local] = *v;
        }
        Ok(out)
    }

    /// CSV with one row per resonator: `x,y,z,R,cell_m1,cell_m2,local_index`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(["x", "y", "z", "R", "cell_m1", "cell_m2", "local_index"])?;
        for (s, l) in self.spheres.iter().zip(&self.labels) {
            w.write_record([
                s.center.x.to_string(),
                s.center.y.to_string(),
                s.center.z.to_string(),
                s.radius.to_string(),
                l.cell[0].to_string(),
                l.cell[1].to_string(),
                l.local.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::index_set;

    #[test]
    fn periodic_labels_are_lexicographic() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let cell = ResonatorCell::new(
            vec![Vec3::zeros(), Vec3::new(0.4, 0.0, 0.0)],
            vec![0.1, 0.1],
        )
        .unwrap();
        let s = FiniteStructure::periodic(&l, &cell, &index_set(&l, 1.5).unwrap());
        assert_eq!(s.len(), 6);
        let mut sorted = s.labels().to_vec();
        sorted.sort();
        assert_eq!(sorted, s.labels());
        assert!((s.spheres()[1].center.x + 0.6).abs() < 1e-15);
        s.check_disjoint().unwrap();
    }

    #[test]
    fn vacant_slots_are_zero_padded() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let spheres = (0..3)
            .map(|k| Sphere {
                center: Vec3::new(0.5 * k as f64, 0.0, 0.0),
                radius: 0.1,
            })
            .collect();
        let labels = (0..3)
            .map(|k: usize| SiteLabel {
                cell: [(k / 2) as i64, 0, 0],
                local: k % 2,
            })
            .collect();
        let s = FiniteStructure::from_parts(&l, spheres, labels, 2).unwrap();
        assert_eq!(s.cell_blocks(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn csv_has_one_row_per_resonator() {
        let l = LatticeSpec::square(1.0).unwrap();
        let cell = ResonatorCell::new(vec![Vec3::zeros()], vec![0.1]).unwrap();
        let s = FiniteStructure::periodic(&l, &cell, &index_set(&l, 1.5).unwrap());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("x,y,z,R,cell_m1,cell_m2,local_index\n"));
    }
}

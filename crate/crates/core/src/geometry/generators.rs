use std::fmt;
use std::str::FromStr;

use super::{FiniteLatticeIndex, FiniteStructure, LatticeSpec, ResonatorCell, SiteLabel, Sphere, Vec3};
use super::index_set;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StructureKind {
    MonomerChain,
    SshDimer,
    SquareDimer,
    Honeycomb,
    PointDefectChain,
    SshInterfaceChain,
}

impl StructureKind {
    pub const ALL: [StructureKind; 6] = [
        StructureKind::MonomerChain,
        StructureKind::SshDimer,
        StructureKind::SquareDimer,
        StructureKind::Honeycomb,
        StructureKind::PointDefectChain,
        StructureKind::SshInterfaceChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::MonomerChain => "monomer_chain",
            StructureKind::SshDimer => "ssh_dimer",
            StructureKind::SquareDimer => "square_dimer",
            StructureKind::Honeycomb => "honeycomb",
            StructureKind::PointDefectChain => "point_defect_chain",
            StructureKind::SshInterfaceChain => "ssh_interface_chain",
        }
    }

    /// Kinds whose finite structure is fixed by the parameters rather than a truncation.
    pub fn is_defected(self) -> bool {
        matches!(
            self,
            StructureKind::PointDefectChain | StructureKind::SshInterfaceChain
        )
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown structure kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub radius: f64,
    /// Lattice constant of monomer chains and square lattices.
    pub lattice_constant: f64,
    /// Intra-dimer spacing of SSH chains.
    pub s1: f64,
    /// Inter-dimer spacing of SSH chains.
    pub s2: f64,
    /// Centre distance of the two resonators in a square-lattice dimer.
    pub dimer_separation: f64,
    /// Nearest-neighbour distance of the honeycomb lattice.
    pub nn_distance: f64,
    /// Resonator count of defected chains.
    pub sites: Option<usize>,
    /// 1-based defect site of the point-defect chain (default: centre).
    pub defect_site: Option<usize>,
    pub defect_factor: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            radius: 0.1,
            lattice_constant: 1.0,
            s1: 0.4,
            s2: 0.6,
            dimer_separation: 0.3,
            nn_distance: 1.0 / 3f64.sqrt(),
            sites: None,
            defect_site: None,
            defect_factor: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointDefect {
    /// 0-based resonator index.
    pub site: usize,
    pub factor: f64,
}

/// Output of a generator: the periodic lattice and cell, and for defected kinds
/// the fixed finite structure with its defect.
#[derive(Clone, Debug)]
pub struct Structure {
    pub kind: StructureKind,
    pub lattice: LatticeSpec,
    pub cell: ResonatorCell,
    aperiodic: Option<FiniteStructure>,
    defect: Option<PointDefect>,
}

impl Structure {
    pub fn defect(&self) -> Option<PointDefect> {
        self.defect
    }

    /// The finite structure of a defected kind, if any.
    pub fn defected_structure(&self) -> Option<&FiniteStructure> {
        self.aperiodic.as_ref()
    }

    /// Centred truncation `I_r` of the periodic structure.
    pub fn truncate(&self, r: f64) -> Result<FiniteStructure> {
        let index = index_set(&self.lattice, r)?;
        let s = FiniteStructure::periodic(&self.lattice, &self.cell, &index);
        s.check_disjoint()?;
        Ok(s)
    }

    /// Rectangular block of `counts[i]` cells along each lattice axis.
    pub fn block(&self, counts: &[usize]) -> Result<FiniteStructure> {
        let index = FiniteLatticeIndex::block(&self.lattice, counts)?;
        let s = FiniteStructure::periodic(&self.lattice, &self.cell, &index);
        s.check_disjoint()?;
        Ok(s)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

pub fn generate(kind: StructureKind, p: &GeneratorParams) -> Result<Structure> {
    positive("radius", p.radius)?;
    let x = |v: f64| Vec3::new(v, 0.0, 0.0);

    let (lattice, cell) = match kind {
        StructureKind::MonomerChain | StructureKind::PointDefectChain => {
            positive("lattice_constant", p.lattice_constant)?;
            (
                LatticeSpec::chain(p.lattice_constant)?,
                ResonatorCell::new(vec![Vec3::zeros()], vec![p.radius])?,
            )
        }
        StructureKind::SshDimer | StructureKind::SshInterfaceChain => {
            positive("s1", p.s1)?;
            positive("s2", p.s2)?;
            (
                LatticeSpec::chain(p.s1 + p.s2)?,
                ResonatorCell::new(vec![Vec3::zeros(), x(p.s1)], vec![p.radius; 2])?,
            )
        }
        StructureKind::SquareDimer => {
            positive("lattice_constant", p.lattice_constant)?;
            positive("dimer_separation", p.dimer_separation)?;
            let h = 0.5 * p.dimer_separation;
            (
                LatticeSpec::square(p.lattice_constant)?,
                ResonatorCell::new(vec![x(-h), x(h)], vec![p.radius; 2])?,
            )
        }
        StructureKind::Honeycomb => {
            positive("nn_distance", p.nn_distance)?;
            let a = 3f64.sqrt() * p.nn_distance;
            (
                LatticeSpec::triangular(a)?,
                ResonatorCell::new(
                    vec![Vec3::zeros(), Vec3::new(0.5 * a, 0.5 * p.nn_distance, 0.0)],
                    vec![p.radius; 2],
                )?,
            )
        }
    };
    cell.check_disjoint(&lattice)?;
    if cell.dilute_warning(&lattice) {
        log::warn!(
            "{kind}: radius/separation exceeds 0.2, the point-potential model is less accurate"
        );
    }

    let mut structure = Structure {
        kind,
        lattice,
        cell,
        aperiodic: None,
        defect: None,
    };

    match kind {
        StructureKind::PointDefectChain => {
            let sites = p.sites.unwrap_or(51);
            let site = p.defect_site.unwrap_or((sites + 1) / 2);
            if site == 0 || site > sites {
                return Err(Error::IndexOutOfRange {
                    index: site,
                    size: sites,
                });
            }
            positive("defect_factor", p.defect_factor)?;
            structure.aperiodic = Some(structure.block(&[sites])?);
            structure.defect = Some(PointDefect {
                site: site - 1,
                factor: p.defect_factor,
            });
        }
        StructureKind::SshInterfaceChain => {
            let sites = p.sites.unwrap_or(101);
            structure.aperiodic = Some(interface_chain(&structure.lattice, p, sites)?);
        }
        _ => {}
    }
    Ok(structure)
}

/// Mirror-symmetric SSH chain: spacings alternate `s1, s2, …` from both ends
/// and the spacing repeated at the centre sits on either side of the middle
/// resonator. Resonators are grouped pairwise from the left into dimer cells.
fn interface_chain(lattice: &LatticeSpec, p: &GeneratorParams, sites: usize) -> Result<FiniteStructure> {
    if sites < 3 || sites % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "interface chain needs an odd number (≥ 3) of resonators, got {sites}"
        )));
    }
    let half = (sites - 1) / 2;
    let left: Vec<f64> = (0..half)
        .map(|k| if k % 2 == 0 { p.s1 } else { p.s2 })
        .collect();
    let spacings = left.iter().chain(left.iter().rev());

    let mut xs = vec![0.0];
    for s in spacings {
        xs.push(xs.last().unwrap() + s);
    }
    let spheres = xs
        .iter()
        .map(|&x| Sphere {
            center: Vec3::new(x, 0.0, 0.0),
            radius: p.radius,
        })
        .collect();
    let labels = (0..sites)
        .map(|k| SiteLabel {
            cell: [(k / 2) as i64, 0, 0],
            local: k % 2,
        })
        .collect();
    let s = FiniteStructure::from_parts(lattice, spheres, labels, 2)?;
    s.check_disjoint()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomer_defaults() {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        assert_eq!(s.lattice.dim(), 1);
        assert_eq!(s.cell.len(), 1);
        assert_eq!(s.cell.centers()[0], Vec3::zeros());
        assert!(s.defect().is_none());
    }

    #[test]
    fn ssh_dimer_cell() {
        let s = generate(StructureKind::SshDimer, &GeneratorParams::default()).unwrap();
        assert!((s.lattice.vectors()[0].x - 1.0).abs() < 1e-15);
        assert_eq!(s.cell.centers()[1].x, 0.4);
    }

    #[test]
    fn interface_chain_spacings() {
        let s = generate(StructureKind::SshInterfaceChain, &GeneratorParams::default()).unwrap();
        let f = s.defected_structure().unwrap();
        assert_eq!(f.len(), 101);
        let xs: Vec<f64> = f.spheres().iter().map(|s| s.center.x).collect();
        let gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(gaps.len(), 100);
        assert!((gaps[0] - 0.4).abs() < 1e-12);
        assert!((gaps[99] - 0.4).abs() < 1e-12);
        // the two spacings around the 51st resonator repeat
        assert!((gaps[49] - gaps[50]).abs() < 1e-12);
        for k in 0..49 {
            assert!((gaps[k] - gaps[k + 1]).abs() > 0.1);
            assert!((gaps[k] - gaps[99 - k]).abs() < 1e-12);
        }
        assert_eq!(f.cells().len(), 51);
    }

    #[test]
    fn point_defect_defaults() {
        let s = generate(StructureKind::PointDefectChain, &GeneratorParams::default()).unwrap();
        assert_eq!(s.defected_structure().unwrap().len(), 51);
        assert_eq!(s.defect().unwrap().site, 25);
    }

    #[test]
    fn all_defaults_are_disjoint() {
        for kind in StructureKind::ALL {
            let s = generate(kind, &GeneratorParams::default()).unwrap();
            s.cell.check_disjoint(&s.lattice).unwrap();
            if let Some(f) = s.defected_structure() {
                f.check_disjoint().unwrap();
            }
            assert_eq!(kind.name().parse::<StructureKind>().unwrap(), kind);
        }
    }

    #[test]
    fn overlapping_parameters_rejected() {
        let p = GeneratorParams {
            radius: 0.25,
            s1: 0.4,
            ..Default::default()
        };
        assert!(matches!(
            generate(StructureKind::SshDimer, &p),
            Err(Error::Overlap { .. })
        ));
    }
}

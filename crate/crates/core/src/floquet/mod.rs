//! Truncated Floquet transform of finite eigenmodes and the discrete band
//! structure it induces.
//!
//! For a mode `u` of a truncated lattice with cell blocks `u_m`, the transform
//! is `û_α = Σ_m u_m e^{iα·m}`. A Bloch-like mode has a sharp peak in `‖û_α‖`
//! at its quasi-periodicity (and at `−α`, since modes are real); a localized
//! mode has none and is flagged through its inverse participation ratio.

mod grid;

pub use grid::{floquet_profile, FloquetProfile};

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{FiniteLatticeIndex, FiniteStructure, LatticeSpec, ResonatorCell, Vec3};
use crate::spectra::{band_at, FiniteSpectrum};
use crate::C64;

pub const DEFAULT_OVERSAMPLING: usize = 4;
pub const DEFAULT_IPR_THRESHOLD: f64 = 0.1;
/// Relative tolerance under which two peak heights count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetOptions {
    /// Fine-grid points per axis per cell of the truncation's extent.
    pub oversampling: usize,
    /// Modes with a larger IPR are localized.
    pub ipr_threshold: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            oversampling: DEFAULT_OVERSAMPLING,
            ipr_threshold: DEFAULT_IPR_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeAssignment {
    /// 0-based mode index in ascending frequency order.
    pub index: usize,
    pub frequency: f64,
    /// Assigned quasi-periodicity; `None` for localized modes.
    pub alpha: Option<Vec3>,
    /// Location of the largest `‖û_α‖`, kept even for localized modes.
    pub peak_alpha: Vec3,
    /// `max_α ‖û_α‖²` over the fine grid.
    pub peak: f64,
    /// `max / mean` of `‖û_α‖²` over the fine grid.
    pub peak_ratio: f64,
    pub ipr: f64,
    pub localized: bool,
}

fn check_len(len: usize, index: &FiniteLatticeIndex, slots: usize) -> Result<()> {
    if len != index.len() * slots {
        return Err(Error::SizeMismatch {
            expected: index.len() * slots,
            actual: len,
        });
    }
    Ok(())
}

/// `û_α = Σ_m u_m e^{iα·m}` for a mode laid out as `N`-blocks in the order of `index`.
pub fn truncated_floquet<T: Into<C64> + Copy>(
    u: &[T],
    index: &FiniteLatticeIndex,
    slots: usize,
    alpha: &Vec3,
) -> Result<Vec<C64>> {
    check_len(u.len(), index, slots)?;
    let mut out = vec![C64::new(0.0, 0.0); slots];
    for (block, p) in u.chunks(slots).zip(index.points()) {
        let phase = C64::from_polar(1.0, alpha.dot(&p.position));
        for (o, x) in out.iter_mut().zip(block) {
            *o += phase * (*x).into();
        }
    }
    Ok(out)
}

/// `Σ_m ‖u_m‖⁴ / (Σ_m ‖u_m‖²)²` over cell blocks.
pub fn inverse_participation_ratio<T: Into<C64> + Copy>(u: &[T], slots: usize) -> f64 {
    let weights: Vec<f64> = u
        .chunks(slots)
        .map(|b| b.iter().map(|x| (*x).into().norm_sqr()).sum())
        .collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    weights.iter().map(|w| w * w).sum::<f64>() / (total * total)
}

/// Fine-grid argmax of `‖û_α‖`. Near-ties go to the smaller `|α|`, then to the
/// sample whose first nonzero dual coordinate is positive.
pub fn assign_quasiperiodicity<T: Into<C64> + Copy>(
    u: &[T],
    lattice: &LatticeSpec,
    index: &FiniteLatticeIndex,
    slots: usize,
    options: &FloquetOptions,
) -> Result<(Vec3, f64, f64, f64)> {
    let profile = floquet_profile(u, lattice, index, slots, options.oversampling)?;
    let norms = profile.norms_squared();
    let max = norms.iter().copied().fold(0.0, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;

    let fractions = profile.grid().fractions();
    let points = profile.grid().points();
    let positive = |k: usize| {
        fractions[k]
            .iter()
            .find(|f| f.abs() > 1e-12)
            .is_some_and(|f| *f > 0.0)
    };
    let best = (0..norms.len())
        .filter(|&k| norms[k] >= max * (1.0 - TIE_TOLERANCE))
        .min_by(|&a, &b| {
            let (na, nb) = (points[a].norm(), points[b].norm());
            if (na - nb).abs() > 1e-12 * na.max(nb) {
                na.total_cmp(&nb)
            } else {
                positive(b).cmp(&positive(a))
            }
        })
        .ok_or(Error::EmptySpectrum)?;
    let ratio = if mean > 0.0 { max / mean } else { 1.0 };
    Ok((points[best], max, ratio, inverse_participation_ratio(u, slots)))
}

/// One assignment per mode of `spectrum`, in mode order. Modes of aperiodic
/// structures are zero-padded to full cells first.
pub fn discrete_bands(
    spectrum: &FiniteSpectrum,
    structure: &FiniteStructure,
    lattice: &LatticeSpec,
    options: &FloquetOptions,
) -> Result<Vec<ModeAssignment>> {
    if spectrum.len() != structure.len() {
        return Err(Error::SizeMismatch {
            expected: structure.len(),
            actual: spectrum.len(),
        });
    }
    (0..spectrum.len())
        .into_par_iter()
        .map(|j| {
            let u = structure.cell_blocks(&spectrum.mode(j))?;
            let (alpha, peak, peak_ratio, ipr) =
                assign_quasiperiodicity(&u, lattice, structure.cells(), structure.slots(), options)?;
            let localized = ipr > options.ipr_threshold;
            Ok(ModeAssignment {
                index: j,
                frequency: spectrum.frequencies()[j],
                alpha: (!localized).then_some(alpha),
                peak_alpha: alpha,
                peak,
                peak_ratio,
                ipr,
                localized,
            })
        })
        .collect()
}

/// Band of the periodic structure closest to an assigned mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandMatch {
    pub band: usize,
    pub omega_hat: f64,
    /// `|ω_j − ω̂_k(α_j)| / ω̂_k(α_j)`.
    pub relative_deviation: f64,
}

/// `None` for localized modes.
pub fn match_band(
    lattice: &LatticeSpec,
    cell: &ResonatorCell,
    mode: &ModeAssignment,
    tol: f64,
) -> Result<Option<BandMatch>> {
    let Some(alpha) = mode.alpha else {
        return Ok(None);
    };
    let (omegas, _) = band_at(lattice, cell, &alpha, tol)?;
    let best = omegas
        .iter()
        .enumerate()
        .map(|(k, w)| BandMatch {
            band: k,
            omega_hat: *w,
            relative_deviation: (mode.frequency - w).abs() / w,
        })
        .min_by(|a, b| a.relative_deviation.total_cmp(&b.relative_deviation));
    Ok(best)
}

/// `j,omega,alpha_1..alpha_d,peak_ratio,ipr,localized`, with `j` 1-based and
/// the `α` columns empty for localized modes. Chains report `|α|`.
pub fn write_discrete_bands_csv<W: Write>(
    modes: &[ModeAssignment],
    dim: usize,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["j".to_string(), "omega".to_string()];
    header.extend((1..=dim).map(|i| format!("alpha_{i}")));
    header.extend(["peak_ratio", "ipr", "localized"].map(String::from));
    w.write_record(&header)?;
    for m in modes {
        let mut row = vec![(m.index + 1).to_string(), m.frequency.to_string()];
        match m.alpha {
            Some(a) if dim == 1 => row.push(a.x.abs().to_string()),
            Some(a) => row.extend(a.iter().take(dim).map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), dim)),
        }
        row.push(m.peak_ratio.to_string());
        row.push(m.ipr.to_string());
        row.push(m.localized.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

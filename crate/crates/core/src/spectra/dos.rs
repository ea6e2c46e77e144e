use std::f64::consts::PI;
use std::io::Write;

use super::BandStructure;
use crate::error::{Error, Result};

/// Unit-area histogram of frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct DOSHistogram {
    edges: Vec<f64>,
    density: Vec<f64>,
}

impl DOSHistogram {
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn area(&self) -> f64 {
        self.density
            .iter()
            .zip(self.widths())
            .map(|(d, w)| d * w)
            .sum()
    }

    /// `bin_center,density_finite,density_reference` for a finite histogram and its reference.
    pub fn write_pair_csv<W: Write>(&self, reference: &DOSHistogram, writer: W) -> Result<()> {
        check_edges(self, reference)?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_center", "density_finite", "density_reference"])?;
        for ((c, f), r) in self.centers().iter().zip(&self.density).zip(&reference.density) {
            w.write_record([c.to_string(), f.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `⌈√M⌉` bins for `M` frequencies.
pub fn default_bins(m: usize) -> usize {
    ((m as f64).sqrt().ceil() as usize).max(1)
}

/// `bins + 1` equally spaced edges over `[0, max]`.
pub fn uniform_edges(max: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "histogram range must be positive, got {max}"
        )));
    }
    let mut edges: Vec<f64> = (0..=bins).map(|k| max * k as f64 / bins as f64).collect();
    edges[bins] = max;
    Ok(edges)
}

fn histogram(values: &[f64], edges: Vec<f64>) -> Result<DOSHistogram> {
    if values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("bin edges must increase".into()));
    }
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0usize; bins];
    for &v in values {
        if !(v >= lo && v <= hi) {
            return Err(Error::InvalidArgument(format!(
                "frequency {v} lies outside the histogram range [{lo}, {hi}]"
            )));
        }
        let k = edges.partition_point(|e| *e <= v).clamp(1, bins) - 1;
        counts[k] += 1;
    }
    let total = values.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
        .collect();
    Ok(DOSHistogram { edges, density })
}

/// Histogram over `[0, max ω]`.
pub fn dos_histogram(frequencies: &[f64], bins: usize) -> Result<DOSHistogram> {
    let max = frequencies.iter().copied().fold(f64::NAN, f64::max);
    if frequencies.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    histogram(frequencies, uniform_edges(max, bins)?)
}

pub fn dos_histogram_with_edges(frequencies: &[f64], edges: &[f64]) -> Result<DOSHistogram> {
    histogram(frequencies, edges.to_vec())
}

/// Pushforward of the uniform measure on the grid: each `(k, α)` sample
/// contributes equal mass to the bin of `ω̂_k(α)`.
pub fn dos_reference(bands: &BandStructure, bins: usize) -> Result<DOSHistogram> {
    dos_reference_with_edges(bands, &uniform_edges(bands.max_frequency(), bins)?)
}

pub fn dos_reference_with_edges(bands: &BandStructure, edges: &[f64]) -> Result<DOSHistogram> {
    let samples: Vec<f64> = bands.frequencies().iter().flatten().copied().collect();
    let required = 8 * edges.len().saturating_sub(1);
    if samples.len() < required {
        return Err(Error::Resolution {
            samples: samples.len(),
            required,
        });
    }
    histogram(&samples, edges.to_vec())
}

/// `Σ |h − ref| · width`, in `[0, 2]`.
pub fn dos_l1_error(hist: &DOSHistogram, reference: &DOSHistogram) -> Result<f64> {
    check_edges(hist, reference)?;
    Ok(hist
        .density
        .iter()
        .zip(&reference.density)
        .zip(hist.widths())
        .map(|((a, b), w)| (a - b).abs() * w)
        .sum())
}

fn check_edges(a: &DOSHistogram, b: &DOSHistogram) -> Result<()> {
    let same = a.edges.len() == b.edges.len()
        && a.edges.iter().zip(&b.edges).all(|(x, y)| {
            (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
        });
    if same {
        Ok(())
    } else {
        Err(Error::BinMismatch)
    }
}

/// A single band of a chain, as needed for `D(ω) = (1/2π) Σ_{ω̂(α) = ω} 1/|ω̂′(α)|`.
pub trait BandFunction1d {
    /// `(min, max)` of the band.
    fn range(&self) -> (f64, f64);

    /// Every `α ∈ Y*` with `ω̂(α) = ω`, with `|ω̂′(α)|` there.
    fn preimages(&self, omega: f64) -> Vec<(f64, f64)>;
}

/// Closed-form band of a chain of identical spheres,
/// `ω̂(α)² = 4π / (1/R − (2/L) ln(2|sin(αL/2)|))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomerBand {
    pub radius: f64,
    pub spacing: f64,
}

impl MonomerBand {
    fn denominator(&self, alpha: f64) -> f64 {
        1.0 / self.radius
            - 2.0 / self.spacing * (2.0 * (0.5 * alpha * self.spacing).sin().abs()).ln()
    }

    pub fn omega(&self, alpha: f64) -> f64 {
        (4.0 * PI / self.denominator(alpha)).sqrt()
    }

    /// `ω̂′(α) = ω̂ cot(αL/2) / (2 den)`.
    pub fn derivative(&self, alpha: f64) -> f64 {
        let t = 0.5 * alpha * self.spacing;
        0.5 * self.omega(alpha) * (t.cos() / t.sin()) / self.denominator(alpha)
    }
}

impl BandFunction1d for MonomerBand {
    fn range(&self) -> (f64, f64) {
        (0.0, self.omega(PI / self.spacing))
    }

    fn preimages(&self, omega: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(omega > lo && omega <= hi) {
            return Vec::new();
        }
        let s = (0.5 * (1.0 / self.radius - 4.0 * PI / (omega * omega)) * self.spacing).exp() / 2.0;
        let alpha = 2.0 / self.spacing * s.min(1.0).asin();
        let slope = self.derivative(alpha).abs();
        vec![(-alpha, slope), (alpha, slope)]
    }
}

/// Piecewise-linear band through the samples of a one-band chain; slopes are
/// centred differences between neighbouring samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledBand1d {
    alpha: Vec<f64>,
    omega: Vec<f64>,
}

impl SampledBand1d {
    pub fn new(bands: &BandStructure) -> Result<Self> {
        if bands.grid().dim() != 1 || bands.bands() != 1 {
            return Err(Error::Unsupported(
                "sampled band functions need a chain with one resonator per cell".into(),
            ));
        }
        let alpha = bands.grid().points().iter().map(|a| a.x).collect();
        let omega = bands.frequencies().iter().map(|f| f[0]).collect();
        Ok(Self { alpha, omega })
    }
}

impl BandFunction1d for SampledBand1d {
    fn range(&self) -> (f64, f64) {
        self.omega
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                (lo.min(*w), hi.max(*w))
            })
    }

    fn preimages(&self, omega: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 0..self.alpha.len().saturating_sub(1) {
            let (a0, a1) = (self.alpha[k], self.alpha[k + 1]);
            let (w0, w1) = (self.omega[k], self.omega[k + 1]);
            let inside = (w0 <= omega && omega < w1) || (w1 <= omega && omega < w0);
            if inside {
                let slope = (w1 - w0) / (a1 - a0);
                out.push((a0 + (omega - w0) / slope, slope.abs()));
            }
        }
        out
    }
}

/// `D(ω) = (1/2π) Σ 1/|ω̂′(α)|` over the preimages of each `ω`. The density
/// integrates to `|Y*|/2π` over the band.
pub fn dos_1d_analytic(band: &impl BandFunction1d, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas
        .iter()
        .map(|&w| {
            let pre = band.preimages(w);
            if pre.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "frequency {w} lies outside the band"
                )));
            }
            let mut d = 0.0;
            for (_, slope) in pre {
                if slope < 1e-8 {
                    return Err(Error::BandEdge { omega: w, slope });
                }
                d += 1.0 / slope;
            }
            Ok(d / (2.0 * PI))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::finite_capacitance;
    use crate::geometry::{generate, BrillouinGrid, FiniteLatticeIndex, GeneratorParams, StructureKind};
    use crate::spectra::{band_structure, finite_frequencies};
    use proptest::prelude::*;

    #[test]
    fn equal_frequencies_single_bin() {
        let h = dos_histogram(&[2.0; 4], 1).unwrap();
        assert_eq!(h.density(), &[0.5]);
        assert!(matches!(dos_histogram(&[], 3), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn flat_band_reference_in_one_bin() {
        let h = dos_histogram_with_edges(&[1.5; 64], &uniform_edges(2.0, 4).unwrap()).unwrap();
        assert_eq!(h.density().iter().filter(|d| **d > 0.0).count(), 1);
    }

    #[test]
    fn l1_extremes() {
        let edges = uniform_edges(2.0, 2).unwrap();
        let a = dos_histogram_with_edges(&[0.5, 0.6], &edges).unwrap();
        let b = dos_histogram_with_edges(&[1.5], &edges).unwrap();
        assert_eq!(dos_l1_error(&a, &a).unwrap(), 0.0);
        assert!((dos_l1_error(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        let c = dos_histogram_with_edges(&[0.5], &uniform_edges(2.0, 3).unwrap()).unwrap();
        assert!(matches!(dos_l1_error(&a, &c), Err(Error::BinMismatch)));
    }

    proptest! {
        #[test]
        fn histograms_have_unit_area(values in prop::collection::vec(0.0f64..10.0, 1..300), bins in 1usize..40) {
            prop_assume!(values.iter().any(|v| *v > 0.0));
            let h = dos_histogram(&values, bins).unwrap();
            prop_assert!((h.area() - 1.0).abs() < 1e-12);
            prop_assert!(h.density().iter().all(|d| *d >= 0.0));
        }
    }

    #[test]
    fn van_hove_peak_at_upper_edge() {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        let idx = FiniteLatticeIndex::block(&s.lattice, &[1000]).unwrap();
        let f = finite_frequencies(&finite_capacitance(&s.lattice, &s.cell, &idx).unwrap()).unwrap();
        let h = dos_histogram(f.frequencies(), default_bins(f.len())).unwrap();
        let last = *h.density().last().unwrap();
        assert!(h.density().iter().all(|d| *d <= last));
    }

    #[test]
    fn reference_needs_resolution() {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        let grid = BrillouinGrid::new(&s.lattice, 16).unwrap();
        let b = band_structure(&s.lattice, &s.cell, &grid, 1e-10, false).unwrap();
        assert!(matches!(dos_reference(&b, 4), Err(Error::Resolution { .. })));
        assert!((dos_reference(&b, 2).unwrap().area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monomer_band_derivative_and_preimages() {
        let band = MonomerBand {
            radius: 0.1,
            spacing: 1.0,
        };
        let a = 1.3;
        let h = 1e-5;
        let fd = (band.omega(a + h) - band.omega(a - h)) / (2.0 * h);
        assert!((band.derivative(a) - fd).abs() < 1e-8);
        let w = band.omega(a);
        let pre = band.preimages(w);
        assert_eq!(pre.len(), 2);
        assert!((pre[1].0 - a).abs() < 1e-10 && (pre[0].0 + a).abs() < 1e-10);
        assert_eq!(pre[0].1, pre[1].1);
        let edge = band.range().1;
        assert!(matches!(
            dos_1d_analytic(&band, &[edge]),
            Err(Error::BandEdge { .. })
        ));
    }

    #[test]
    fn sampled_band_matches_closed_form_midband() {
        let s = generate(StructureKind::MonomerChain, &GeneratorParams::default()).unwrap();
        let grid = BrillouinGrid::new(&s.lattice, 2048).unwrap();
        let b = band_structure(&s.lattice, &s.cell, &grid, 1e-11, false).unwrap();
        let sampled = SampledBand1d::new(&b).unwrap();
        let exact = MonomerBand {
            radius: 0.1,
            spacing: 1.0,
        };
        let w = exact.omega(1.0);
        let d1 = dos_1d_analytic(&sampled, &[w]).unwrap()[0];
        let d2 = dos_1d_analytic(&exact, &[w]).unwrap()[0];
        assert!((d1 - d2).abs() < 1e-3 * d2);
    }
}

//! Subcommand orchestration. Every subcommand computes all of its outputs in
//! memory; files are written only once everything has succeeded.

use std::fmt;
use std::fs;
use std::path::Path;

use lattice_spectra_core::capacitance::{
    apply_defect, defect_mode, realspace_coeffs_for, truncated_toeplitz, write_capm,
    write_matrix_csv,
};
use lattice_spectra_core::floquet::{floquet_profile, write_discrete_bands_csv};
use lattice_spectra_core::geometry::{index_set, FiniteStructure};
use lattice_spectra_core::lattice_sums::quasi_periodic_sum;
use lattice_spectra_core::spectra::{
    band_at, band_structure, default_bins, dos_histogram_with_edges, dos_l1_error,
    dos_reference_with_edges, finite_frequencies, frobenius_gap, pointwise_gap, uniform_edges,
};
use lattice_spectra_core::{
    discrete_bands, finite_capacitance_of, generate, BandStructure, BrillouinGrid,
    CapacitanceMatrix, FiniteSpectrum, FloquetOptions, LatticeSpec, Structure, Vec3,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{MatrixFormat, RunConfig};
use crate::error::{CliError, Context};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Bands,
    Dos,
    Converge,
    Defect,
    Floquet,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Bands => "bands",
            Command::Dos => "dos",
            Command::Converge => "converge",
            Command::Defect => "defect",
            Command::Floquet => "floquet",
        })
    }
}

/// A file produced by a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn config_hash(config: &RunConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

/// `# lattice-spectra <version> config-hash <sha256>`
pub fn header(config: &RunConfig) -> String {
    format!(
        "# lattice-spectra {} config-hash {}\n",
        env!("CARGO_PKG_VERSION"),
        config_hash(config)
    )
}

struct Writer<'a> {
    header: String,
    outputs: Vec<Output>,
    config: &'a RunConfig,
}

impl<'a> Writer<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            header: header(config),
            outputs: Vec::new(),
            config,
        }
    }

    fn text(
        &mut self,
        name: impl Into<String>,
        write: impl FnOnce(&mut Vec<u8>) -> lattice_spectra_core::Result<()>,
    ) -> Result<(), CliError> {
        let mut bytes = self.header.clone().into_bytes();
        write(&mut bytes).context("cli", "write_output")?;
        self.outputs.push(Output {
            name: name.into(),
            bytes,
        });
        Ok(())
    }

    fn finish(mut self) -> Vec<Output> {
        let mut bytes = self.header.clone().into_bytes();
        bytes.extend(self.config.to_toml().into_bytes());
        self.outputs.push(Output {
            name: "effective_config.toml".into(),
            bytes,
        });
        self.outputs
    }
}

/// Runs a subcommand and returns its outputs without touching the file system.
pub fn execute(command: Command, config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let structure = generate(config.kind(), &config.generator_params()).context("geometry", "generate")?;
    log::info!("{command}: {} in d = {}", structure.kind, structure.lattice.dim());
    let mut out = Writer::new(config);
    match command {
        Command::Bands => bands(&structure, config, &mut out)?,
        Command::Dos => dos(&structure, config, &mut out)?,
        Command::Converge => converge(&structure, config, &mut out)?,
        Command::Defect => defect(&structure, config, &mut out)?,
        Command::Floquet => floquet(&structure, config, &mut out)?,
    }
    Ok(out.finish())
}

pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for o in outputs {
        let path = dir.join(&o.name);
        fs::write(&path, &o.bytes).map_err(io(&path))?;
    }
    Ok(())
}

/// Finite structure of a run: the defected chain for defected kinds, else `I_r`.
fn finite_structure(structure: &Structure, r: f64) -> Result<FiniteStructure, CliError> {
    match structure.defected_structure() {
        Some(f) => Ok(f.clone()),
        None => structure.truncate(r).context("geometry", "truncate"),
    }
}

struct FiniteModes {
    structure: FiniteStructure,
    capacitance: CapacitanceMatrix,
    spectrum: FiniteSpectrum,
}

/// Capacitance matrix and spectrum, with a point defect applied if present.
/// Modes of a defected chain are returned in physical (unsymmetrised) form.
fn finite_modes(structure: &Structure, r: f64) -> Result<FiniteModes, CliError> {
    let finite = finite_structure(structure, r)?;
    let c = finite_capacitance_of(&finite).context("capacitance", "finite_capacitance")?;
    let (capacitance, spectrum) = match structure.defect() {
        Some(d) => {
            let c = apply_defect(&c, d.site, d.factor).context("capacitance", "apply_defect")?;
            let s = finite_frequencies(&c).context("spectra", "finite_frequencies")?;
            let n = s.len();
            let mut vectors = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                let u = defect_mode(&s.mode(j), d.site, d.factor).context("capacitance", "defect_mode")?;
                vectors.column_mut(j).copy_from_slice(&u);
            }
            let s = s.with_vectors(vectors).context("spectra", "finite_frequencies")?;
            (c, s)
        }
        None => {
            let s = finite_frequencies(&c).context("spectra", "finite_frequencies")?;
            (c, s)
        }
    };
    log::info!("finite structure: {} resonators", finite.len());
    Ok(FiniteModes {
        structure: finite,
        capacitance,
        spectrum,
    })
}

fn floquet_options(config: &RunConfig) -> FloquetOptions {
    FloquetOptions {
        oversampling: config.numerics.oversampling,
        ipr_threshold: config.numerics.ipr_threshold,
    }
}

fn band_grid(structure: &Structure, config: &RunConfig) -> Result<BandStructure, CliError> {
    band_grid_with(structure, config, config.numerics.grid)
}

fn band_grid_with(structure: &Structure, config: &RunConfig, n: usize) -> Result<BandStructure, CliError> {
    let grid = BrillouinGrid::new(&structure.lattice, n).context("geometry", "brillouin_grid")?;
    band_structure(&structure.lattice, &structure.cell, &grid, config.numerics.tolerance, false)
        .context("spectra", "band_structure")
}

fn common_outputs(modes: &FiniteModes, structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    out.text("geometry.csv", |w| modes.structure.write_csv(w))?;
    match config.run.export_matrix {
        Some(MatrixFormat::Csv) => out.text("capacitance.csv", |w| write_matrix_csv(modes.capacitance.matrix(), w))?,
        Some(MatrixFormat::Capm) => {
            // binary: no text header
            let mut bytes = Vec::new();
            write_capm(modes.capacitance.matrix(), &mut bytes).context("capacitance", "write_capm")?;
            out.outputs.push(Output {
                name: "capacitance.capm".into(),
                bytes,
            });
        }
        None => {}
    }
    if config.run.dump_partial_sums {
        partial_sums(structure, config, out)?;
    }
    Ok(())
}

/// Refinement traces of `Q(z_i − z_j; α)` for every site pair at the pointwise `α`.
fn partial_sums(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let alpha = config.pointwise_alpha(&structure.lattice);
    let centers = structure.cell.centers();
    let mut rows = Vec::new();
    for (i, zi) in centers.iter().enumerate() {
        for (j, zj) in centers.iter().enumerate() {
            let s = quasi_periodic_sum(&structure.lattice, &(zi - zj), &alpha, config.numerics.tolerance)
                .context("lattice_sums", "quasi_periodic_sum")?;
            for p in s.trace {
                rows.push([
                    i.to_string(),
                    j.to_string(),
                    p.cutoff.to_string(),
                    p.value.re.to_string(),
                    p.value.im.to_string(),
                    p.estimated_error.to_string(),
                ]);
            }
        }
    }
    out.text("partial_sums.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["i", "j", "cutoff", "re", "im", "estimated_error"])?;
        for r in &rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn bands(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let bs = band_grid(structure, config)?;
    out.text("bands.csv", |w| bs.write_csv(w))?;
    if structure.lattice.dim() == 2 {
        let rows = symmetry_points(structure, config)?;
        out.text("symmetry_points.csv", |w| {
            let mut csv = csv::Writer::from_writer(w);
            let mut head = vec!["point".to_string(), "alpha_1".into(), "alpha_2".into()];
            head.extend((1..=structure.cell.len()).map(|k| format!("omega_{k}")));
            csv.write_record(&head)?;
            for (label, alpha, omegas) in &rows {
                let mut row = vec![label.to_string(), alpha.x.to_string(), alpha.y.to_string()];
                row.extend(omegas.iter().map(|o| o.to_string()));
                csv.write_record(&row)?;
            }
            csv.flush()?;
            Ok(())
        })?;
    }

    let modes = finite_modes(structure, config.numerics.r)?;
    let assigned = discrete_bands(&modes.spectrum, &modes.structure, &structure.lattice, &floquet_options(config))
        .context("floquet", "discrete_bands")?;
    out.text("discrete_bands.csv", |w| write_discrete_bands_csv(&assigned, structure.lattice.dim(), w))?;
    common_outputs(&modes, structure, config, out)
}

/// High-symmetry points of a screen: `M`, `K` for hexagonal duals, else `X`, `Y`, `M`.
fn symmetry_points(structure: &Structure, config: &RunConfig) -> Result<Vec<(&'static str, Vec3, Vec<f64>)>, CliError> {
    let [b1, b2] = [structure.lattice.dual_vectors()[0], structure.lattice.dual_vectors()[1]];
    let hexagonal = (b1.norm() - b2.norm()).abs() < 1e-9 * b1.norm()
        && (b1.dot(&b2).abs() - 0.5 * b1.norm_squared()).abs() < 1e-9 * b1.norm_squared();
    let points: Vec<(&'static str, Vec3)> = if hexagonal {
        let k = if b1.dot(&b2) > 0.0 { (b1 + b2) / 3.0 } else { (b1 * 2.0 + b2) / 3.0 };
        vec![("M", b1 * 0.5), ("K", k)]
    } else {
        vec![("X", b1 * 0.5), ("Y", b2 * 0.5), ("M", (b1 + b2) * 0.5)]
    };
    points
        .into_iter()
        .map(|(label, alpha)| {
            let (omegas, _) = band_at(&structure.lattice, &structure.cell, &alpha, config.numerics.tolerance)
                .context("spectra", "band_at")?;
            Ok((label, alpha, omegas))
        })
        .collect()
}

fn require_periodic(structure: &Structure, command: Command) -> Result<(), CliError> {
    if structure.kind.is_defected() {
        return Err(CliError::Validation {
            key: "geometry.kind".into(),
            message: format!("`{command}` needs a periodic structure, got {}", structure.kind),
        });
    }
    Ok(())
}

struct DosRow {
    m: usize,
    l1: f64,
}

/// Histograms of every truncation in `r_list` against a band-structure
/// reference with at least 64 samples per bin of the finest histogram.
fn dos_rows(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<Vec<DosRow>, CliError> {
    let spectra = config
        .numerics
        .r_list
        .iter()
        .map(|&r| {
            let finite = structure.truncate(r).context("geometry", "truncate")?;
            let c = finite_capacitance_of(&finite).context("capacitance", "finite_capacitance")?;
            finite_frequencies(&c).context("spectra", "finite_frequencies")
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let bins_of = |m: usize| config.numerics.bins.unwrap_or_else(|| default_bins(m));
    let most = spectra.iter().map(|s| bins_of(s.len())).max().unwrap_or(1);
    let per_axis = (64.0 * most as f64 / structure.cell.len() as f64)
        .powf(1.0 / structure.lattice.dim() as f64)
        .ceil() as usize;
    let n = config.numerics.grid.max(per_axis + per_axis % 2);
    log::info!("dos: reference grid with {n} points per axis");
    let bs = band_grid_with(structure, config, n)?;

    let mut rows = Vec::new();
    for (&r, spectrum) in config.numerics.r_list.iter().zip(&spectra) {
        let m = spectrum.len();
        let bins = bins_of(m);
        let top = spectrum.frequencies().iter().copied().fold(bs.max_frequency(), f64::max);
        let edges = uniform_edges(top, bins).context("spectra", "uniform_edges")?;
        let hist = dos_histogram_with_edges(spectrum.frequencies(), &edges).context("spectra", "dos_histogram")?;
        let reference = dos_reference_with_edges(&bs, &edges).context("spectra", "dos_reference")?;
        let l1 = dos_l1_error(&hist, &reference).context("spectra", "dos_l1_error")?;
        log::info!("dos: r = {r}, M = {m}, bins = {bins}, L1 = {l1:e}");
        out.text(format!("dos_{m}.csv"), |w| hist.write_pair_csv(&reference, w))?;
        rows.push(DosRow { m, l1 });
    }
    Ok(rows)
}

#[derive(Default)]
struct ConvergeRow {
    r: f64,
    m: usize,
    frobenius_gap: Option<f64>,
    dos_l1: Option<f64>,
    pointwise_gap: Option<f64>,
    pointwise_residual: Option<f64>,
}

fn write_converge(rows: &[ConvergeRow], out: &mut Writer) -> Result<(), CliError> {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    out.text("converge.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["r", "M", "frobenius_gap", "dos_l1", "pointwise_gap", "pointwise_residual"])?;
        for row in rows {
            csv.write_record([
                row.r.to_string(),
                row.m.to_string(),
                cell(row.frobenius_gap),
                cell(row.dos_l1),
                cell(row.pointwise_gap),
                cell(row.pointwise_residual),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn dos(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    require_periodic(structure, Command::Dos)?;
    let rows = dos_rows(structure, config, out)?;
    let rows: Vec<ConvergeRow> = config
        .numerics
        .r_list
        .iter()
        .zip(rows)
        .map(|(&r, d)| ConvergeRow {
            r,
            m: d.m,
            dos_l1: Some(d.l1),
            ..Default::default()
        })
        .collect();
    write_converge(&rows, out)?;
    let largest = *config.numerics.r_list.last().expect("nonempty");
    let modes = finite_modes(structure, largest)?;
    common_outputs(&modes, structure, config, out)
}

/// Quadrature points per axis: at least the configured count and four per unit
/// of the largest offset, rounded up to even.
fn quadrature_for(config: &RunConfig, reach: usize) -> usize {
    let n = config.numerics.quadrature.max(4 * reach);
    n + n % 2
}

fn converge(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    require_periodic(structure, Command::Converge)?;
    let lattice = &structure.lattice;
    let tol = config.numerics.tolerance;
    let largest = *config.numerics.r_list.last().expect("nonempty");
    let index = index_set(lattice, largest).context("geometry", "index_set")?;
    let reach = index
        .points()
        .iter()
        .flat_map(|p| p.coords.iter().map(|k| 2 * k.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    let n_quad = quadrature_for(config, reach);
    log::info!("converge: real-space coefficients with {n_quad} points per axis");
    let coeffs = realspace_coeffs_for(lattice, &structure.cell, &index, n_quad, tol)
        .context("capacitance", "realspace_coeffs")?;

    let alpha = config.pointwise_alpha(lattice);
    let (omegas, vectors) = band_at(lattice, &structure.cell, &alpha, tol).context("spectra", "band_at")?;
    let band = config.numerics.band - 1;
    if band >= omegas.len() {
        return Err(CliError::Validation {
            key: "numerics.band".into(),
            message: format!("the structure has {} bands", omegas.len()),
        });
    }
    let omega_hat = omegas[band];
    let bloch = vectors.column(band).into_owned();
    let window = config.numerics.window * omega_hat * omega_hat;

    let dos = dos_rows(structure, config, out)?;

    let rows = config
        .numerics
        .r_list
        .par_iter()
        .zip(dos)
        .map(|(&r, d)| {
            let finite = structure.truncate(r).context("geometry", "truncate")?;
            let c = finite_capacitance_of(&finite).context("capacitance", "finite_capacitance")?;
            let t = truncated_toeplitz(&coeffs, finite.cells()).context("capacitance", "truncated_toeplitz")?;
            let gap = frobenius_gap(c.matrix(), t.matrix()).context("spectra", "frobenius_gap")?;
            let spectrum = finite_frequencies(&c).context("spectra", "finite_frequencies")?;
            let p = pointwise_gap(lattice, omega_hat, &bloch, &alpha, &spectrum, window)
                .context("spectra", "pointwise_gap")?;
            log::info!("converge: r = {r}, gap = {gap:e}, pointwise = {:e}", p.min_gap);
            Ok(ConvergeRow {
                r,
                m: d.m,
                frobenius_gap: Some(gap),
                dos_l1: Some(d.l1),
                pointwise_gap: Some(p.min_gap),
                pointwise_residual: Some(p.residual),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_converge(&rows, out)?;
    let modes = finite_modes(structure, largest)?;
    common_outputs(&modes, structure, config, out)
}

/// Location of a frequency relative to the bulk bands.
fn locate(omega: f64, ranges: &[(f64, f64)]) -> &'static str {
    if ranges.iter().any(|&(lo, hi)| omega >= lo && omega <= hi) {
        "in_band"
    } else if omega < ranges[0].0 {
        "below_bands"
    } else if omega > ranges[ranges.len() - 1].1 {
        "above_bands"
    } else {
        "in_gap"
    }
}

/// Band ranges from the grid, the zone boundary along each axis and the
/// acoustic limit `ω̂₁ → 0` at `α → 0`.
fn band_ranges(structure: &Structure, config: &RunConfig) -> Result<Vec<(f64, f64)>, CliError> {
    let bs = band_grid(structure, config)?;
    let mut ranges: Vec<(f64, f64)> = (0..bs.bands()).map(|k| bs.band_range(k)).collect();
    for b in structure.lattice.dual_vectors() {
        let (omegas, _) = band_at(&structure.lattice, &structure.cell, &(b * 0.5), config.numerics.tolerance)
            .context("spectra", "band_at")?;
        for (range, w) in ranges.iter_mut().zip(omegas) {
            range.0 = range.0.min(w);
            range.1 = range.1.max(w);
        }
    }
    ranges[0].0 = 0.0;
    Ok(ranges)
}

fn defect(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    if !structure.kind.is_defected() {
        return Err(CliError::Validation {
            key: "geometry.kind".into(),
            message: format!("`defect` needs a defected structure, got {}", structure.kind),
        });
    }
    let modes = finite_modes(structure, config.numerics.r)?;
    let assigned = discrete_bands(&modes.spectrum, &modes.structure, &structure.lattice, &floquet_options(config))
        .context("floquet", "discrete_bands")?;
    out.text("discrete_bands.csv", |w| write_discrete_bands_csv(&assigned, structure.lattice.dim(), w))?;

    let ranges = band_ranges(structure, config)?;
    let report: Vec<_> = assigned
        .iter()
        .map(|m| (m, locate(m.frequency, &ranges)))
        .filter(|(m, place)| m.localized || *place != "in_band")
        .collect();
    for (m, place) in &report {
        log::info!("defect: mode {} at {} ({place}, IPR {:.3})", m.index + 1, m.frequency, m.ipr);
    }
    out.text("defect_report.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["j", "omega", "ipr", "localized", "location"])?;
        for (m, place) in &report {
            csv.write_record([
                (m.index + 1).to_string(),
                m.frequency.to_string(),
                m.ipr.to_string(),
                m.localized.to_string(),
                place.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    out.text("bulk_bands.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["band", "omega_min", "omega_max"])?;
        for (k, (lo, hi)) in ranges.iter().enumerate() {
            csv.write_record([(k + 1).to_string(), lo.to_string(), hi.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    common_outputs(&modes, structure, config, out)
}

fn floquet(structure: &Structure, config: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let modes = finite_modes(structure, config.numerics.r)?;
    let n = modes.spectrum.len();
    let selected: Vec<usize> = match &config.run.modes {
        Some(list) => {
            if let Some(bad) = list.iter().find(|&&j| j > n) {
                return Err(CliError::Validation {
                    key: "run.modes".into(),
                    message: format!("mode {bad} exceeds the {n} modes of the structure"),
                });
            }
            list.clone()
        }
        None => (1..=n).collect(),
    };
    let lattice: &LatticeSpec = &structure.lattice;
    let profiles = selected
        .par_iter()
        .map(|&j| {
            let u = modes
                .structure
                .cell_blocks(&modes.spectrum.mode(j - 1))
                .context("geometry", "cell_blocks")?;
            floquet_profile(&u, lattice, modes.structure.cells(), modes.structure.slots(), config.numerics.oversampling)
                .context("floquet", "floquet_profile")
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dim = lattice.dim();
    out.text("floquet.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut head = vec!["mode".to_string()];
        head.extend((1..=dim).map(|i| format!("alpha_{i}")));
        head.push("norm".into());
        csv.write_record(&head)?;
        for (j, p) in selected.iter().zip(&profiles) {
            p.write_rows(*j, &mut csv)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    common_outputs(&modes, structure, config, out)
}

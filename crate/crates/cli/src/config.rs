//! Run configuration.
//!
//! TOML with three sections:
//!
//! ```toml
//! [geometry]
//! kind = "monomer_chain"
//! radius = 0.1
//!
//! [numerics]
//! tolerance = 1e-10
//! r_list = "10,20,40"
//!
//! [run]
//! export_matrix = "csv"
//! ```
//!
//! Only `geometry.kind` is required. Unknown keys and duplicate keys are errors.

use std::fmt;
use std::path::PathBuf;

use lattice_spectra_core::geometry::LatticeSpec;
use lattice_spectra_core::{GeneratorParams, StructureKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub numerics: NumericsConfig,
    pub run: RunOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryConfig {
    pub kind: String,
    pub radius: f64,
    pub lattice_constant: f64,
    pub s1: f64,
    pub s2: f64,
    pub dimer_separation: f64,
    pub nn_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// 1-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_site: Option<usize>,
    pub defect_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericsConfig {
    /// Absolute tolerance of the lattice sums.
    pub tolerance: f64,
    /// Brillouin samples per axis (even).
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Truncation radius of `bands`, `floquet` and of periodic `defect` runs.
    pub r: f64,
    /// Truncation radii of `dos` and `converge`, ascending.
    pub r_list: Vec<f64>,
    /// Minimum quadrature points per axis for real-space coefficients.
    pub quadrature: usize,
    pub oversampling: usize,
    pub ipr_threshold: f64,
    /// Quasi-periodicity of the pointwise comparison in dual coordinates.
    pub alpha: Vec<f64>,
    /// 1-based band of the pointwise comparison.
    pub band: usize,
    /// Eigenvalue window of the pointwise projection, relative to `ω̂²`.
    pub window: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Capm,
}

/// Run options. `out` and `workers` do not change results and are left out of
/// the effective config and its hash.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOptions {
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export_matrix: Option<MatrixFormat>,
    pub dump_partial_sums: bool,
    /// 1-based modes written by `floquet`; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: RawGeometry,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    kind: String,
    radius: Option<f64>,
    lattice_constant: Option<f64>,
    s1: Option<f64>,
    s2: Option<f64>,
    dimer_separation: Option<f64>,
    nn_distance: Option<f64>,
    sites: Option<usize>,
    defect_site: Option<usize>,
    defect_factor: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    tolerance: Option<f64>,
    grid: Option<usize>,
    bins: Option<usize>,
    r: Option<f64>,
    r_list: Option<RadiusList>,
    quadrature: Option<usize>,
    oversampling: Option<usize>,
    ipr_threshold: Option<f64>,
    alpha: Option<Vec<f64>>,
    band: Option<usize>,
    window: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    out: Option<PathBuf>,
    workers: Option<usize>,
    export_matrix: Option<MatrixFormat>,
    dump_partial_sums: Option<bool>,
    modes: Option<Vec<usize>>,
}

/// `"10,20,40"` or `[10, 20, 40]`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RadiusList {
    Text(String),
    Values(Vec<f64>),
}

fn invalid(key: &str, message: impl fmt::Display) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn in_range<T: PartialOrd + fmt::Display + Copy>(key: &str, v: T, lo: T, hi: T) -> Result<T, CliError> {
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(invalid(key, format!("must lie in [{lo}, {hi}], got {v}")))
    }
}

fn even(key: &str, v: usize, lo: usize, hi: usize) -> Result<usize, CliError> {
    in_range(key, v, lo, hi)?;
    if v % 2 == 1 {
        return Err(invalid(key, format!("must be even, got {v}")));
    }
    Ok(v)
}

fn parse_radii(list: RadiusList) -> Result<Vec<f64>, CliError> {
    let mut radii = match list {
        RadiusList::Values(v) => v,
        RadiusList::Text(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid("numerics.r_list", format!("`{}`: {e}", t.trim())))
            })
            .collect::<Result<_, _>>()?,
    };
    if radii.is_empty() {
        return Err(invalid("numerics.r_list", "needs at least one radius"));
    }
    for r in &radii {
        positive("numerics.r_list", *r)?;
    }
    radii.sort_by(f64::total_cmp);
    if radii.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("numerics.r_list", "radii must be distinct"));
    }
    Ok(radii)
}

/// Line of a byte offset, 1-based.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let g = raw.geometry;
    let kind: StructureKind = g
        .kind
        .parse()
        .map_err(|_| invalid("geometry.kind", format!("unknown structure kind `{}`", g.kind)))?;
    let d = GeneratorParams::default();
    let geometry = GeometryConfig {
        kind: kind.name().to_string(),
        radius: positive("geometry.radius", g.radius.unwrap_or(d.radius))?,
        lattice_constant: positive(
            "geometry.lattice_constant",
            g.lattice_constant.unwrap_or(d.lattice_constant),
        )?,
        s1: positive("geometry.s1", g.s1.unwrap_or(d.s1))?,
        s2: positive("geometry.s2", g.s2.unwrap_or(d.s2))?,
        dimer_separation: positive(
            "geometry.dimer_separation",
            g.dimer_separation.unwrap_or(d.dimer_separation),
        )?,
        nn_distance: positive("geometry.nn_distance", g.nn_distance.unwrap_or(d.nn_distance))?,
        sites: g
            .sites
            .map(|s| in_range("geometry.sites", s, 1, 100_000))
            .transpose()?,
        defect_site: g
            .defect_site
            .map(|s| in_range("geometry.defect_site", s, 1, 100_000))
            .transpose()?,
        defect_factor: positive("geometry.defect_factor", g.defect_factor.unwrap_or(d.defect_factor))?,
    };
    if let (Some(site), Some(sites)) = (geometry.defect_site, geometry.sites) {
        if site > sites {
            return Err(invalid(
                "geometry.defect_site",
                format!("site {site} lies outside a chain of {sites} resonators"),
            ));
        }
    }

    let dim = match kind {
        StructureKind::SquareDimer | StructureKind::Honeycomb => 2,
        _ => 1,
    };
    let n = raw.numerics;
    let (grid, r, r_list, quadrature) = if dim == 1 {
        (64, 25.0, vec![10.0, 20.0, 40.0], 4096)
    } else {
        (24, 6.0, vec![3.0, 4.0, 6.0], 64)
    };
    let alpha = n.alpha.unwrap_or_else(|| vec![0.25; dim]);
    if alpha.len() != dim {
        return Err(invalid(
            "numerics.alpha",
            format!("needs {dim} dual coordinates, got {}", alpha.len()),
        ));
    }
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(invalid("numerics.alpha", "coordinates must be finite"));
    }
    let numerics = NumericsConfig {
        tolerance: in_range("numerics.tolerance", n.tolerance.unwrap_or(1e-10), 1e-14, 1e-2)?,
        grid: even("numerics.grid", n.grid.unwrap_or(grid), 2, 4096)?,
        bins: n.bins.map(|b| in_range("numerics.bins", b, 1, 100_000)).transpose()?,
        r: positive("numerics.r", n.r.unwrap_or(r))?,
        r_list: match n.r_list {
            Some(list) => parse_radii(list)?,
            None => r_list,
        },
        quadrature: even("numerics.quadrature", n.quadrature.unwrap_or(quadrature), 2, 1 << 20)?,
        oversampling: in_range("numerics.oversampling", n.oversampling.unwrap_or(4), 1, 64)?,
        ipr_threshold: in_range("numerics.ipr_threshold", n.ipr_threshold.unwrap_or(0.1), 1e-6, 1.0)?,
        alpha,
        band: in_range("numerics.band", n.band.unwrap_or(1), 1, 1024)?,
        window: in_range("numerics.window", n.window.unwrap_or(0.05), 1e-12, 10.0)?,
    };

    let run = RunOptions {
        out: raw.run.out,
        workers: raw
            .run
            .workers
            .map(|w| in_range("run.workers", w, 1, 1024))
            .transpose()?,
        export_matrix: raw.run.export_matrix,
        dump_partial_sums: raw.run.dump_partial_sums.unwrap_or(false),
        modes: match raw.run.modes {
            Some(m) if m.is_empty() || m.contains(&0) => {
                return Err(invalid("run.modes", "modes are 1-based and the list must not be empty"))
            }
            other => other,
        },
    };

    Ok(RunConfig {
        geometry,
        numerics,
        run,
    })
}

impl RunConfig {
    pub fn kind(&self) -> StructureKind {
        self.geometry.kind.parse().expect("validated on parse")
    }

    pub fn generator_params(&self) -> GeneratorParams {
        let g = &self.geometry;
        GeneratorParams {
            radius: g.radius,
            lattice_constant: g.lattice_constant,
            s1: g.s1,
            s2: g.s2,
            dimer_separation: g.dimer_separation,
            nn_distance: g.nn_distance,
            sites: g.sites,
            defect_site: g.defect_site,
            defect_factor: g.defect_factor,
        }
    }

    /// Cartesian quasi-periodicity of the pointwise comparison.
    pub fn pointwise_alpha(&self, lattice: &LatticeSpec) -> lattice_spectra_core::Vec3 {
        self.numerics
            .alpha
            .iter()
            .zip(lattice.dual_vectors())
            .fold(lattice_spectra_core::Vec3::zeros(), |acc, (c, b)| acc + b * *c)
    }

    /// Effective configuration with every default filled in.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Effective<'a> {
            geometry: &'a GeometryConfig,
            numerics: &'a NumericsConfig,
            run: &'a RunOptions,
        }
        toml::to_string(&Effective {
            geometry: &self.geometry,
            numerics: &self.numerics,
            run: &self.run,
        })
        .expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("[geometry]\nkind = \"monomer_chain\"\n").unwrap();
        assert_eq!(c.geometry.radius, 0.1);
        assert_eq!(c.geometry.lattice_constant, 1.0);
        assert_eq!(c.numerics.tolerance, 1e-10);
        assert_eq!(c.numerics.grid, 64);
        assert_eq!(c.numerics.alpha, vec![0.25]);
        assert!(!c.run.dump_partial_sums);
    }

    #[test]
    fn radius_list_from_text_is_sorted() {
        let c = parse_config("[geometry]\nkind = \"ssh_dimer\"\n[numerics]\nr_list = \"40, 10,20\"\n").unwrap();
        assert_eq!(c.numerics.r_list, vec![10.0, 20.0, 40.0]);
        let c = parse_config("[geometry]\nkind = \"ssh_dimer\"\n[numerics]\nr_list = [20, 10.5]\n").unwrap();
        assert_eq!(c.numerics.r_list, vec![10.5, 20.0]);
    }

    #[test]
    fn duplicate_key_reports_its_line() {
        let err = parse_config("[geometry]\nkind = \"monomer_chain\"\n# comment\nradius = 0.1\nradius = 0.2\n")
            .unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, Some(5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let err = parse_config("[geometry]\nkind = \"monomer_chain\"\ncolour = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: Some(3), .. }), "{err:?}");
    }

    #[test]
    fn validation_names_the_key() {
        for (text, key) in [
            ("[geometry]\nkind = \"monomer_chain\"\nradius = -1.0\n", "geometry.radius"),
            ("[geometry]\nkind = \"pentagon\"\n", "geometry.kind"),
            ("[geometry]\nkind = \"monomer_chain\"\n[numerics]\ngrid = 7\n", "numerics.grid"),
            ("[geometry]\nkind = \"monomer_chain\"\n[numerics]\nr_list = \"10,x\"\n", "numerics.r_list"),
            ("[geometry]\nkind = \"honeycomb\"\n[numerics]\nalpha = [0.1]\n", "numerics.alpha"),
            ("[geometry]\nkind = \"monomer_chain\"\n[run]\nmodes = [0]\n", "run.modes"),
        ] {
            match parse_config(text).unwrap_err() {
                CliError::Validation { key: k, .. } => assert_eq!(k, key),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let c = parse_config(
            "[geometry]\nkind = \"point_defect_chain\"\nsites = 21\n[run]\nworkers = 3\nexport_matrix = \"capm\"\n",
        )
        .unwrap();
        let text = c.to_toml();
        assert!(!text.contains("workers"));
        let again = parse_config(&text).unwrap();
        assert_eq!(again.geometry, c.geometry);
        assert_eq!(again.numerics, c.numerics);
        assert_eq!(again.run.export_matrix, Some(MatrixFormat::Capm));
    }
}

//! Quasi-periodic lattice sums of the Laplace kernel.
//!
//! Evaluates
//!
//! ```text
//! Q(z; α) = Σ_{m ∈ Λ} e^{iα·m} / (4π |z + m|)
//! ```
//!
//! with the singular term `z + m = 0` left out. The kernel is the positive
//! `1/(4π|x|)`; capacitance assembly relies on that sign.
//!
//! Chains use direct summation with the logarithmic asymptote removed in
//! closed form; screens use Ewald splitting. `Q(z; −α) = conj Q(z; α)` and
//! `Q(z + l; α) = e^{−iα·l} Q(z; α)`.

mod direct;
mod ewald;

use std::io::Write;

pub use direct::direct_sum_1d;
pub use ewald::{default_eta, ewald_sum_2d, ewald_sum_2d_with_eta};

use crate::error::{Error, Result};
use crate::geometry::{LatticeSpec, Vec3};
use crate::C64;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MIN_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMethod {
    Direct1d,
    Ewald2d,
}

impl SumMethod {
    pub fn for_lattice(lattice: &LatticeSpec) -> Result<Self> {
        match lattice.dim() {
            1 => Ok(SumMethod::Direct1d),
            2 => Ok(SumMethod::Ewald2d),
            _ => Err(Error::Unsupported(
                "lattice sums are implemented for d = 1 and d = 2 only".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumRequest {
    pub offset: Vec3,
    pub alpha: Vec3,
    /// Absolute tolerance on `Q`.
    pub tolerance: f64,
    pub method: SumMethod,
}

/// One refinement step of a sum, for debugging convergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialSum {
    pub cutoff: usize,
    pub value: C64,
    pub estimated_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumResult {
    pub value: C64,
    pub terms_used: usize,
    /// Direct sums: terms on the positive and negative side. Ewald: real-space
    /// and reciprocal lattice points.
    pub cutoffs: [usize; 2],
    pub estimated_error: f64,
    pub trace: Vec<PartialSum>,
}

impl SumResult {
    /// Dumps the refinement trace as `cutoff,re,im,estimated_error`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cutoff", "re", "im", "estimated_error"])?;
        for p in &self.trace {
            w.write_record([
                p.cutoff.to_string(),
                p.value.re.to_string(),
                p.value.im.to_string(),
                p.estimated_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn validate(lattice: &LatticeSpec, alpha: &Vec3, tol: f64) -> Result<()> {
    if !(tol >= MIN_TOLERANCE) {
        return Err(Error::InvalidArgument(format!(
            "sum tolerance must be at least {MIN_TOLERANCE:e}, got {tol:e}"
        )));
    }
    if lattice.is_dual_lattice_point(alpha) {
        return Err(Error::AlphaZero);
    }
    Ok(())
}

pub fn evaluate(lattice: &LatticeSpec, request: &SumRequest) -> Result<SumResult> {
    match request.method {
        SumMethod::Direct1d => {
            direct_sum_1d(&request.offset, &request.alpha, lattice, request.tolerance)
        }
        SumMethod::Ewald2d => {
            ewald_sum_2d(&request.offset, &request.alpha, lattice, request.tolerance)
        }
    }
}

/// `Q(z; α)` with the method matching the lattice dimension.
pub fn quasi_periodic_sum(lattice: &LatticeSpec, z: &Vec3, alpha: &Vec3, tol: f64) -> Result<SumResult> {
    evaluate(
        lattice,
        &SumRequest {
            offset: *z,
            alpha: *alpha,
            tolerance: tol,
            method: SumMethod::for_lattice(lattice)?,
        },
    )
}

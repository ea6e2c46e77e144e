use std::f64::consts::PI;

use libm::erfc;

use super::{validate, PartialSum, SumResult};
use crate::error::{Error, Result};
use crate::geometry::{LatticeSpec, Vec3};
use crate::C64;

const MAX_POINTS: usize = 50_000_000;

/// Splitting parameter `√π / √|Y|`.
pub fn default_eta(lattice: &LatticeSpec) -> f64 {
    PI.sqrt() / lattice.cell_measure().sqrt()
}

pub fn ewald_sum_2d(z: &Vec3, alpha: &Vec3, lattice: &LatticeSpec, tol: f64) -> Result<SumResult> {
    ewald_sum_2d_with_eta(z, alpha, lattice, tol, default_eta(lattice))
}

/// Ewald summation over a screen.
///
/// With `ρ_m = |z + m|`, `k_G = |G − α|` and `h = |z₃|`,
///
/// ```text
/// 4π Q = Σ_m e^{iα·m} erfc(η ρ_m)/ρ_m
///      + (π/|Y|) Σ_G e^{i(G−α)·z} [e^{k h} erfc(k/2η + hη) + e^{−k h} erfc(k/2η − hη)] / k
/// ```
///
/// minus `2η/√π · e^{iα·m₀}` when `z + m₀ = 0`. Each part is truncated where
/// an integral bound on its tail falls below half the tolerance.
pub fn ewald_sum_2d_with_eta(
    z: &Vec3,
    alpha: &Vec3,
    lattice: &LatticeSpec,
    tol: f64,
    eta: f64,
) -> Result<SumResult> {
    if lattice.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "Ewald summation needs a screen, got d = {}",
            lattice.dim()
        )));
    }
    validate(lattice, alpha, tol)?;
    if alpha.z.abs() > 1e-14 {
        return Err(Error::InvalidArgument(
            "quasi-periodicity must lie in the lattice plane".into(),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }

    let area = lattice.cell_measure();
    // un-normalised budget per part
    let budget = 2.0 * PI * tol;
    let zp = Vec3::new(z.x, z.y, 0.0);
    let h = z.z.abs();
    let diam = lattice.vectors()[0].norm() + lattice.vectors()[1].norm();
    let dual_diam = lattice.dual_vectors()[0].norm() + lattice.dual_vectors()[1].norm();

    // ∫_x^∞ erfc(s) ds
    let erfc_integral = |x: f64| -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            (-x * x).exp() / PI.sqrt() - x * erfc(x)
        }
    };

    // real space: Σ_{ρ>rc} ≤ 2 (2π/|Y|) ∫_{rc−diam}^∞ erfc(η s) ds
    let real_bound = |rc: f64| 2.0 * (2.0 * PI / area) * erfc_integral(eta * (rc - diam)) / eta;
    let mut rc = diam + 1.0 / eta;
    while real_bound(rc) > budget {
        rc += 0.25 / eta;
    }
    // reciprocal: Σ_{k>kc} ≤ 2 ∫_{kc−diam*}^∞ erfc(k/2η) dk
    let recip_bound = |kc: f64| 2.0 * 2.0 * eta * erfc_integral((kc - dual_diam) / (2.0 * eta));
    let mut kc = dual_diam + 2.0 * eta;
    while recip_bound(kc) > budget {
        kc += 0.5 * eta;
    }

    let box_bound = |radius: f64, axis: usize, basis: &[Vec3]| -> i64 {
        (radius * basis[axis].norm() / (2.0 * PI)).ceil() as i64 + 1
    };

    // real-space part
    let mut real = C64::new(0.0, 0.0);
    let mut real_terms = 0usize;
    let mut singular: Option<Vec3> = None;
    let reach = rc + zp.norm();
    let (n0, n1) = (
        box_bound(reach, 0, lattice.dual_vectors()),
        box_bound(reach, 1, lattice.dual_vectors()),
    );
    if ((2 * n0 + 1) * (2 * n1 + 1)) as usize > MAX_POINTS {
        return Err(Error::NoConvergence {
            tolerance: tol,
            estimated: real_bound(rc) / (4.0 * PI),
            terms: MAX_POINTS,
        });
    }
    for a in -n0..=n0 {
        for b in -n1..=n1 {
            let m = lattice.point([a, b, 0]);
            let planar = (zp + m).norm();
            if planar > rc {
                continue;
            }
            let rho = (z + m).norm();
            if rho <= 1e-14 * diam {
                singular = Some(m);
                continue;
            }
            real += C64::from_polar(erfc(eta * rho) / rho, alpha.dot(&m));
            real_terms += 1;
        }
    }

    // reciprocal part
    let mut recip = C64::new(0.0, 0.0);
    let mut recip_terms = 0usize;
    let reach = kc + alpha.norm();
    let (g0, g1) = (
        box_bound(reach, 0, lattice.vectors()),
        box_bound(reach, 1, lattice.vectors()),
    );
    for a in -g0..=g0 {
        for b in -g1..=g1 {
            let g = lattice.dual_vectors()[0] * a as f64 + lattice.dual_vectors()[1] * b as f64;
            let kvec = g - alpha;
            let k = kvec.norm();
            if k > kc {
                continue;
            }
            let x = k / (2.0 * eta);
            let grow = scaled_erfc(k * h, x + h * eta);
            let decay = (-k * h).exp() * erfc(x - h * eta);
            let amplitude = PI / (area * k) * (grow + decay);
            recip += C64::from_polar(amplitude, kvec.dot(&zp));
            recip_terms += 1;
        }
    }

    let mut total = real + recip;
    if let Some(m) = singular {
        total -= C64::from_polar(2.0 * eta / PI.sqrt(), alpha.dot(&m));
    }

    let value = total / (4.0 * PI);
    let estimated_error = (real_bound(rc) + recip_bound(kc)) / (4.0 * PI);
    Ok(SumResult {
        value,
        terms_used: real_terms + recip_terms,
        cutoffs: [real_terms, recip_terms],
        estimated_error,
        trace: vec![
            PartialSum {
                cutoff: real_terms,
                value: real / (4.0 * PI),
                estimated_error: real_bound(rc) / (4.0 * PI),
            },
            PartialSum {
                cutoff: recip_terms,
                value: recip / (4.0 * PI),
                estimated_error: recip_bound(kc) / (4.0 * PI),
            },
        ],
    })
}

/// `e^{a} erfc(x)` for `x ≥ √(2a)`, where the product is bounded even when `e^{a}` is not.
fn scaled_erfc(a: f64, x: f64) -> f64 {
    let e = erfc(x);
    if e == 0.0 {
        0.0
    } else {
        a.exp() * e
    }
}

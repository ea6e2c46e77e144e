use std::f64::consts::PI;

use super::{validate, PartialSum, SumResult};
use crate::error::{Error, Result};
use crate::geometry::{LatticeSpec, Vec3};
use crate::C64;

const HARD_CUTOFF: usize = 10_000_000;
/// Highest order of summation by parts tried on the tail.
const MAX_ORDER: usize = 10;

/// Direct summation along a chain.
///
/// `Σ_{m≥1} e^{iθm}/(mL) = −ln(1 − e^{iθ})/L` is added in closed form on each
/// side; the `O(m⁻²)` remainder is summed to a cutoff `K` and its tail
/// `Σ_{m>K} qᵐ g(m)` is estimated by repeated summation by parts,
///
/// ```text
/// Σ_{m≥a} qᵐ g(m) = Σ_{j<J} q^{a+j} ∇ʲg(a+j) / (1−q)^{j+1} + Σ_{m≥a+J} qᵐ ∇ᴶg(m) / (1−q)ᴶ.
/// ```
///
/// The differences `∇ʲg` are B-spline averages of the analytic derivatives of
/// `g`, so they stay accurate where differencing values would cancel. The
/// order `J` is picked per cutoff to minimise the error bound, and `K` doubles
/// until that bound is below tolerance.
pub fn direct_sum_1d(z: &Vec3, alpha: &Vec3, lattice: &LatticeSpec, tol: f64) -> Result<SumResult> {
    if lattice.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "direct summation needs a chain, got d = {}",
            lattice.dim()
        )));
    }
    validate(lattice, alpha, tol)?;

    let l = lattice.vectors()[0];
    let len = l.norm();
    let theta = alpha.dot(&l);
    let q = C64::from_polar(1.0, theta);
    let log_part = -((C64::new(1.0, 0.0) - q).ln() + (C64::new(1.0, 0.0) - q.conj()).ln()) / len;

    // z on a lattice point k·l: Q(k l) = e^{−iθk} Q(0).
    let t = z.dot(&l) / (len * len);
    let perp = (z - l * t).norm();
    if perp <= 1e-14 * len.max(1.0) && (t - t.round()).abs() <= 1e-12 {
        let k = t.round();
        let value = C64::from_polar(1.0, -theta * k) * log_part / (4.0 * PI);
        return Ok(SumResult {
            value,
            terms_used: 0,
            cutoffs: [0, 0],
            estimated_error: f64::EPSILON * value.norm(),
            trace: vec![PartialSum {
                cutoff: 0,
                value,
                estimated_error: 0.0,
            }],
        });
    }

    let zz = z.norm_squared();
    let sides = [Remainder::new(z, &l, 1.0), Remainder::new(z, &l, -1.0)];

    // per-side budget on the un-normalised sum, so that |error|/4π ≤ tol
    let budget = 2.0 * PI * tol;
    let start = 64usize.max((16.0 * zz.sqrt() / len).ceil() as usize);

    let ratios = [q, q.conj()];
    let mut partials = [C64::new(0.0, 0.0); 2];
    let mut done = 0usize;
    let mut cutoff = start;
    let mut trace = Vec::new();
    let base = C64::new(1.0 / zz.sqrt(), 0.0) + log_part;

    loop {
        let mut error = 0.0;
        let mut tails = [C64::new(0.0, 0.0); 2];
        for k in 0..2 {
            let (g, ratio) = (&sides[k], ratios[k]);
            let mut phase = C64::from_polar(1.0, ratio.arg() * (done + 1) as f64);
            for m in done + 1..=cutoff {
                partials[k] += phase * g.value(m as f64);
                phase *= ratio;
            }
            let (t, e) = euler_tail(g, ratio, cutoff + 1);
            tails[k] = t;
            error += e;
        }
        done = cutoff;

        let value = (base + partials[0] + partials[1] + tails[0] + tails[1]) / (4.0 * PI);
        let estimated_error = error / (4.0 * PI);
        trace.push(PartialSum {
            cutoff,
            value,
            estimated_error,
        });
        log::debug!("direct_sum_1d K={cutoff} value={value} err={estimated_error:e}");

        if error <= 2.0 * budget {
            return Ok(SumResult {
                value,
                terms_used: 2 * cutoff + 1,
                cutoffs: [cutoff, cutoff],
                estimated_error,
                trace,
            });
        }
        if cutoff >= HARD_CUTOFF {
            return Err(Error::NoConvergence {
                tolerance: tol,
                estimated: estimated_error,
                terms: 2 * cutoff + 1,
            });
        }
        cutoff = (2 * cutoff).min(HARD_CUTOFF);
    }
}

/// `g(m) = 1/|z + s m l| − 1/(mL)` on one side `s = ±1` of the chain.
struct Remainder {
    len: f64,
    /// Signed axial component of `z` along the side.
    axial: f64,
    zz: f64,
    radius: f64,
}

impl Remainder {
    fn new(z: &Vec3, l: &Vec3, sign: f64) -> Self {
        let len = l.norm();
        let axial = sign * z.dot(l) / len;
        let zz = z.norm_squared();
        Self {
            len,
            axial,
            zz,
            radius: zz.sqrt(),
        }
    }

    /// Cancellation-free value.
    fn value(&self, m: f64) -> f64 {
        let ml = m * self.len;
        let rho = (ml * ml + 2.0 * ml * self.axial + self.zz).sqrt();
        -(2.0 * ml * self.axial + self.zz) / ((ml + rho) * rho * ml)
    }

    /// `g⁽ʲ⁾(m)` from the multipole expansion
    /// `g(m) = Σ_{k≥1} |z|ᵏ P_k(−z·l̂/|z|) / (mL)^{k+1}`, valid for `mL > |z|`,
    /// together with the sum of the absolute values of its terms.
    fn derivative(&self, j: usize, m: f64) -> (f64, f64) {
        let ml = m * self.len;
        debug_assert!(ml > 2.0 * self.radius);
        let u = if self.radius > 0.0 { -self.axial / self.radius } else { 0.0 };
        let ratio = self.radius / ml;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let lead = self.len.powi(j as i32) / ml.powi(j as i32 + 1);

        let (mut p0, mut p1) = (1.0, u);
        let mut power = ratio;
        let mut sum = 0.0;
        let mut abs = 0.0;
        for k in 1..400 {
            // (k+1)(k+2)…(k+j)
            let rising: f64 = (k + 1..=k + j).map(|i| i as f64).product();
            let term = rising * power * p1;
            sum += term;
            abs += term.abs();
            if rising * power < f64::EPSILON * 1e-3 * abs.max(f64::MIN_POSITIVE) {
                break;
            }
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * u * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
            power *= ratio;
        }
        (sign * lead * sum, lead * abs)
    }

    /// `∇ʲg(n) = ∫₀ʲ M_j(s) g⁽ʲ⁾(n − s) ds` with `M_j` the cardinal B-spline,
    /// and an estimate of its rounding error.
    fn difference(&self, j: usize, n: f64) -> (f64, f64) {
        if j == 0 {
            let v = self.value(n);
            return (v, 8.0 * f64::EPSILON * v.abs());
        }
        let mut sum = 0.0;
        let mut abs = 0.0;
        for k in 0..j {
            for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS.iter()) {
                for s in [k as f64 + 0.5 * (1.0 - x), k as f64 + 0.5 * (1.0 + x)] {
                    let weight = 0.5 * w * bspline(j, s);
                    let (d, e) = self.derivative(j, n - s);
                    sum += weight * d;
                    abs += weight.abs() * e;
                }
            }
        }
        (sum, 16.0 * (j as f64 + 1.0) * f64::EPSILON * abs)
    }
}

// 8-point Gauss–Legendre on [−1, 1], positive half of the symmetric nodes.
const GAUSS_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn factorial(j: usize) -> f64 {
    (1..=j).map(|k| k as f64).product()
}

/// Cardinal B-spline of order `j` (density of a sum of `j` uniforms on `[0, 1]`).
fn bspline(j: usize, s: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=j {
        let d = s - k as f64;
        if d > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * d.powi(j as i32 - 1);
        }
        binom = binom * (j - k) as f64 / (k + 1) as f64;
    }
    sum / factorial(j - 1)
}

/// Tail `Σ_{m≥a} qᵐ g(m)` and a bound on its truncation plus rounding error.
fn euler_tail(g: &Remainder, q: C64, a: usize) -> (C64, f64) {
    let one_minus_q = C64::new(1.0, 0.0) - q;
    let inv = one_minus_q.inv();
    let gap = one_minus_q.norm();

    let mut sum = C64::new(0.0, 0.0);
    let mut factor = C64::from_polar(1.0, q.arg() * a as f64) * inv;
    let mut rounding = 0.0;
    let mut best: Option<(C64, f64)> = None;
    for order in 0..=MAX_ORDER {
        let b = (a + order) as f64;
        let (d, round) = g.difference(order, b);
        // the tail Σ_{m≥b} qᵐ ∇ᴶg(m) / (1−q)ᴶ for J = order
        if order >= 1 && b * g.len >= 4.0 * (order as f64 + 2.0) * g.radius {
            let last = d.abs();
            let by_parts = 2.0 * last / gap.powi(order as i32 + 1);
            let absolute = 2.0 * last * b / (order as f64 + 1.0) / gap.powi(order as i32);
            let bound = by_parts.min(absolute) + rounding;
            if best.map_or(true, |(_, e)| bound < e) {
                best = Some((sum, bound));
            }
        }
        sum += factor * d;
        factor *= q * inv;
        rounding += round / gap.powi(order as i32 + 1);
    }
    best.unwrap_or((sum, f64::INFINITY))
}

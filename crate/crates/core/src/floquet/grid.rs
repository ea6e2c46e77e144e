use std::f64::consts::PI;
use std::io::Write;

use rustfft::FftPlanner;

use super::check_len;
use crate::error::{Error, Result};
use crate::geometry::{BrillouinGrid, FiniteLatticeIndex, LatticeSpec};
use crate::C64;

/// `‖û_α‖` on a midpoint grid of the Brillouin zone.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetProfile {
    grid: BrillouinGrid,
    norms: Vec<f64>,
}

impl FloquetProfile {
    pub fn grid(&self) -> &BrillouinGrid {
        &self.grid
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn norms_squared(&self) -> Vec<f64> {
        self.norms.iter().map(|n| n * n).collect()
    }

    /// Rows `mode,alpha_1..alpha_d,norm` with the given 1-based mode number.
    pub fn write_rows<W: Write>(&self, mode: usize, w: &mut csv::Writer<W>) -> Result<()> {
        let d = self.grid.dim();
        for (a, n) in self.grid.points().iter().zip(&self.norms) {
            let mut row = vec![mode.to_string()];
            row.extend(a.iter().take(d).map(|v| v.to_string()));
            row.push(n.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    }
}

/// Evaluates the truncated Floquet transform on a midpoint grid with
/// `oversampling × extent` points per axis using FFTs.
///
/// With cell coordinates `k = k₀ + k'`, `0 ≤ k' < n`, and grid fractions
/// `f_j = (j + 1/2)/n − 1/2`,
/// `Σ_k' u_k' e^{2πi f_j k'} = Σ_k' [u_k' e^{iπk'(1/n − 1)}] e^{2πi jk'/n}`,
/// an unnormalised inverse DFT. The offset `k₀` only contributes a phase common
/// to all slots and drops out of the norm.
pub fn floquet_profile<T: Into<C64> + Copy>(
    u: &[T],
    lattice: &LatticeSpec,
    index: &FiniteLatticeIndex,
    slots: usize,
    oversampling: usize,
) -> Result<FloquetProfile> {
    check_len(u.len(), index, slots)?;
    if oversampling == 0 {
        return Err(Error::InvalidArgument("oversampling must be positive".into()));
    }
    if index.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let d = lattice.dim();
    let extent = index.extent()[..d].iter().copied().max().unwrap_or(1);
    let mut n = oversampling * extent;
    n += n % 2;
    n = n.max(2);
    let grid = BrillouinGrid::new(lattice, n)?;

    let mut lo = [0i64; 3];
    for (axis, l) in lo.iter_mut().enumerate().take(d) {
        *l = index.points().iter().map(|p| p.coords[axis]).min().unwrap_or(0);
    }
    let total = n.pow(d as u32);
    let twist = |k: usize| C64::from_polar(1.0, PI * k as f64 * (1.0 / n as f64 - 1.0));

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut norms2 = vec![0.0; total];
    let mut buffer = vec![C64::new(0.0, 0.0); total];
    let mut line = vec![C64::new(0.0, 0.0); n];
    for slot in 0..slots {
        buffer.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (block, p) in u.chunks(slots).zip(index.points()) {
            let mut flat = 0;
            let mut phase = C64::new(1.0, 0.0);
            for axis in 0..d {
                let k = (p.coords[axis] - lo[axis]) as usize;
                flat = flat * n + k;
                phase *= twist(k);
            }
            buffer[flat] += phase * block[slot].into();
        }
        // one inverse FFT per axis; axis `a` has stride n^(d-1-a)
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            for start in 0..total {
                if (start / stride) % n != 0 {
                    continue;
                }
                for (j, z) in line.iter_mut().enumerate() {
                    *z = buffer[start + j * stride];
                }
                fft.process(&mut line);
                for (j, z) in line.iter().enumerate() {
                    buffer[start + j * stride] = *z;
                }
            }
        }
        for (acc, z) in norms2.iter_mut().zip(&buffer) {
            *acc += z.norm_sqr();
        }
    }
    Ok(FloquetProfile {
        grid,
        norms: norms2.into_iter().map(f64::sqrt).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::truncated_floquet;
    use crate::geometry::{generate, index_set, GeneratorParams, StructureKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft_matches_direct_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [StructureKind::SshDimer, StructureKind::Honeycomb, StructureKind::SquareDimer] {
            let s = generate(kind, &GeneratorParams::default()).unwrap();
            let idx = index_set(&s.lattice, 3.3).unwrap();
            let u: Vec<f64> = (0..2 * idx.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = floquet_profile(&u, &s.lattice, &idx, 2, 2).unwrap();
            for (a, norm) in p.grid().points().iter().zip(p.norms()) {
                let direct: f64 = truncated_floquet(&u, &idx, 2, a)
                    .unwrap()
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!((direct - norm).abs() < 1e-10, "{kind}");
            }
        }
    }

    #[test]
    fn grid_has_requested_oversampling() {
        let l = LatticeSpec::chain(1.0).unwrap();
        let idx = index_set(&l, 10.5).unwrap();
        let p = floquet_profile(&[1.0; 21], &l, &idx, 1, 4).unwrap();
        assert_eq!(p.grid().n(), 84);
    }
}

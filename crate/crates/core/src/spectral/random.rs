use super::fft::inverse_raw;
use super::{Field, Grid};
use crate::error::{FracError, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random trigonometric polynomial with integer mode indices `|j_a| <= band`.
///
/// Coefficients are drawn in a canonical mode order that does not depend on
/// `n`, so the same RNG state yields the same continuum function on every
/// resolution that resolves the band.
pub fn band_limited<R: Rng + ?Sized>(
    grid: Grid,
    band: usize,
    rng: &mut R,
    zero_mean: bool,
) -> Result<Field> {
    let n = grid.n();
    if band == 0 || band >= n / 2 {
        return Err(FracError::InvalidGrid(format!(
            "band {band} must lie in [1, n/2) for n = {n}"
        )));
    }
    let b = band as i64;
    let volume = grid.volume();
    let mut hat = vec![Complex64::default(); grid.len()];
    if !zero_mean {
        let dc: f64 = rng.sample(StandardNormal);
        hat[0] = Complex64::new(dc * volume, 0.0);
    }
    let slot = |j: i64| -> usize { j.rem_euclid(n as i64) as usize };
    let mut put = |index: usize, mirror: usize, a: f64, c: f64| {
        // a cos(k.x) + c sin(k.x) = Re[(a - i c) e^{i k.x}]
        let z = Complex64::new(a, -c) * (0.5 * volume);
        hat[index] += z;
        hat[mirror] += z.conj();
    };

    match grid.dim() {
        1 => {
            for j in 1..=b {
                let a: f64 = rng.sample(StandardNormal);
                let c: f64 = rng.sample(StandardNormal);
                put(slot(j), slot(-j), a, c);
            }
        }
        _ => {
            for j0 in 0..=b {
                for j1 in -b..=b {
                    if j0 == 0 && j1 <= 0 {
                        continue;
                    }
                    let a: f64 = rng.sample(StandardNormal);
                    let c: f64 = rng.sample(StandardNormal);
                    put(slot(j0) * n + slot(j1), slot(-j0) * n + slot(-j1), a, c);
                }
            }
        }
    }
    Field::checked(grid, inverse_raw(&grid, hat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mean_and_resolution_independent() {
        let coarse = Grid::new(2, 32, 2.0).unwrap();
        let fine = Grid::new(2, 64, 2.0).unwrap();
        let a = band_limited(coarse, 5, &mut ChaCha8Rng::seed_from_u64(4), true).unwrap();
        let b = band_limited(fine, 5, &mut ChaCha8Rng::seed_from_u64(4), true).unwrap();
        assert!(a.integral().abs() < 1e-12);
        // coarse point (i, j) coincides with fine point (2i, 2j)
        for i in 0..32 {
            for j in 0..32 {
                let x = a.samples()[i * 32 + j];
                let y = b.samples()[(2 * i) * 64 + 2 * j];
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn band_must_be_resolved() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(band_limited(g, 8, &mut rng, true).is_err());
        assert!(band_limited(g, 7, &mut rng, true).is_ok());
    }
}

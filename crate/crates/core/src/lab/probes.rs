//! Empirical ratios for the fractional Sobolev and Kato-Ponce inequalities
//! over random zero-mean trigonometric polynomials.

use crate::error::{FracError, Result};
use crate::spectral::{band_limited, frac_laplacian, lp_norm, Field, Grid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn check_regime(grid: &Grid, s: f64) -> Result<f64> {
    let d = grid.dim() as f64;
    if !(s > 0.0 && d > 2.0 * s) {
        return Err(FracError::RegimeViolation { dim: grid.dim(), s });
    }
    Ok(2.0 * d / (d - 2.0 * s))
}

/// `||f||_{L^q}^2 / ||(-Laplacian)^{s/2} f||_{L^2}^2` with `q = 2d / (d - 2s)`.
pub fn sobolev_ratio(f: &Field, s: f64) -> Result<f64> {
    let q = check_regime(f.grid(), s)?;
    let top = lp_norm(f, q)?.powi(2);
    let bottom = lp_norm(&frac_laplacian(f, 0.5 * s)?, 2.0)?.powi(2);
    Ok(top / bottom)
}

/// `||(-Laplacian)^{s/2}(f h)||_{L^2}` over
/// `||(-Laplacian)^{s/2} f||_{L^p} ||h||_{L^q} + ||f||_{L^p} ||(-Laplacian)^{s/2} h||_{L^q}`
/// with `p = d / s`, `q = 2d / (d - 2s)`.
pub fn kato_ponce_ratio(f: &Field, h: &Field, s: f64) -> Result<f64> {
    let q = check_regime(f.grid(), s)?;
    let p = f.grid().dim() as f64 / s;
    let top = lp_norm(&frac_laplacian(&f.mul(h)?, 0.5 * s)?, 2.0)?;
    let df = frac_laplacian(f, 0.5 * s)?;
    let dh = frac_laplacian(h, 0.5 * s)?;
    let bottom = lp_norm(&df, p)? * lp_norm(h, q)? + lp_norm(f, p)? * lp_norm(&dh, q)?;
    Ok(top / bottom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn report(grid: &Grid, ratios: Vec<f64>) -> ProbeReport {
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    ProbeReport { n: grid.n(), ratios, max_ratio }
}

/// Random fields have modes `|j_a| <= band`; the same seed gives the same
/// continuum fields on every grid resolving the band.
pub fn sobolev_ratio_probe(grid: &Grid, s: f64, n_samples: usize, band: usize, seed: u64) -> Result<ProbeReport> {
    check_regime(grid, s)?;
    let ratios = (0..n_samples)
        .into_par_iter()
        .map(|i| sobolev_ratio(&band_limited(*grid, band, &mut sample_rng(seed, i), true)?, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(grid, ratios))
}

pub fn kato_ponce_probe(grid: &Grid, s: f64, n_samples: usize, band: usize, seed: u64) -> Result<ProbeReport> {
    check_regime(grid, s)?;
    let ratios = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let f = band_limited(*grid, band, &mut rng, true)?;
            let h = band_limited(*grid, band, &mut rng, true)?;
            kato_ponce_ratio(&f, &h, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(grid, ratios))
}

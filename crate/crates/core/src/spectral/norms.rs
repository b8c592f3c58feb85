use super::fft::forward_raw;
use super::{check_order, frac_laplacian, Field};
use crate::error::{FracError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Rectangle-rule inner product `sum_i u_i v_i dx^d`.
pub fn inner_product(u: &Field, v: &Field) -> Result<f64> {
    u.grid().ensure_same(v.grid())?;
    let sum: f64 = u.samples().iter().zip(v.samples()).map(|(a, b)| a * b).sum();
    Ok(sum * u.grid().cell_volume())
}

/// The same inner product evaluated through Parseval in spectral space.
pub fn spectral_inner_product(u: &Field, v: &Field) -> Result<f64> {
    u.grid().ensure_same(v.grid())?;
    let uh = forward_raw(u.grid(), u.samples());
    let vh = forward_raw(v.grid(), v.samples());
    let sum: f64 = uh.iter().zip(&vh).map(|(a, b)| (a * b.conj()).re).sum();
    Ok(sum / u.grid().volume())
}

/// `||u||_{L^p}` by the rectangle rule; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(FracError::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let w = u.grid().cell_volume();
    if p == 2.0 {
        return Ok((u.samples().iter().map(|v| v * v).sum::<f64>() * w).sqrt());
    }
    let sum: f64 = u.samples().iter().map(|v| v.abs().powf(p)).sum();
    Ok((sum * w).powf(1.0 / p))
}

/// Both forms of the `H^s` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsNorm {
    /// `( (1/V) sum_k (1 + |k|^{2s}) |u_hat|^2 )^{1/2}`
    pub fourier_form: f64,
    /// `||u||_{L^2} + ||(-Laplacian)^{s/2} u||_{L^2}`
    pub sum_form: f64,
}

/// `(1/V) sum_k |k|^{2a} |u_hat(k)|^2`, i.e. `||(-Laplacian)^{a/2} u||^2`.
fn weighted_energy(mags: &[f64], hat: &[Complex64], exponent: f64, inv_volume: f64) -> f64 {
    mags.iter()
        .zip(hat)
        .map(|(&k, z)| super::symbol_power(k, exponent) * z.norm_sqr())
        .sum::<f64>()
        * inv_volume
}

pub fn hs_norm(u: &Field, s: f64) -> Result<HsNorm> {
    check_order(s)?;
    let grid = u.grid();
    let hat = forward_raw(grid, u.samples());
    let mags = grid.wavenumber_magnitudes();
    let inv_v = 1.0 / grid.volume();
    let l2_sq = hat.iter().map(|z| z.norm_sqr()).sum::<f64>() * inv_v;
    let frac_sq = weighted_energy(&mags, &hat, 2.0 * s, inv_v);
    Ok(HsNorm {
        fourier_form: (l2_sq + frac_sq).sqrt(),
        sum_form: lp_norm(u, 2.0)? + frac_sq.sqrt(),
    })
}

/// `||u||_{L^p} + ||(-Laplacian)^{s/2} u||_{L^p}`.
pub fn wsp_norm(u: &Field, s: f64, p: f64) -> Result<f64> {
    check_order(s)?;
    let base = lp_norm(u, p)?;
    let frac = frac_laplacian(u, 0.5 * s)?;
    Ok(base + lp_norm(&frac, p)?)
}

/// The three composite solution norms plus their constituent L2 terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeNorms {
    pub l2_u: f64,
    /// `||(-Laplacian)^{s/2} u||`
    pub half_u: f64,
    /// `||(-Laplacian)^{s} u||`
    pub full_u: f64,
    pub l2_ut: f64,
    /// `||(-Laplacian)^{s/2} u_t||`
    pub half_ut: f64,
    pub norm1: f64,
    pub norm2: f64,
    pub norm3: f64,
}

/// Which composite norm a sweep tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormSelector {
    Norm1,
    Norm2,
    Norm3,
}

impl NormSelector {
    pub fn select(&self, norms: &CompositeNorms) -> f64 {
        match self {
            NormSelector::Norm1 => norms.norm1,
            NormSelector::Norm2 => norms.norm2,
            NormSelector::Norm3 => norms.norm3,
        }
    }
}

pub fn composite_norms(u: &Field, ut: &Field, s: f64) -> Result<CompositeNorms> {
    check_order(s)?;
    u.grid().ensure_same(ut.grid())?;
    let grid = u.grid();
    let mags = grid.wavenumber_magnitudes();
    let inv_v = 1.0 / grid.volume();
    let uh = forward_raw(grid, u.samples());
    let uth = forward_raw(grid, ut.samples());

    let l2_u = lp_norm(u, 2.0)?;
    let l2_ut = lp_norm(ut, 2.0)?;
    let half_u = weighted_energy(&mags, &uh, 2.0 * s, inv_v).sqrt();
    let full_u = weighted_energy(&mags, &uh, 4.0 * s, inv_v).sqrt();
    let half_ut = weighted_energy(&mags, &uth, 2.0 * s, inv_v).sqrt();

    let norm1 = l2_u + half_u + l2_ut;
    Ok(CompositeNorms {
        l2_u,
        half_u,
        full_u,
        l2_ut,
        half_ut,
        norm1,
        norm2: norm1 + full_u + half_ut,
        norm3: norm1 + half_ut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{band_limited, Grid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn lp_of_constant() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let u = Field::constant(g, -2.0).unwrap();
        assert!(close(lp_norm(&u, 2.0).unwrap(), 2.0 * 3.0, 1e-13));
        assert!(close(lp_norm(&u, 3.0).unwrap(), 2.0 * 9f64.powf(1.0 / 3.0), 1e-13));
        assert_eq!(lp_norm(&u, f64::INFINITY).unwrap(), 2.0);
        assert!(matches!(lp_norm(&u, 0.5), Err(FracError::InvalidExponent(_))));
    }

    #[test]
    fn holder_inequality() {
        let g = Grid::new(1, 128, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = band_limited(g, 9, &mut rng, false).unwrap();
            let v = band_limited(g, 9, &mut rng, false).unwrap();
            let uv = u.mul(&v).unwrap();
            for (p, q) in [(4.0, 4.0), (3.0, 6.0), (f64::INFINITY, 2.0)] {
                let lhs = lp_norm(&uv, 2.0).unwrap();
                let rhs = lp_norm(&u, p).unwrap() * lp_norm(&v, q).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn hs_of_constant_and_single_mode() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let c = Field::constant(g, 1.5).unwrap();
        let h = hs_norm(&c, 0.8).unwrap();
        let expect = 1.5 * (2.0 * PI).sqrt();
        assert!(close(h.fourier_form, expect, 1e-13));
        assert!(close(h.sum_form, expect, 1e-13));

        // ||sin 2x||^2 = pi, (1 + 2^{2s}) with s = 1/2 gives 3
        let u = Field::from_fn(g, |x| (2.0 * x[0]).sin()).unwrap();
        let h = hs_norm(&u, 0.5).unwrap();
        assert!(close(h.fourier_form, (3.0 * PI).sqrt(), 1e-13));
    }

    #[test]
    fn parseval_agreement() {
        let g = Grid::new(2, 32, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = band_limited(g, 8, &mut rng, false).unwrap();
        let v = band_limited(g, 8, &mut rng, false).unwrap();
        let a = inner_product(&u, &v).unwrap();
        let b = spectral_inner_product(&u, &v).unwrap();
        let scale = lp_norm(&u, 2.0).unwrap() * lp_norm(&v, 2.0).unwrap();
        assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn sin_cos_orthogonal() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let s = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let c = Field::from_fn(g, |x| x[0].cos()).unwrap();
        assert!(inner_product(&s, &c).unwrap().abs() < 1e-14);
        assert!(close(inner_product(&s, &s).unwrap(), lp_norm(&s, 2.0).unwrap().powi(2), 1e-14));
    }

    #[test]
    fn wsp_cases() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let c = Field::constant(g, 2.0).unwrap();
        let v = 2.0 * PI;
        assert!(close(wsp_norm(&c, 0.7, 3.0).unwrap(), 2.0 * v.powf(1.0 / 3.0), 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = band_limited(g, 6, &mut rng, false).unwrap();
        let w = wsp_norm(&u, 0.9, 2.0).unwrap();
        assert!(close(w, hs_norm(&u, 0.9).unwrap().sum_form, 1e-12));

        // sin(kx) factorizes: (1 + k^s) ||sin kx||_p
        let k = 3.0;
        let s = 0.6;
        let u = Field::from_fn(g, |x| (k * x[0]).sin()).unwrap();
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            let expect = lp_norm(&u, p).unwrap() * (1.0 + k.powf(s));
            assert!(close(wsp_norm(&u, s, p).unwrap(), expect, 1e-12));
        }
    }

    #[test]
    fn composite_single_mode() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let n = composite_norms(&u, &u, 1.0).unwrap();
        let r = PI.sqrt();
        assert!(close(n.norm1, 3.0 * r, 1e-13));
        assert!(close(n.norm3, 4.0 * r, 1e-13));
        assert!(close(n.norm2, 5.0 * r, 1e-13));

        let z = Field::zeros(g);
        let n = composite_norms(&z, &z, 0.5).unwrap();
        assert_eq!((n.norm1, n.norm2, n.norm3), (0.0, 0.0, 0.0));

        let c = Field::constant(g, 0.5).unwrap();
        let n = composite_norms(&c, &z, 0.5).unwrap();
        let expect = 0.5 * (2.0 * PI).sqrt();
        for v in [n.norm1, n.norm2, n.norm3] {
            assert!(close(v, expect, 1e-13));
        }
    }
}

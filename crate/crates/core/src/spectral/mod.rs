//! Periodic grids, sampled fields and Fourier-multiplier operators.
//!
//! All spatial data lives on the torus `[0, L)^d`, sampled at `n` points per
//! axis in row-major order (axis 0 is the slow index). Transforms are scaled
//! so that Parseval holds against the rectangle-rule inner product
//! `sum_i u_i v_i dx^d`:
//!
//! ```text
//! u_hat(k) = dx^d * sum_i u_i exp(-i k.x_i)
//! u_i      = (1 / V) * sum_k u_hat(k) exp(i k.x_i)
//! ```
//!
//! so `<u, v> = (1 / V) * Re sum_k u_hat(k) conj(v_hat(k))`.

mod fft;
mod norms;
mod ops;
mod random;

pub use fft::{forward_transform, inverse_transform};
pub use norms::{
    composite_norms, hs_norm, inner_product, lp_norm, spectral_inner_product, wsp_norm,
    CompositeNorms, HsNorm, NormSelector,
};
pub use ops::{apply_dg, apply_symbol, frac_laplacian, symbol_power};
pub(crate) use ops::Multiplier;
pub use random::band_limited;

use crate::error::{FracError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform periodic grid on `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

/// Wire form of a [`Grid`]: `{dim, n, L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

impl TryFrom<GridParams> for Grid {
    type Error = FracError;

    fn try_from(p: GridParams) -> Result<Self> {
        Grid::new(p.dim, p.n, p.length)
    }
}

impl From<Grid> for GridParams {
    fn from(g: Grid) -> Self {
        GridParams { dim: g.dim, n: g.n, length: g.length }
    }
}

impl Grid {
    /// Builds a grid; `dim` must be 1 or 2 and `n` a power of two `>= 8`.
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(FracError::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(FracError::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FracError::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Grid { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed mode index `j` in `[-n/2, n/2)` for FFT position `i`.
    pub fn mode_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber `2 pi j / L` for FFT position `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode_index(i) as f64 / self.length
    }

    /// `|k|` for every spectral slot, in the same row-major layout as samples.
    pub fn wavenumber_magnitudes(&self) -> Vec<f64> {
        let axis: Vec<f64> = (0..self.n).map(|i| self.wavenumber(i)).collect();
        match self.dim {
            1 => axis.iter().map(|k| k.abs()).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for k0 in &axis {
                    for k1 in &axis {
                        out.push((k0 * k0 + k1 * k1).sqrt());
                    }
                }
                out
            }
        }
    }

    /// Largest `|k|` on the grid (the Nyquist corner in 2-D).
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.length * (self.dim as f64).sqrt()
    }

    /// Physical coordinates of a flat sample index; unused axes are zero.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [flat as f64 * h, 0.0],
            _ => [(flat / self.n) as f64 * h, (flat % self.n) as f64 * h],
        }
    }

    /// Minimal-image displacement `x - c` on the torus, per axis.
    pub fn periodic_offset(&self, flat: usize, center: &[f64]) -> [f64; 2] {
        let x = self.point(flat);
        let mut out = [0.0; 2];
        for (a, slot) in out.iter_mut().enumerate().take(self.dim) {
            let c = center.get(a).copied().unwrap_or(0.0);
            let mut d = (x[a] - c).rem_euclid(self.length);
            if d >= 0.5 * self.length {
                d -= self.length;
            }
            *slot = d;
        }
        out
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(FracError::GridMismatch {
                left: self.describe(),
                right: other.describe(),
            })
        }
    }

    fn describe(&self) -> String {
        format!("(d={}, n={}, L={})", self.dim, self.n, self.length)
    }
}

/// Real scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    samples: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(FracError::SampleCount { expected: grid.len(), got: samples.len() });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(FracError::NonFinite { index });
        }
        Ok(Field { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field { grid, samples: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Field::new(grid, vec![value; grid.len()])
    }

    /// Samples `f(x)` at every grid point; `x` has `dim` meaningful entries.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let samples = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field::new(grid, samples)
    }

    pub(crate) fn from_raw(grid: Grid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Field { grid, samples }
    }

    /// Wraps solver output, rejecting NaN/Inf.
    pub(crate) fn checked(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        Field::new(grid, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// True when every sample equals the first one bit-for-bit.
    pub fn constant_value(&self) -> Option<f64> {
        let first = self.samples[0];
        self.samples.iter().all(|&v| v == first).then_some(first)
    }

    pub fn scale(&self, alpha: f64) -> Field {
        Field::from_raw(self.grid, self.samples.iter().map(|v| alpha * v).collect())
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Field, beta: f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Field::checked(self.grid, samples)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, 1.0)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect();
        Field::checked(self.grid, samples)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::checked(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Rectangle-rule integral `sum_i u_i dx^d`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Order `s > 0` of the fractional operator `(-Laplacian)^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 {
            Ok(FracOrder(s))
        } else {
            Err(FracError::InvalidOrder(s))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Whether the Sobolev-embedding regime `d > 2s` applies.
    pub fn sobolev_regime(&self, dim: usize) -> bool {
        dim as f64 > 2.0 * self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = FracError;

    fn try_from(s: f64) -> Result<Self> {
        FracOrder::new(s)
    }
}

impl From<FracOrder> for f64 {
    fn from(o: FracOrder) -> f64 {
        o.0
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    FracOrder::new(s).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_1d() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        assert!((g.spacing() - 2.0 * PI / 64.0).abs() < 1e-15);
        let modes: Vec<i64> = (0..64).map(|i| g.mode_index(i)).collect();
        assert_eq!(*modes.iter().min().unwrap(), -32);
        assert_eq!(*modes.iter().max().unwrap(), 31);
        assert!((g.wavenumber(3) - 3.0).abs() < 1e-14);
        assert!((g.max_wavenumber() - 32.0).abs() < 1e-12);
    }

    #[test]
    fn make_grid_2d() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        assert_eq!(g.len(), 64);
        assert!((g.wavenumber(1) - 2.0 * PI).abs() < 1e-14);
        assert!((g.wavenumber(4) + 8.0 * PI).abs() < 1e-12);
        assert!((g.cell_volume() - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(matches!(Grid::new(1, 63, 1.0), Err(FracError::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 4, 1.0), Err(FracError::InvalidGrid(_))));
        assert!(matches!(Grid::new(3, 8, 1.0), Err(FracError::InvalidGrid(_))));
        assert!(matches!(Grid::new(0, 8, 1.0), Err(FracError::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 8, 0.0), Err(FracError::InvalidGrid(_))));
    }

    #[test]
    fn grid_wire_format() {
        let g = Grid::new(2, 16, 3.5).unwrap();
        let params = GridParams::from(g);
        assert_eq!(params, GridParams { dim: 2, n: 16, length: 3.5 });
        assert!(Grid::try_from(GridParams { dim: 1, n: 12, length: 1.0 }).is_err());
    }

    #[test]
    fn field_rejects_nan_and_wrong_length() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        assert!(matches!(Field::new(g, vec![0.0; 7]), Err(FracError::SampleCount { .. })));
        let mut v = vec![0.0; 8];
        v[5] = f64::NAN;
        assert_eq!(Field::new(g, v), Err(FracError::NonFinite { index: 5 }));
    }

    #[test]
    fn periodic_offset_wraps() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let d = g.periodic_offset(7, &[0.0]);
        assert!((d[0] + 0.125).abs() < 1e-15);
        let d = g.periodic_offset(0, &[0.875]);
        assert!((d[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn frac_order_regime() {
        let s = FracOrder::new(0.5).unwrap();
        assert!(s.sobolev_regime(2));
        assert!(!s.sobolev_regime(1));
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(f64::NAN).is_err());
    }
}

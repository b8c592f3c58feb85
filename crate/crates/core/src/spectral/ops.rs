use super::fft::{forward_raw, inverse_raw};
use super::{check_order, Field, Grid};
use crate::error::{FracError, Result};

/// `|k|^exponent`, with the zero mode mapped to 0.
pub fn symbol_power(k: f64, exponent: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k.powf(exponent)
    }
}

/// Precomputed real, even Fourier multiplier on a fixed grid.
#[derive(Debug, Clone)]
pub(crate) struct Multiplier {
    grid: Grid,
    values: Vec<f64>,
}

impl Multiplier {
    pub(crate) fn new(grid: Grid, symbol: impl Fn(f64) -> f64) -> Self {
        let values = grid.wavenumber_magnitudes().into_iter().map(symbol).collect();
        Multiplier { grid, values }
    }

    /// Multiplier `|k|^exponent`.
    pub(crate) fn power(grid: Grid, exponent: f64) -> Self {
        Multiplier::new(grid, |k| symbol_power(k, exponent))
    }

    pub(crate) fn apply_raw(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let mut hat = forward_raw(&self.grid, samples);
        for (z, m) in hat.iter_mut().zip(&self.values) {
            *z *= *m;
        }
        inverse_raw(&self.grid, hat)
    }
}

/// Applies the radial Fourier multiplier `symbol(|k|)` to `u`.
pub fn apply_symbol(u: &Field, symbol: impl Fn(f64) -> f64) -> Result<Field> {
    let m = Multiplier::new(*u.grid(), symbol);
    Field::checked(*u.grid(), m.apply_raw(u.samples())?)
}

/// `(-Laplacian)^s u`, the multiplier `|k|^{2s}`.
///
/// The Nyquist mode is kept: the symbol is even, so Hermitian symmetry of
/// the spectrum is preserved without zeroing it.
pub fn frac_laplacian(u: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    apply_symbol(u, |k| symbol_power(k, 2.0 * s))
}

/// `D_g^s u = (-Laplacian)^{s/2} ( g (-Laplacian)^{s/2} u )`.
pub fn apply_dg(u: &Field, g: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    u.grid().ensure_same(g.grid())?;
    let min = g.min();
    if min <= 0.0 {
        return Err(FracError::PositivityViolation { name: "g", min });
    }
    let half = Multiplier::power(*u.grid(), s);
    let mut inner = half.apply_raw(u.samples())?;
    for (v, gv) in inner.iter_mut().zip(g.samples()) {
        *v *= gv;
    }
    Field::checked(*u.grid(), half.apply_raw(&inner)?)
}

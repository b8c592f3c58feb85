use super::{Field, Grid};
use crate::error::{FracError, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

/// Imaginary residue tolerated after an inverse transform, relative to the
/// spectrum's L1 scale.
const IMAG_RESIDUE_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place DFT over every axis of a row-major buffer.
pub(crate) fn transform_in_place(grid: &Grid, buf: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    match grid.dim() {
        1 => fft.process_with_scratch(buf, &mut scratch),
        _ => {
            // rows are contiguous (axis 1)
            fft.process_with_scratch(buf, &mut scratch);
            let mut column = vec![Complex64::default(); n];
            for c in 0..n {
                for r in 0..n {
                    column[r] = buf[r * n + c];
                }
                fft.process_with_scratch(&mut column, &mut scratch);
                for r in 0..n {
                    buf[r * n + c] = column[r];
                }
            }
        }
    }
}

/// Forward transform scaled by `dx^d`.
pub fn forward_transform(u: &Field) -> Vec<Complex64> {
    forward_raw(u.grid(), u.samples())
}

pub(crate) fn forward_raw(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(grid, &mut buf, false);
    let w = grid.cell_volume();
    for z in &mut buf {
        *z *= w;
    }
    make_hermitian(grid, &mut buf);
    buf
}

/// Projects onto exactly Hermitian spectra. The transform of real data is
/// Hermitian only up to rounding, and high-order multipliers would amplify
/// that rounding into a visible imaginary part.
fn make_hermitian(grid: &Grid, buf: &mut [Complex64]) {
    let n = grid.n();
    let mirror = |i: usize| (n - i) % n;
    for flat in 0..buf.len() {
        let partner = match grid.dim() {
            1 => mirror(flat),
            _ => mirror(flat / n) * n + mirror(flat % n),
        };
        if partner < flat {
            continue;
        }
        let avg = 0.5 * (buf[flat] + buf[partner].conj());
        buf[flat] = avg;
        buf[partner] = avg.conj();
    }
}

/// Inverse transform scaled by `1/V`; fails if the result is not real.
pub fn inverse_transform(grid: &Grid, spectrum: Vec<Complex64>) -> Result<Field> {
    if spectrum.len() != grid.len() {
        return Err(FracError::SampleCount { expected: grid.len(), got: spectrum.len() });
    }
    let samples = inverse_raw(grid, spectrum)?;
    Field::checked(*grid, samples)
}

pub(crate) fn inverse_raw(grid: &Grid, mut spectrum: Vec<Complex64>) -> Result<Vec<f64>> {
    let inv_volume = 1.0 / grid.volume();
    let scale = spectrum.iter().map(|z| z.norm()).sum::<f64>() * inv_volume;
    transform_in_place(grid, &mut spectrum, true);
    let mut residue = 0.0_f64;
    let out = spectrum
        .iter()
        .map(|z| {
            residue = residue.max((z.im * inv_volume).abs());
            z.re * inv_volume
        })
        .collect();
    if residue > IMAG_RESIDUE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(FracError::ImaginaryResidue { residue, scale });
    }
    Ok(out)
}

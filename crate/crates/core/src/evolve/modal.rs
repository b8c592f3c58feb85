//! Closed-form solutions for constant-coefficient problems, one Fourier
//! mode at a time.

use super::{ProblemSpec, SourceTerm, TimeProfile};
use crate::error::{FracError, Result};
use crate::spectral::{forward_transform, inverse_transform, symbol_power, Field};
use num_complex::Complex64;

/// `z'' + beta z' + lambda z = force` with constant `beta, lambda >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillator {
    pub lambda: f64,
    pub beta: f64,
}

impl DampedOscillator {
    /// `C(t)`, `S(t)` and `omega^2` for the homogeneous part.
    fn basis(&self, t: f64) -> (f64, f64, f64) {
        let a = 0.5 * self.beta;
        let w2 = self.lambda - a * a;
        let scale = self.lambda.max(a * a).max(f64::MIN_POSITIVE);
        if w2.abs() <= 1e-14 * scale {
            (1.0, t, 0.0)
        } else if w2 > 0.0 {
            let w = w2.sqrt();
            ((w * t).cos(), (w * t).sin() / w, w2)
        } else {
            let k = (-w2).sqrt();
            ((k * t).cosh(), (k * t).sinh() / k, w2)
        }
    }

    /// `(z(t), z'(t))` for the free oscillator with `z(0) = z0`, `z'(0) = z1`.
    pub fn homogeneous<T>(&self, z0: T, z1: T, t: f64) -> (T, T)
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let a = 0.5 * self.beta;
        let (c, s, w2) = self.basis(t);
        let e = (-a * t).exp();
        let q = z1 + z0 * a;
        let z = (z0 * c + q * s) * e;
        let zt = z * (-a) + (z0 * (-w2 * s) + q * c) * e;
        (z, zt)
    }

    /// Adds a constant force `force`.
    pub fn forced<T>(&self, z0: T, z1: T, force: T, t: f64) -> (T, T)
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        if self.lambda > 0.0 {
            let inv = 1.0 / self.lambda;
            let (z, zt) = self.homogeneous(z0 + force * (-inv), z1, t);
            (z + force * inv, zt)
        } else if self.beta > 0.0 {
            let b = self.beta;
            let decay = (-b * t).exp();
            let drift = force * (1.0 / b);
            let gap = z1 + drift * (-1.0);
            let z = z0 + drift * t + gap * ((1.0 - decay) / b);
            let zt = drift + gap * decay;
            (z, zt)
        } else {
            (z0 + z1 * t + force * (0.5 * t * t), z1 + force * t)
        }
    }
}

/// Exact `(u(t), u_t(t))` when `g, m, b` are constant and the forcing is
/// absent or of the form `F(x)` (constant in time).
pub fn modal_solution(p: &ProblemSpec, t: f64) -> Result<(Field, Field)> {
    let (gc, mc, bc) = match (p.g.constant_value(), p.m.constant_value(), p.b.constant_value()) {
        (Some(g), Some(m), Some(b)) => (g, m, b),
        _ => return Err(FracError::MissingReference("coefficients are not constant".into())),
    };
    let force = match &p.forcing {
        SourceTerm::Zero => None,
        SourceTerm::Separable { profile: TimeProfile::Constant, shape } => Some(forward_transform(shape)),
        _ => return Err(FracError::MissingReference("forcing is not constant in time".into())),
    };
    let grid = *p.grid();
    let s = p.s();
    let u0 = forward_transform(&p.u0);
    let u1 = forward_transform(&p.u1);
    let mut u = Vec::with_capacity(grid.len());
    let mut ut = Vec::with_capacity(grid.len());
    for (i, k) in grid.wavenumber_magnitudes().into_iter().enumerate() {
        let osc = DampedOscillator { lambda: gc * symbol_power(k, 2.0 * s) + mc, beta: bc };
        let f = force.as_ref().map_or(Complex64::default(), |f| f[i]);
        let (z, zt) = osc.forced(u0[i], u1[i], f, t);
        u.push(z);
        ut.push(zt);
    }
    Ok((inverse_transform(&grid, u)?, inverse_transform(&grid, ut)?))
}

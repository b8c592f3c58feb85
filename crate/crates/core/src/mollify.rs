//! Mollifier nets `psi_eps(x) = eps^{-d} psi(x / eps)`, convolution
//! regularization and a catalog of singular data realized as eps-nets.

use crate::error::{FracError, Result};
use crate::spectral::{forward_transform, inverse_transform, Field, Grid};
use serde::{Deserialize, Serialize};

/// Width of the gaussian profile `exp(-|x|^2 / (2 w^2))` before eps-scaling.
pub const GAUSSIAN_WIDTH: f64 = 1.0 / 3.0;

/// Nets narrower than this many grid spacings are rejected.
pub const MIN_RESOLVED_SPACINGS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(-1 / (1 - |x|^2))` on the unit ball; a Friedrichs mollifier.
    CompactBump,
    Gaussian,
}

impl KernelKind {
    fn profile(&self, r2: f64) -> f64 {
        match self {
            KernelKind::CompactBump => {
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => (-r2 / (2.0 * GAUSSIAN_WIDTH * GAUSSIAN_WIDTH)).exp(),
        }
    }

    /// `d/dy_1` of the unscaled profile at `y`.
    fn profile_dx1(&self, y: [f64; 2], r2: f64) -> f64 {
        match self {
            KernelKind::CompactBump => {
                if r2 < 1.0 {
                    let q = 1.0 - r2;
                    self.profile(r2) * (-2.0 * y[0] / (q * q))
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => -y[0] / (GAUSSIAN_WIDTH * GAUSSIAN_WIDTH) * self.profile(r2),
        }
    }
}

/// One member `psi_eps` of a mollifier net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    pub kernel: KernelKind,
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn new(kernel: KernelKind, epsilon: f64) -> Result<Self> {
        let spec = MollifierSpec { kernel, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(FracError::InvalidEpsilon(self.epsilon));
        }
        Ok(())
    }

    /// Checks that the net member is representable on `grid`.
    pub fn check_resolvable(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        let minimum = MIN_RESOLVED_SPACINGS * grid.spacing();
        if self.epsilon < minimum * (1.0 - 1e-12) {
            return Err(FracError::UnresolvableKernel { epsilon: self.epsilon, minimum });
        }
        if self.kernel == KernelKind::CompactBump && self.epsilon > 0.5 * grid.length() {
            return Err(FracError::KernelExceedsBox {
                epsilon: self.epsilon,
                half_box: 0.5 * grid.length(),
            });
        }
        Ok(())
    }
}

/// Sampled kernel centred at `center`, renormalized to unit discrete mass.
/// Returns the field and the constant `c` with `psi_eps = c * profile(y / eps)`.
fn sampled_kernel(spec: &MollifierSpec, grid: &Grid, center: &[f64]) -> Result<(Field, f64)> {
    spec.check_resolvable(grid)?;
    let eps = spec.epsilon;
    let raw: Vec<f64> = (0..grid.len())
        .map(|i| {
            let d = grid.periodic_offset(i, center);
            let r2 = (d[0] * d[0] + d[1] * d[1]) / (eps * eps);
            spec.kernel.profile(r2)
        })
        .collect();
    let mass = raw.iter().sum::<f64>() * grid.cell_volume();
    let c = 1.0 / mass;
    let samples = raw.into_iter().map(|v| v * c).collect();
    Ok((Field::new(*grid, samples)?, c))
}

/// `psi_eps` centred at the origin (wrapping periodically).
pub fn kernel_eval(spec: &MollifierSpec, grid: &Grid) -> Result<Field> {
    Ok(sampled_kernel(spec, grid, &[0.0, 0.0])?.0)
}

/// Periodic convolution `f * psi_eps` through the spectral product.
pub fn regularize(datum: &Field, spec: &MollifierSpec) -> Result<Field> {
    let grid = *datum.grid();
    let kernel = kernel_eval(spec, &grid)?;
    let fh = forward_transform(datum);
    let kh = forward_transform(&kernel);
    let product = fh.iter().zip(&kh).map(|(a, b)| a * b).collect();
    inverse_transform(&grid, product)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    Delta,
    DeltaPrime,
    DeltaSquared,
    Heaviside,
    SmoothReference,
}

/// Entry of the singular-data catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularDatum {
    pub kind: SingularKind,
    pub center: Vec<f64>,
    pub amplitude: f64,
}

impl SingularDatum {
    pub fn new(kind: SingularKind, center: Vec<f64>, amplitude: f64) -> Self {
        SingularDatum { kind, center, amplitude }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.center.len() != grid.dim() {
            return Err(FracError::InvalidDatum(format!(
                "center has {} coordinates, grid dimension is {}",
                self.center.len(),
                grid.dim()
            )));
        }
        if let Some(c) = self.center.iter().find(|c| !(**c > 0.0 && **c < grid.length())) {
            return Err(FracError::InvalidDatum(format!(
                "center coordinate {c} not strictly inside (0, {})",
                grid.length()
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(FracError::InvalidDatum("amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// Realizes a catalog datum directly as its eps-net on `grid`.
///
/// * `delta` -> `A psi_eps(x - c)`
/// * `delta_prime` -> `A d/dx_1 psi_eps(x - c)`
/// * `delta_squared` -> `A psi_eps(x - c)^2` (not renormalized)
/// * `heaviside` -> `A (H(x_1 - c_1) * psi_eps)`, one period of a step
/// * `smooth_reference` -> `A (G * psi_eps)`, `G` a gaussian of width `L/16`
pub fn singular_net(datum: &SingularDatum, spec: &MollifierSpec, grid: &Grid) -> Result<Field> {
    datum.validate(grid)?;
    let amp = datum.amplitude;
    match datum.kind {
        SingularKind::Delta => Ok(sampled_kernel(spec, grid, &datum.center)?.0.scale(amp)),
        SingularKind::DeltaSquared => {
            let (psi, _) = sampled_kernel(spec, grid, &datum.center)?;
            psi.map(|v| amp * v * v)
        }
        SingularKind::DeltaPrime => {
            let (_, c) = sampled_kernel(spec, grid, &datum.center)?;
            let eps = spec.epsilon;
            let samples = (0..grid.len())
                .map(|i| {
                    let d = grid.periodic_offset(i, &datum.center);
                    let y = [d[0] / eps, d[1] / eps];
                    let r2 = y[0] * y[0] + y[1] * y[1];
                    amp * c / eps * spec.kernel.profile_dx1(y, r2)
                })
                .collect();
            Field::new(*grid, samples)
        }
        SingularKind::Heaviside => {
            let c1 = datum.center[0];
            let step = Field::from_fn(*grid, |x| {
                if x[0] > c1 {
                    1.0
                } else if x[0] == c1 {
                    0.5
                } else {
                    0.0
                }
            })?;
            Ok(regularize(&step, spec)?.scale(amp))
        }
        SingularKind::SmoothReference => {
            let w = grid.length() / 16.0;
            let base = Field::new(
                *grid,
                (0..grid.len())
                    .map(|i| {
                        let d = grid.periodic_offset(i, &datum.center);
                        (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * w * w)).exp()
                    })
                    .collect(),
            )?;
            Ok(regularize(&base, spec)?.scale(amp))
        }
    }
}

/// Ordinary least-squares fit of `log y = intercept + slope * log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares power law through positive points; no ordering required.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(FracError::InvalidFit("need at least two points".into()));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(FracError::InvalidFit(format!("non-positive point ({x}, {y})")));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(FracError::InvalidFit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // flat data is an exact (zero-slope) power law
    let r_squared = if ss_tot <= 1e-24 * n { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(PowerLawFit { slope, intercept, r_squared })
}

/// Fits `norm ~ eps^{slope}` over a strictly decreasing eps ladder; a
/// moderate net has `slope = -N` for some finite `N`.
pub fn moderateness_exponent(norms: &[(f64, f64)]) -> Result<PowerLawFit> {
    if norms.len() < 4 {
        return Err(FracError::InvalidFit(format!("need >= 4 points, got {}", norms.len())));
    }
    if norms.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(FracError::InvalidFit("epsilons must be strictly decreasing".into()));
    }
    fit_power_law(norms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lp_norm;
    use std::f64::consts::PI;

    fn fine_grid() -> Grid {
        Grid::new(1, 1024, 2.0).unwrap()
    }

    #[test]
    fn bump_has_unit_mass_and_compact_support() {
        let g = fine_grid();
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.5).unwrap();
        let k = kernel_eval(&spec, &g).unwrap();
        assert!((k.integral() - 1.0).abs() < 1e-12);
        assert!(k.min() >= 0.0);
        for i in 0..g.len() {
            let r = g.periodic_offset(i, &[0.0])[0].abs();
            if r >= 0.5 {
                assert_eq!(k.samples()[i], 0.0);
            }
        }
    }

    #[test]
    fn halving_eps_doubles_peak() {
        let g = fine_grid();
        let a = kernel_eval(&MollifierSpec::new(KernelKind::CompactBump, 0.2).unwrap(), &g).unwrap();
        let b = kernel_eval(&MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap(), &g).unwrap();
        let ratio = b.max() / a.max();
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");

        let g2 = Grid::new(2, 256, 2.0).unwrap();
        let a = kernel_eval(&MollifierSpec::new(KernelKind::CompactBump, 0.2).unwrap(), &g2).unwrap();
        let b = kernel_eval(&MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap(), &g2).unwrap();
        let ratio = b.max() / a.max();
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn gaussian_is_positive() {
        let g = Grid::new(1, 256, 2.0 * PI).unwrap();
        let k = kernel_eval(&MollifierSpec::new(KernelKind::Gaussian, 0.5).unwrap(), &g).unwrap();
        assert!(k.min() > 0.0);
        assert!((k.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unresolvable_and_invalid_eps() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let err = kernel_eval(&MollifierSpec { kernel: KernelKind::CompactBump, epsilon: 0.05 }, &g);
        assert!(matches!(err, Err(FracError::UnresolvableKernel { .. })));
        assert!(kernel_eval(&MollifierSpec { kernel: KernelKind::CompactBump, epsilon: 4.0 / 64.0 }, &g).is_ok());
        assert!(matches!(MollifierSpec::new(KernelKind::Gaussian, 0.0), Err(FracError::InvalidEpsilon(_))));
        assert!(matches!(MollifierSpec::new(KernelKind::Gaussian, 1.5), Err(FracError::InvalidEpsilon(_))));
        let small_box = Grid::new(1, 64, 1.0).unwrap();
        let err = kernel_eval(&MollifierSpec { kernel: KernelKind::CompactBump, epsilon: 0.75 }, &small_box);
        assert!(matches!(err, Err(FracError::KernelExceedsBox { .. })));
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = fine_grid();
        let c = Field::constant(g, 2.5).unwrap();
        let r = regularize(&c, &MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap()).unwrap();
        assert!(r.samples().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn grid_delta_regularizes_to_kernel() {
        let g = fine_grid();
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap();
        let mut d = vec![0.0; g.len()];
        d[0] = 1.0 / g.cell_volume();
        let r = regularize(&Field::new(g, d).unwrap(), &spec).unwrap();
        let k = kernel_eval(&spec, &g).unwrap();
        for (a, b) in r.samples().iter().zip(k.samples()) {
            assert!((a - b).abs() < 1e-10 * k.max());
        }
    }

    #[test]
    fn young_inequality_and_mass() {
        let g = fine_grid();
        let f = Field::from_fn(g, |x| (3.0 * PI * x[0]).sin() + (x[0] - 1.0).abs()).unwrap();
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.05).unwrap();
        let r = regularize(&f, &spec).unwrap();
        assert!((r.integral() - f.integral()).abs() < 1e-10);
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            assert!(lp_norm(&r, p).unwrap() <= lp_norm(&f, p).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn delta_net_mass_is_amplitude() {
        let g = fine_grid();
        let datum = SingularDatum::new(SingularKind::Delta, vec![0.7], -3.0);
        for eps in [0.25, 0.125, 0.0625] {
            let spec = MollifierSpec::new(KernelKind::CompactBump, eps).unwrap();
            let net = singular_net(&datum, &spec, &g).unwrap();
            assert!((lp_norm(&net, 1.0).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_prime_integrates_to_zero_and_is_odd() {
        let g = fine_grid();
        let datum = SingularDatum::new(SingularKind::DeltaPrime, vec![1.0], 1.0);
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.2).unwrap();
        let net = singular_net(&datum, &spec, &g).unwrap();
        assert!(net.integral().abs() < 1e-9);
        // centre sits on index 512; check odd symmetry around it
        for j in 1..100 {
            let a = net.samples()[512 + j];
            let b = net.samples()[512 - j];
            assert!((a + b).abs() < 1e-9 * net.max_abs());
        }
        // first moment of psi' is -1: int x psi'(x) dx = -int psi = -1
        let moment: f64 = (0..g.len())
            .map(|i| g.periodic_offset(i, &[1.0])[0] * net.samples()[i])
            .sum::<f64>()
            * g.cell_volume();
        assert!((moment + 1.0).abs() < 1e-6, "moment {moment}");
    }

    #[test]
    fn heaviside_net_is_monotone_step() {
        let g = fine_grid();
        let datum = SingularDatum::new(SingularKind::Heaviside, vec![1.0], 2.0);
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap();
        let net = singular_net(&datum, &spec, &g).unwrap();
        assert!((net.samples()[512] - 1.0).abs() < 1e-10);
        assert!((net.samples()[700] - 2.0).abs() < 1e-10);
        assert!(net.samples()[300].abs() < 1e-10);
    }

    #[test]
    fn datum_validation() {
        let g = fine_grid();
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.1).unwrap();
        let outside = SingularDatum::new(SingularKind::Delta, vec![2.0], 1.0);
        assert!(matches!(singular_net(&outside, &spec, &g), Err(FracError::InvalidDatum(_))));
        let wrong_dim = SingularDatum::new(SingularKind::Delta, vec![1.0, 1.0], 1.0);
        assert!(matches!(singular_net(&wrong_dim, &spec, &g), Err(FracError::InvalidDatum(_))));
    }

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(f64, f64)> = (2..7).map(|k| {
            let e = 2f64.powi(-k);
            (e, 3.0 * e.powi(-2))
        }).collect();
        let fit = moderateness_exponent(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat: Vec<(f64, f64)> = (2..7).map(|k| (2f64.powi(-k), 5.0)).collect();
        let fit = moderateness_exponent(&flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let pts = vec![(0.5, 1.0), (0.25, 0.0), (0.125, 1.0), (0.0625, 1.0)];
        assert!(matches!(moderateness_exponent(&pts), Err(FracError::InvalidFit(_))));
        let pts = vec![(0.5, 1.0), (0.25, 1.0), (0.125, 1.0)];
        assert!(moderateness_exponent(&pts).is_err());
        let pts = vec![(0.25, 1.0), (0.5, 1.0), (0.125, 1.0), (0.0625, 1.0)];
        assert!(moderateness_exponent(&pts).is_err());
    }
}

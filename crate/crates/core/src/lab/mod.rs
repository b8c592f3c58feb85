//! Very-weak-solution experiments: moderateness sweeps over an eps ladder,
//! twin-mollifier negligibility runs, coherence runs, estimate checks and
//! functional-inequality probes.

pub mod bounds;
pub mod probes;

pub use bounds::{energy_bound_check, BoundFamily, BoundReport, BoundSample, Estimate};
pub use probes::{kato_ponce_probe, kato_ponce_ratio, sobolev_ratio, sobolev_ratio_probe, ProbeReport};

use crate::error::{FracError, Result};
use crate::evolve::{
    modal::modal_solution, solve_trajectory, stable_dt, time_step, ProblemSpec, Provenance, SolverConfig,
    SourceTerm, TimeProfile, Trajectory,
};
use crate::mollify::{
    fit_power_law, moderateness_exponent, regularize, singular_net, KernelKind, MollifierSpec, PowerLawFit,
    SingularDatum, MIN_RESOLVED_SPACINGS,
};
use crate::spectral::{composite_norms, lp_norm, Field, FracOrder, Grid, NormSelector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Minimum coefficient of determination for a moderate verdict.
pub const R_SQUARED_THRESHOLD: f64 = 0.95;

/// Default required gap between difference and solution slopes.
pub const DEFAULT_TWIN_MARGIN: f64 = 1.0;

/// Differences below this are treated as negligible outright.
pub const TWIN_ABSOLUTE_FLOOR: f64 = 1e-8;

/// One coefficient or data slot of a template.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Constant(f64),
    /// A smooth field; regularized along with everything else.
    Tabulated(Field),
    /// `base + net(datum)`.
    Singular { datum: SingularDatum, base: f64 },
}

impl Slot {
    fn realize(&self, grid: &Grid, spec: &MollifierSpec) -> Result<Field> {
        match self {
            Slot::Constant(c) => Field::constant(*grid, *c),
            Slot::Tabulated(f) => {
                grid.ensure_same(f.grid())?;
                regularize(f, spec)
            }
            Slot::Singular { datum, base } => {
                let net = singular_net(datum, spec, grid)?;
                net.map(|v| v + base)
            }
        }
    }

    fn realize_classical(&self, grid: &Grid, name: &str) -> Result<Field> {
        match self {
            Slot::Constant(c) => Field::constant(*grid, *c),
            Slot::Tabulated(f) => {
                grid.ensure_same(f.grid())?;
                Ok(f.clone())
            }
            Slot::Singular { .. } => {
                Err(FracError::MissingReference(format!("slot {name} has no classical value")))
            }
        }
    }

    fn datum(&self) -> Option<&SingularDatum> {
        match self {
            Slot::Singular { datum, .. } => Some(datum),
            _ => None,
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Slot::Constant(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSlot {
    Zero,
    Separable { profile: TimeProfile, slot: Slot },
}

/// A problem with some slots still singular, to be realized per eps.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemTemplate {
    pub grid: Grid,
    pub order: FracOrder,
    pub horizon: f64,
    pub g: Slot,
    pub m: Slot,
    pub b: Slot,
    pub u0: Slot,
    pub u1: Slot,
    pub forcing: ForcingSlot,
}

impl ProblemTemplate {
    /// `g = 1`, `m = b = 0`, `u1 = 0`, no forcing; the given `u0`.
    pub fn free(grid: Grid, s: f64, horizon: f64, u0: Slot) -> Result<Self> {
        Ok(ProblemTemplate {
            grid,
            order: FracOrder::new(s)?,
            horizon,
            g: Slot::Constant(1.0),
            m: Slot::Constant(0.0),
            b: Slot::Constant(0.0),
            u0,
            u1: Slot::Constant(0.0),
            forcing: ForcingSlot::Zero,
        })
    }

    fn slots(&self) -> Vec<(&'static str, &Slot)> {
        let mut v = vec![("g", &self.g), ("m", &self.m), ("b", &self.b), ("u0", &self.u0), ("u1", &self.u1)];
        if let ForcingSlot::Separable { slot, .. } = &self.forcing {
            v.push(("f", slot));
        }
        v
    }

    /// True when every coefficient slot is a constant.
    pub fn has_constant_coefficients(&self) -> bool {
        self.g.is_constant() && self.m.is_constant() && self.b.is_constant()
    }

    pub fn has_unit_g(&self) -> bool {
        self.g == Slot::Constant(1.0)
    }

    /// The eps-regularized problem.
    pub fn instantiate(&self, spec: &MollifierSpec) -> Result<ProblemSpec> {
        spec.check_resolvable(&self.grid)?;
        let grid = &self.grid;
        let forcing = match &self.forcing {
            ForcingSlot::Zero => SourceTerm::Zero,
            ForcingSlot::Separable { profile, slot } => {
                SourceTerm::Separable { profile: *profile, shape: slot.realize(grid, spec)? }
            }
        };
        let slots = self
            .slots()
            .into_iter()
            .filter_map(|(name, s)| s.datum().map(|d| (name.to_string(), d.clone())))
            .collect::<Vec<_>>();
        let p = ProblemSpec::new(
            self.order,
            self.horizon,
            self.g.realize(grid, spec)?,
            self.m.realize(grid, spec)?,
            self.b.realize(grid, spec)?,
            forcing,
            self.u0.realize(grid, spec)?,
            self.u1.realize(grid, spec)?,
        )?;
        Ok(p.with_provenance(Provenance::Regularized { mollifier: *spec, slots }))
    }

    /// The classical problem; fails if any slot is singular.
    pub fn instantiate_unregularized(&self) -> Result<ProblemSpec> {
        let grid = &self.grid;
        let forcing = match &self.forcing {
            ForcingSlot::Zero => SourceTerm::Zero,
            ForcingSlot::Separable { profile, slot } => {
                SourceTerm::Separable { profile: *profile, shape: slot.realize_classical(grid, "f")? }
            }
        };
        ProblemSpec::new(
            self.order,
            self.horizon,
            self.g.realize_classical(grid, "g")?,
            self.m.realize_classical(grid, "m")?,
            self.b.realize_classical(grid, "b")?,
            forcing,
            self.u0.realize_classical(grid, "u0")?,
            self.u1.realize_classical(grid, "u1")?,
        )
    }
}

/// `2^-k` for `k = 2..=6`, dropping entries below `4 dx`.
pub fn default_ladder(grid: &Grid) -> Vec<f64> {
    let floor = MIN_RESOLVED_SPACINGS * grid.spacing();
    (2..=6).map(|k| 2f64.powi(-k)).filter(|e| *e >= floor * (1.0 - 1e-12)).collect()
}

pub fn validate_ladder(ladder: &[f64], grid: &Grid) -> Result<()> {
    if ladder.len() < 4 {
        return Err(FracError::InvalidLadder(format!("need >= 4 entries, got {}", ladder.len())));
    }
    let floor = MIN_RESOLVED_SPACINGS * grid.spacing();
    for (i, &e) in ladder.iter().enumerate() {
        if !(e > 0.0 && e <= 1.0) {
            return Err(FracError::InvalidLadder(format!("entry {i} = {e} not in (0, 1]")));
        }
        if e < floor * (1.0 - 1e-12) {
            return Err(FracError::InvalidLadder(format!("entry {i} = {e} below 4 dx = {floor}")));
        }
        if i > 0 && e >= ladder[i - 1] {
            return Err(FracError::InvalidLadder(format!("entry {i} = {e} does not decrease")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Moderate { n_hat: u32 },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    pub norm: NormSelector,
    /// `sup_t` of the selected composite norm, per eps.
    pub norms_per_eps: Vec<f64>,
    pub fitted_slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
}

impl SweepReport {
    pub fn require_moderate(&self) -> Result<u32> {
        match self.verdict {
            Verdict::Moderate { n_hat } => Ok(n_hat),
            Verdict::Inconclusive => Err(FracError::InconclusiveFit {
                r_squared: self.r_squared,
                threshold: R_SQUARED_THRESHOLD,
            }),
        }
    }
}

fn verdict(fit: &PowerLawFit) -> Verdict {
    if fit.r_squared >= R_SQUARED_THRESHOLD {
        Verdict::Moderate { n_hat: (-fit.slope).ceil().max(1.0) as u32 }
    } else {
        Verdict::Inconclusive
    }
}

fn sup_norm(traj: &Trajectory, s: f64, selector: NormSelector) -> Result<f64> {
    let norms = traj.composite_norms(s)?;
    Ok(norms.iter().map(|n| selector.select(n)).fold(0.0, f64::max))
}

/// Runs the template at every eps of the ladder and fits `sup_t ||u_eps|| ~ eps^slope`.
pub fn moderateness_sweep(
    template: &ProblemTemplate,
    kernel: KernelKind,
    ladder: &[f64],
    selector: NormSelector,
    cfg: &SolverConfig,
) -> Result<SweepReport> {
    validate_ladder(ladder, &template.grid)?;
    let s = template.order.value();
    let norms = ladder
        .par_iter()
        .map(|&eps| {
            let p = template.instantiate(&MollifierSpec::new(kernel, eps)?)?;
            sup_norm(&solve_trajectory(&p, cfg)?, s, selector)
        })
        .collect::<Result<Vec<f64>>>()?;
    let points: Vec<(f64, f64)> = ladder.iter().copied().zip(norms.iter().copied()).collect();
    let fit = moderateness_exponent(&points)?;
    Ok(SweepReport {
        epsilons: ladder.to_vec(),
        norm: selector,
        norms_per_eps: norms,
        fitted_slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        verdict: verdict(&fit),
    })
}

/// Common step for a set of problems: the smallest stability-capped step
/// among them, so that every run shares one time grid.
pub fn common_config(problems: &[&ProblemSpec], cfg: &SolverConfig) -> Result<SolverConfig> {
    let mut dt = f64::INFINITY;
    for p in problems {
        let cap = cfg.cfl_fraction * stable_dt(p.grid(), p.s(), p.g.max(), p.m.max());
        dt = dt.min(cfg.dt_override.map_or(cap, |d| d.min(cap)));
        // reject an override that is too large for any member
        time_step(p, cfg)?;
    }
    Ok(SolverConfig { dt_override: Some(dt), ..*cfg })
}

fn sup_l2_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| lp_norm(&x.u.sub(&y.u)?, 2.0))
        .try_fold(0.0, |acc, v| v.map(|v| f64::max(acc, v)))
}

fn sup_l2(a: &Trajectory) -> Result<f64> {
    a.snapshots.iter().map(|x| lp_norm(&x.u, 2.0)).try_fold(0.0, |acc, v| v.map(|v| f64::max(acc, v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinRunReport {
    pub epsilons: Vec<f64>,
    pub kernel_a: KernelKind,
    pub kernel_b: KernelKind,
    /// `sup_t ||u_eps - u~_eps||_{L^2}`.
    pub difference_norms: Vec<f64>,
    /// `sup_t ||u_eps||_1` of the first family.
    pub solution_norms: Vec<f64>,
    /// `sup_t ||u_eps||_{L^2}` of the first family.
    pub solution_l2_norms: Vec<f64>,
    /// `None` when every difference is exactly zero.
    pub difference_slope: Option<f64>,
    pub solution_slope: f64,
    pub solution_l2_slope: f64,
    pub margin: f64,
    pub negligible: bool,
}

impl TwinRunReport {
    pub fn slope_gap(&self) -> Option<f64> {
        self.difference_slope.map(|d| d - self.solution_slope)
    }
}

/// Runs the ladder under two mollifier families and compares the nets.
pub fn negligibility_twin(
    template: &ProblemTemplate,
    ladder: &[f64],
    kernel_a: KernelKind,
    kernel_b: KernelKind,
    cfg: &SolverConfig,
    margin: f64,
) -> Result<TwinRunReport> {
    if !template.has_unit_g() {
        return Err(FracError::ScopeViolation("twin runs require g = 1".into()));
    }
    validate_ladder(ladder, &template.grid)?;
    let s = template.order.value();
    let rows = ladder
        .par_iter()
        .map(|&eps| {
            let pa = template.instantiate(&MollifierSpec::new(kernel_a, eps)?)?;
            let pb = template.instantiate(&MollifierSpec::new(kernel_b, eps)?)?;
            let shared = common_config(&[&pa, &pb], cfg)?;
            let ta = solve_trajectory(&pa, &shared)?;
            let tb = solve_trajectory(&pb, &shared)?;
            Ok((sup_l2_difference(&ta, &tb)?, sup_norm(&ta, s, NormSelector::Norm1)?, sup_l2(&ta)?))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let difference_norms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let solution_norms: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let solution_l2_norms: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let pairs = |v: &[f64]| ladder.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let difference_slope = if difference_norms.iter().all(|d| *d > 0.0) {
        Some(fit_power_law(&pairs(&difference_norms))?.slope)
    } else {
        None
    };
    let solution_slope = fit_power_law(&pairs(&solution_norms))?.slope;
    let solution_l2_slope = fit_power_law(&pairs(&solution_l2_norms))?.slope;
    let below_floor = difference_norms.iter().all(|d| *d < TWIN_ABSOLUTE_FLOOR);
    let negligible = below_floor || difference_slope.is_some_and(|d| d - solution_slope >= margin);
    Ok(TwinRunReport {
        epsilons: ladder.to_vec(),
        kernel_a,
        kernel_b,
        difference_norms,
        solution_norms,
        solution_l2_norms,
        difference_slope,
        solution_slope,
        solution_l2_slope,
        margin,
        negligible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    AnalyticModal,
    FineEpsRefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub epsilons: Vec<f64>,
    pub reference_kind: ReferenceKind,
    /// `sup_t ||u_eps - u_ref||_{L^2}`.
    pub errors: Vec<f64>,
    /// `errors / sup_t ||u_ref||_{L^2}`.
    pub relative_errors: Vec<f64>,
    pub monotone: bool,
    pub final_relative_error: f64,
}

/// Compares the regularized nets with the classical solution.
pub fn coherence_run(
    template: &ProblemTemplate,
    kernel: KernelKind,
    ladder: &[f64],
    reference_kind: ReferenceKind,
    cfg: &SolverConfig,
) -> Result<CoherenceReport> {
    if !template.has_unit_g() {
        return Err(FracError::ScopeViolation("coherence runs require g = 1".into()));
    }
    validate_ladder(ladder, &template.grid)?;
    let classical = template.instantiate_unregularized()?;
    let nets = ladder
        .iter()
        .map(|&eps| template.instantiate(&MollifierSpec::new(kernel, eps)?))
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<&ProblemSpec> = nets.iter().collect();
    all.push(&classical);
    let shared = common_config(&all, cfg)?;

    let reference = match reference_kind {
        ReferenceKind::AnalyticModal => {
            let mut traj = solve_trajectory(&classical, &shared)?;
            for snap in &mut traj.snapshots {
                let (u, ut) = modal_solution(&classical, snap.t)?;
                snap.u = u;
                snap.ut = ut;
            }
            traj
        }
        ReferenceKind::FineEpsRefined => solve_trajectory(&classical, &shared)?,
    };
    let scale = sup_l2(&reference)?;
    let errors = nets
        .par_iter()
        .map(|p| sup_l2_difference(&solve_trajectory(p, &shared)?, &reference))
        .collect::<Result<Vec<f64>>>()?;
    let relative_errors: Vec<f64> =
        errors.iter().map(|e| if *e == 0.0 { 0.0 } else { e / scale.max(f64::MIN_POSITIVE) }).collect();
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    let final_relative_error = *relative_errors.last().expect("ladder is non-empty");
    Ok(CoherenceReport { epsilons: ladder.to_vec(), reference_kind, errors, relative_errors, monotone, final_relative_error })
}

/// Fitted slope of `||psi_eps||_{L^2} + ||(-Laplacian)^{s/2} psi_eps||_{L^2}`
/// for a unit delta at `center`: the growth an `||.||_1` sweep with delta
/// data should reproduce.
pub fn delta_data_oracle(grid: &Grid, kernel: KernelKind, s: f64, ladder: &[f64], center: &[f64]) -> Result<PowerLawFit> {
    let datum = SingularDatum::new(crate::mollify::SingularKind::Delta, center.to_vec(), 1.0);
    let points = ladder
        .iter()
        .map(|&eps| {
            let net = singular_net(&datum, &MollifierSpec::new(kernel, eps)?, grid)?;
            let n = composite_norms(&net, &Field::zeros(*grid), s)?;
            Ok((eps, n.l2_u + n.half_u))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollify::SingularKind;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 128, 1.0).unwrap()
    }

    #[test]
    fn default_ladder_clips() {
        assert_eq!(default_ladder(&Grid::new(1, 256, 1.0).unwrap()).len(), 5);
        assert_eq!(default_ladder(&Grid::new(1, 128, 1.0).unwrap()), vec![0.25, 0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn ladder_validation_names_entry() {
        let g = grid();
        let err = validate_ladder(&[0.25, 0.125, 0.0625, 0.01], &g).unwrap_err();
        assert!(matches!(&err, FracError::InvalidLadder(m) if m.contains("entry 3")));
        assert!(validate_ladder(&[0.25, 0.125, 0.0625], &g).is_err());
        assert!(validate_ladder(&[0.25, 0.25, 0.125, 0.0625], &g).is_err());
    }

    #[test]
    fn instantiate_realizes_singular_slots() {
        let g = grid();
        let datum = SingularDatum::new(SingularKind::Delta, vec![0.5], 1.0);
        let t = ProblemTemplate::free(g, 0.5, 0.1, Slot::Singular { datum: datum.clone(), base: 0.0 }).unwrap();
        let spec = MollifierSpec::new(KernelKind::CompactBump, 0.125).unwrap();
        let p = t.instantiate(&spec).unwrap();
        assert!((p.u0.integral() - 1.0).abs() < 1e-12);
        match &p.provenance {
            Provenance::Regularized { mollifier, slots } => {
                assert_eq!(mollifier, &spec);
                assert_eq!(slots, &vec![("u0".to_string(), datum)]);
            }
            Provenance::Smooth => panic!("expected regularized provenance"),
        }
        assert!(matches!(t.instantiate_unregularized(), Err(FracError::MissingReference(_))));
    }

    #[test]
    fn smooth_sweep_is_flat() {
        let g = Grid::new(1, 1024, 2.0 * PI).unwrap();
        let u0 = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let t = ProblemTemplate::free(g, 1.0, 0.2, Slot::Tabulated(u0)).unwrap();
        let r = moderateness_sweep(&t, KernelKind::CompactBump, &default_ladder(&g), NormSelector::Norm1, &SolverConfig::default())
            .unwrap();
        assert!(r.fitted_slope.abs() < 0.05, "slope {}", r.fitted_slope);
        let again = moderateness_sweep(&t, KernelKind::CompactBump, &default_ladder(&g), NormSelector::Norm1, &SolverConfig::default())
            .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn identical_twins_are_exactly_zero() {
        let g = grid();
        let datum = SingularDatum::new(SingularKind::Delta, vec![0.5], 1.0);
        let t = ProblemTemplate::free(g, 0.5, 0.1, Slot::Singular { datum, base: 0.0 }).unwrap();
        let r = negligibility_twin(&t, &default_ladder(&g), KernelKind::Gaussian, KernelKind::Gaussian, &SolverConfig::default(), 1.0)
            .unwrap();
        assert!(r.difference_norms.iter().all(|d| *d == 0.0));
        assert!(r.negligible);
        assert!(r.difference_slope.is_none());
    }

    #[test]
    fn twin_requires_unit_g() {
        let g = grid();
        let mut t = ProblemTemplate::free(g, 0.5, 0.1, Slot::Constant(0.0)).unwrap();
        t.g = Slot::Constant(2.0);
        let r = negligibility_twin(&t, &default_ladder(&g), KernelKind::Gaussian, KernelKind::CompactBump, &SolverConfig::default(), 1.0);
        assert!(matches!(r, Err(FracError::ScopeViolation(_))));
        let r = coherence_run(&t, KernelKind::Gaussian, &default_ladder(&g), ReferenceKind::AnalyticModal, &SolverConfig::default());
        assert!(matches!(r, Err(FracError::ScopeViolation(_))));
    }

    #[test]
    fn twin_symmetry() {
        let g = grid();
        let datum = SingularDatum::new(SingularKind::Delta, vec![0.5], 1.0);
        let t = ProblemTemplate::free(g, 0.5, 0.1, Slot::Singular { datum, base: 0.0 }).unwrap();
        let l = default_ladder(&g);
        let cfg = SolverConfig::default();
        let ab = negligibility_twin(&t, &l, KernelKind::CompactBump, KernelKind::Gaussian, &cfg, 1.0).unwrap();
        let ba = negligibility_twin(&t, &l, KernelKind::Gaussian, KernelKind::CompactBump, &cfg, 1.0).unwrap();
        assert_eq!(ab.difference_norms, ba.difference_norms);
    }

    #[test]
    fn zero_problem_coherence_is_zero() {
        let g = grid();
        let t = ProblemTemplate::free(g, 0.5, 0.1, Slot::Constant(0.0)).unwrap();
        let r = coherence_run(&t, KernelKind::CompactBump, &default_ladder(&g), ReferenceKind::AnalyticModal, &SolverConfig::default())
            .unwrap();
        assert!(r.errors.iter().all(|e| *e == 0.0));
        assert!(r.monotone);
    }

    #[test]
    fn smooth_m_coherence_against_classical_solve() {
        let g = grid();
        let u0 = Field::from_fn(g, |x| (2.0 * PI * x[0]).cos()).unwrap();
        let m = Field::from_fn(g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin()).unwrap();
        let mut t = ProblemTemplate::free(g, 1.0, 0.3, Slot::Tabulated(u0)).unwrap();
        t.m = Slot::Tabulated(m);
        let r = coherence_run(&t, KernelKind::CompactBump, &default_ladder(&g), ReferenceKind::FineEpsRefined, &SolverConfig::default())
            .unwrap();
        assert!(r.monotone, "{:?}", r.errors);
        assert!(r.final_relative_error < 1e-2);
        assert!(r.errors[r.errors.len() - 1] < r.errors[0]);
    }
}

//! Time integration of `u_tt + D_g^s u + m u + b u_t = f` on the torus and
//! the energy diagnostics attached to it.

mod integrator;
pub mod modal;

pub(crate) use integrator::{integrate, Operator, StepPlan};

use crate::error::{FracError, Result};
use crate::mollify::{MollifierSpec, SingularDatum};
use crate::spectral::{composite_norms, lp_norm, CompositeNorms, Field, FracOrder, Grid};
use serde::{Deserialize, Serialize};

/// Multiple of the initial size at which a run is declared unstable.
pub const BLOWUP_FACTOR: f64 = 1e12;

/// RK4 stability interval on the imaginary axis, rounded down.
pub const RK4_STABILITY: f64 = 2.8;

/// Scalar time factor of a separable source `a(t) F(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    Constant,
    /// `a(t) = cos(frequency t + phase)`
    Harmonic { frequency: f64, phase: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Harmonic { frequency, phase } => (frequency * t + phase).cos(),
        }
    }

    /// `sup |a(t)|` over `[0, horizon]`.
    pub fn sup_abs(&self, horizon: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Harmonic { frequency, phase } => {
                let w = frequency.abs();
                let ph = if frequency < 0.0 { -phase } else { phase };
                // a crest of |cos| sits at w t + ph = j pi
                let first = (ph / std::f64::consts::PI).ceil();
                let last = ((w * horizon + ph) / std::f64::consts::PI).floor();
                if w > 0.0 && first <= last {
                    1.0
                } else {
                    self.eval(0.0).abs().max(self.eval(horizon).abs())
                }
            }
        }
    }
}

/// Right-hand side `f(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    Zero,
    Separable { profile: TimeProfile, shape: Field },
    /// Piecewise-linear in time through strictly increasing nodes.
    Sampled(Vec<(f64, Field)>),
}

impl SourceTerm {
    pub fn is_zero(&self) -> bool {
        match self {
            SourceTerm::Zero => true,
            SourceTerm::Separable { shape, .. } => shape.max_abs() == 0.0,
            SourceTerm::Sampled(nodes) => nodes.iter().all(|(_, f)| f.max_abs() == 0.0),
        }
    }

    pub fn scale(&self, alpha: f64) -> SourceTerm {
        match self {
            SourceTerm::Zero => SourceTerm::Zero,
            SourceTerm::Separable { profile, shape } => {
                SourceTerm::Separable { profile: *profile, shape: shape.scale(alpha) }
            }
            SourceTerm::Sampled(nodes) => {
                SourceTerm::Sampled(nodes.iter().map(|(t, f)| (*t, f.scale(alpha))).collect())
            }
        }
    }

    /// `out += f(t)`.
    pub(crate) fn accumulate(&self, t: f64, out: &mut [f64]) {
        match self {
            SourceTerm::Zero => {}
            SourceTerm::Separable { profile, shape } => {
                let a = profile.eval(t);
                for (o, v) in out.iter_mut().zip(shape.samples()) {
                    *o += a * v;
                }
            }
            SourceTerm::Sampled(nodes) => {
                let j = nodes.partition_point(|(tk, _)| *tk <= t).clamp(1, nodes.len() - 1);
                let (t0, f0) = &nodes[j - 1];
                let (t1, f1) = &nodes[j];
                let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                for ((o, a), b) in out.iter_mut().zip(f0.samples()).zip(f1.samples()) {
                    *o += (1.0 - w) * a + w * b;
                }
            }
        }
    }

    pub fn eval(&self, grid: &Grid, t: f64) -> Field {
        let mut out = vec![0.0; grid.len()];
        self.accumulate(t, &mut out);
        Field::from_raw(*grid, out)
    }

    /// `sup_t ||f(t)||_{L^2}` over `[0, horizon]`.
    pub fn sup_l2(&self, horizon: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Separable { profile, shape } => {
                profile.sup_abs(horizon) * lp_norm(shape, 2.0).unwrap_or(0.0)
            }
            // a norm is convex, so the sup over each segment sits at a node
            SourceTerm::Sampled(nodes) => nodes
                .iter()
                .map(|(_, f)| lp_norm(f, 2.0).unwrap_or(0.0))
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self, grid: &Grid, horizon: f64) -> Result<()> {
        match self {
            SourceTerm::Zero => Ok(()),
            SourceTerm::Separable { profile, shape } => {
                grid.ensure_same(shape.grid())?;
                if let TimeProfile::Harmonic { frequency, phase } = profile {
                    if !frequency.is_finite() || !phase.is_finite() {
                        return Err(FracError::InvalidSource("non-finite harmonic profile".into()));
                    }
                }
                Ok(())
            }
            SourceTerm::Sampled(nodes) => {
                if nodes.len() < 2 {
                    return Err(FracError::InvalidSource("need at least two time nodes".into()));
                }
                if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(FracError::InvalidSource("time nodes must increase strictly".into()));
                }
                if nodes[0].0 > 0.0 || nodes[nodes.len() - 1].0 < horizon {
                    return Err(FracError::InvalidSource(format!(
                        "time nodes must cover [0, {horizon}]"
                    )));
                }
                nodes.iter().try_for_each(|(_, f)| grid.ensure_same(f.grid()))
            }
        }
    }
}

/// Where the coefficients of a problem came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Smooth,
    /// Slot name (`g`, `m`, `b`, `u0`, `u1`, `f`) and the datum regularized into it.
    Regularized { mollifier: MollifierSpec, slots: Vec<(String, SingularDatum)> },
}

/// A fully specified (regularized) Cauchy problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub order: FracOrder,
    pub horizon: f64,
    pub g: Field,
    pub m: Field,
    pub b: Field,
    pub forcing: SourceTerm,
    pub u0: Field,
    pub u1: Field,
    pub provenance: Provenance,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        order: FracOrder,
        horizon: f64,
        g: Field,
        m: Field,
        b: Field,
        forcing: SourceTerm,
        u0: Field,
        u1: Field,
    ) -> Result<Self> {
        let p = ProblemSpec { order, horizon, g, m, b, forcing, u0, u1, provenance: Provenance::Smooth };
        p.validate()?;
        Ok(p)
    }

    /// Constant coefficients `g, m, b`, zero forcing.
    pub fn constant(s: f64, horizon: f64, g: f64, m: f64, b: f64, u0: Field, u1: Field) -> Result<Self> {
        let grid = *u0.grid();
        ProblemSpec::new(
            FracOrder::new(s)?,
            horizon,
            Field::constant(grid, g)?,
            Field::constant(grid, m)?,
            Field::constant(grid, b)?,
            SourceTerm::Zero,
            u0,
            u1,
        )
    }

    pub fn with_forcing(mut self, forcing: SourceTerm) -> Result<Self> {
        self.forcing = forcing;
        self.validate()?;
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    pub fn s(&self) -> f64 {
        self.order.value()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid();
        for f in [&self.g, &self.m, &self.b, &self.u1] {
            grid.ensure_same(f.grid())?;
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(FracError::InvalidProblem(format!("horizon {} must be positive", self.horizon)));
        }
        if self.g.min() <= 0.0 {
            return Err(FracError::PositivityViolation { name: "g", min: self.g.min() });
        }
        if self.m.min() < 0.0 {
            return Err(FracError::PositivityViolation { name: "m", min: self.m.min() });
        }
        if self.b.min() < 0.0 {
            return Err(FracError::PositivityViolation { name: "b", min: self.b.min() });
        }
        self.forcing.validate(grid, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl_fraction: f64,
    pub dt_override: Option<f64>,
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { cfl_fraction: 0.5, dt_override: None, snapshot_stride: 1 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return Err(FracError::InvalidSolverConfig(format!(
                "cfl_fraction {} not in (0, 1]",
                self.cfl_fraction
            )));
        }
        if let Some(dt) = self.dt_override {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(FracError::InvalidSolverConfig(format!("dt_override {dt} must be positive")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(FracError::InvalidSolverConfig("snapshot_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// `2.8 / omega_max` with `omega_max^2 = g_max k_max^{2s} + m_max`.
pub fn stable_dt(grid: &Grid, s: f64, g_max: f64, m_max: f64) -> f64 {
    let k = grid.max_wavenumber();
    RK4_STABILITY / (g_max * k.powf(2.0 * s) + m_max).sqrt()
}

/// Uniform step `dt = T / n_steps` and the step count for `p` under `cfg`.
pub fn time_step(p: &ProblemSpec, cfg: &SolverConfig) -> Result<(f64, usize)> {
    cfg.validate()?;
    let cap = cfg.cfl_fraction * stable_dt(p.grid(), p.s(), p.g.max(), p.m.max());
    let target = match cfg.dt_override {
        Some(dt) if dt > cap * (1.0 + 1e-12) => {
            return Err(FracError::InvalidSolverConfig(format!(
                "dt_override {dt} exceeds the stability cap {cap}"
            )))
        }
        Some(dt) => dt,
        None => cap,
    };
    let n_steps = ((p.horizon / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((p.horizon / n_steps as f64, n_steps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub t: f64,
    /// Global step index of this snapshot.
    pub step: usize,
    pub u: Field,
    pub ut: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub n_steps: usize,
    pub snapshots: Vec<StateSnapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &StateSnapshot {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn composite_norms(&self, s: f64) -> Result<Vec<CompositeNorms>> {
        self.snapshots.iter().map(|x| composite_norms(&x.u, &x.ut, s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// One entry per snapshot interval; empty when the problem is forced.
    pub dissipation_residual: Vec<f64>,
    /// Largest increase of `E` between snapshots; only defined for `f = 0`.
    pub monotone_violation: Option<f64>,
}

/// `du = u_t`, `dut = f(t) - D_g^s u - m u - b u_t`.
pub fn rhs(state: &StateSnapshot, p: &ProblemSpec) -> Result<(Field, Field)> {
    p.grid().ensure_same(state.u.grid())?;
    p.grid().ensure_same(state.ut.grid())?;
    let op = Operator::new(p)?;
    let mut dut = vec![0.0; p.grid().len()];
    op.acceleration(state.u.samples(), state.ut.samples(), &mut dut)?;
    p.forcing.accumulate(state.t, &mut dut);
    Ok((state.ut.clone(), Field::checked(*p.grid(), dut)?))
}

/// Integrates `p` with classical RK4 from `(0, u0, u1)` to `t = T`.
pub fn solve(p: &ProblemSpec, cfg: &SolverConfig) -> Result<(Trajectory, EnergyReport)> {
    let traj = solve_trajectory(p, cfg)?;
    let report = energy_report(&traj, p)?;
    Ok((traj, report))
}

/// `solve` without the energy diagnostics.
pub fn solve_trajectory(p: &ProblemSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    p.validate()?;
    let (dt, n_steps) = time_step(p, cfg)?;
    let op = Operator::new(p)?;
    let plan = StepPlan { dt, n_steps, stride: cfg.snapshot_stride };
    let grid = *p.grid();
    let reference = blowup_reference(p)?;
    let mut snapshots = Vec::with_capacity(n_steps / cfg.snapshot_stride + 2);
    integrate(
        &op,
        &p.forcing,
        p.u0.samples().to_vec(),
        p.u1.samples().to_vec(),
        &plan,
        0,
        reference,
        |step, u, ut| {
            snapshots.push(StateSnapshot {
                t: plan.time(step),
                step,
                u: Field::checked(grid, u.to_vec())?,
                ut: Field::checked(grid, ut.to_vec())?,
            });
            Ok(())
        },
    )?;
    Ok(Trajectory { dt, n_steps, snapshots })
}

/// Size the blow-up guard is measured against: initial `||.||_1` plus
/// the forcing scale over the horizon.
pub(crate) fn blowup_reference(p: &ProblemSpec) -> Result<f64> {
    let n0 = composite_norms(&p.u0, &p.u1, p.s())?.norm1;
    Ok(n0 + p.horizon * p.forcing.sup_l2(p.horizon))
}

/// `E = ||u_t||^2 + ||g^{1/2} (-Laplacian)^{s/2} u||^2 + ||m^{1/2} u||^2`.
pub fn energy(state: &StateSnapshot, p: &ProblemSpec) -> Result<f64> {
    p.grid().ensure_same(state.u.grid())?;
    p.grid().ensure_same(state.ut.grid())?;
    Operator::new(p)?.energy(state.u.samples(), state.ut.samples())
}

/// Discrete form of `dE/dt = -2 ||b^{1/2} u_t||^2` between consecutive
/// snapshots: `(E_{k+1} - E_k) / dt + 2 ||b^{1/2} u_t(t_{k+1/2})||^2`, with
/// the midpoint velocity taken as the mean of the endpoint velocities.
pub fn dissipation_residual(traj: &Trajectory, p: &ProblemSpec) -> Result<Vec<f64>> {
    if !p.forcing.is_zero() {
        return Err(FracError::ForcingPresent);
    }
    let op = Operator::new(p)?;
    let energies = traj
        .snapshots
        .iter()
        .map(|x| op.energy(x.u.samples(), x.ut.samples()))
        .collect::<Result<Vec<_>>>()?;
    Ok(residual_from(&op, traj, &energies, p))
}

fn residual_from(op: &Operator, traj: &Trajectory, energies: &[f64], p: &ProblemSpec) -> Vec<f64> {
    let w = p.grid().cell_volume();
    traj.snapshots
        .windows(2)
        .zip(energies.windows(2))
        .map(|(pair, e)| {
            let h = pair[1].t - pair[0].t;
            let damping: f64 = pair[0]
                .ut
                .samples()
                .iter()
                .zip(pair[1].ut.samples())
                .zip(op.damping())
                .map(|((a, c), bv)| {
                    let mid = 0.5 * (a + c);
                    bv * mid * mid
                })
                .sum::<f64>()
                * w;
            (e[1] - e[0]) / h + 2.0 * damping
        })
        .collect()
}

/// Energy at every snapshot plus the residual and monotonicity diagnostics.
pub fn energy_report(traj: &Trajectory, p: &ProblemSpec) -> Result<EnergyReport> {
    let op = Operator::new(p)?;
    let energies = traj
        .snapshots
        .iter()
        .map(|x| op.energy(x.u.samples(), x.ut.samples()))
        .collect::<Result<Vec<_>>>()?;
    let unforced = p.forcing.is_zero();
    let (dissipation_residual, monotone_violation) = if unforced {
        let jump = energies.windows(2).map(|e| e[1] - e[0]).fold(0.0, f64::max);
        (residual_from(&op, traj, &energies, p), Some(jump))
    } else {
        (Vec::new(), None)
    };
    Ok(EnergyReport { times: traj.times(), energy: energies, dissipation_residual, monotone_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::band_limited;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 64, 2.0 * PI).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let g = grid();
        assert!((stable_dt(&g, 1.0, 1.0, 0.0) - 2.8 / 32.0).abs() < 1e-15);
        let big = stable_dt(&g, 1.0, 1.0, 1e12);
        assert!((big * 1e6 / 2.8 - 1.0).abs() < 1e-6);
        let fine = Grid::new(1, 128, 2.0 * PI).unwrap();
        assert!((stable_dt(&g, 1.0, 1.0, 0.0) / stable_dt(&fine, 1.0, 1.0, 0.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn time_step_respects_cap() {
        let g = grid();
        let u0 = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let p = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 0.0, u0, Field::zeros(g)).unwrap();
        let cfg = SolverConfig::default();
        let (dt, n) = time_step(&p, &cfg).unwrap();
        assert!(dt <= 0.5 * 2.8 / 32.0);
        assert!((dt * n as f64 - 1.0).abs() < 1e-14);
        let bad = SolverConfig { dt_override: Some(0.1), ..cfg };
        assert!(matches!(time_step(&p, &bad), Err(FracError::InvalidSolverConfig(_))));
        let ok = SolverConfig { dt_override: Some(0.01), ..cfg };
        assert_eq!(time_step(&p, &ok).unwrap().1, 100);
        let zero_stride = SolverConfig { snapshot_stride: 0, ..cfg };
        assert!(time_step(&p, &zero_stride).is_err());
    }

    #[test]
    fn rhs_examples() {
        let g = grid();
        let z = Field::zeros(g);
        let p = ProblemSpec::constant(0.7, 1.0, 1.0, 0.0, 0.0, z.clone(), z.clone()).unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u: z.clone(), ut: z.clone() };
        let (du, dut) = rhs(&st, &p).unwrap();
        assert_eq!(du.max_abs() + dut.max_abs(), 0.0);

        let u = Field::from_fn(g, |x| (3.0 * x[0]).sin()).unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u: u.clone(), ut: z.clone() };
        let (_, dut) = rhs(&st, &p).unwrap();
        let lam = 3f64.powf(1.4);
        for (a, b) in dut.samples().iter().zip(u.samples()) {
            assert!((a + lam * b).abs() < 1e-12 * lam);
        }
    }

    #[test]
    fn rhs_residual_random_state() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = band_limited(g, 10, &mut rng, false).unwrap();
        let ut = band_limited(g, 10, &mut rng, false).unwrap();
        let gc = band_limited(g, 3, &mut rng, false).unwrap().map(|v| 1.5 + 0.2 * v.sin()).unwrap();
        let m = band_limited(g, 3, &mut rng, false).unwrap().map(|v| v * v).unwrap();
        let b = band_limited(g, 3, &mut rng, false).unwrap().map(|v| v.abs()).unwrap();
        let f = band_limited(g, 4, &mut rng, false).unwrap();
        let p = ProblemSpec::new(
            FracOrder::new(0.8).unwrap(),
            2.0,
            gc.clone(),
            m.clone(),
            b.clone(),
            SourceTerm::Separable { profile: TimeProfile::Harmonic { frequency: 2.0, phase: 0.3 }, shape: f.clone() },
            u.clone(),
            ut.clone(),
        )
        .unwrap();
        let t = 0.4;
        let st = StateSnapshot { t, step: 0, u: u.clone(), ut: ut.clone() };
        let (_, dut) = rhs(&st, &p).unwrap();
        let dg = crate::spectral::apply_dg(&u, &gc, 0.8).unwrap();
        let a = (2.0 * t + 0.3).cos();
        let scale = dut.max_abs() + dg.max_abs();
        for i in 0..g.len() {
            let r = dut.samples()[i] + dg.samples()[i] + m.samples()[i] * u.samples()[i]
                + b.samples()[i] * ut.samples()[i]
                - a * f.samples()[i];
            assert!(r.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn energy_examples() {
        let g = grid();
        let z = Field::zeros(g);
        let p = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 0.0, z.clone(), z.clone()).unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u: z.clone(), ut: z.clone() };
        assert_eq!(energy(&st, &p).unwrap(), 0.0);

        let u = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u, ut: z.clone() };
        assert!((energy(&st, &p).unwrap() - PI).abs() < 1e-12);

        let gv = Field::from_fn(g, |x| 2.0 + x[0].cos()).unwrap();
        let p = ProblemSpec::new(
            FracOrder::new(0.6).unwrap(),
            1.0,
            gv,
            Field::constant(g, 1.0).unwrap(),
            z.clone(),
            SourceTerm::Zero,
            z.clone(),
            z.clone(),
        )
        .unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u: Field::constant(g, 3.0).unwrap(), ut: z };
        assert!((energy(&st, &p).unwrap() - 9.0 * 2.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let g = grid();
        let z = Field::zeros(g);
        let p = ProblemSpec::constant(0.5, 1.0, 1.0, 0.3, 0.2, z.clone(), z).unwrap();
        let (traj, report) = solve(&p, &SolverConfig::default()).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.u.max_abs() == 0.0 && s.ut.max_abs() == 0.0));
        assert!(report.dissipation_residual.iter().all(|r| *r == 0.0));
        assert_eq!(traj.snapshots.len(), traj.n_steps + 1);
    }

    #[test]
    fn single_mode_undamped() {
        let g = grid();
        let k = 2.0;
        let mu = 0.5;
        let s = 0.75;
        let u0 = Field::from_fn(g, |x| (k * x[0]).sin()).unwrap();
        let p = ProblemSpec::constant(s, 3.0, 1.0, mu, 0.0, u0.clone(), Field::zeros(g)).unwrap();
        let cfg = SolverConfig { snapshot_stride: 7, ..Default::default() };
        let (traj, _) = solve(&p, &cfg).unwrap();
        assert_eq!(traj.snapshots[0].u, u0);
        assert!((traj.last().t - 3.0).abs() < 1e-14);
        assert!(traj.snapshots.iter().all(|x| x.step % 7 == 0 || x.step == traj.n_steps));
        let w = (k.powf(2.0 * s) + mu).sqrt();
        let last = traj.last();
        let exact = u0.scale((w * last.t).cos());
        let err = lp_norm(&last.u.sub(&exact).unwrap(), 2.0).unwrap() / lp_norm(&u0, 2.0).unwrap();
        // RK4 phase error at this coarse step is a few 1e-5
        assert!(err < 1e-4, "err {err}");
    }

    #[test]
    fn forcing_must_be_absent_for_residual() {
        let g = grid();
        let z = Field::zeros(g);
        let p = ProblemSpec::constant(0.5, 0.5, 1.0, 0.0, 0.0, z.clone(), z.clone())
            .unwrap()
            .with_forcing(SourceTerm::Separable { profile: TimeProfile::Constant, shape: Field::constant(g, 1.0).unwrap() })
            .unwrap();
        let (traj, report) = solve(&p, &SolverConfig::default()).unwrap();
        assert!(report.dissipation_residual.is_empty());
        assert!(report.monotone_violation.is_none());
        assert!(matches!(dissipation_residual(&traj, &p), Err(FracError::ForcingPresent)));
        // u = t^2 / 2 under a unit constant force on the zero mode
        let last = traj.last();
        assert!((last.u.samples()[0] - 0.125).abs() < 1e-13);
    }

    #[test]
    fn invalid_problems_rejected() {
        let g = grid();
        let z = Field::zeros(g);
        assert!(matches!(
            ProblemSpec::constant(0.5, 1.0, 0.0, 0.0, 0.0, z.clone(), z.clone()),
            Err(FracError::PositivityViolation { name: "g", .. })
        ));
        assert!(matches!(
            ProblemSpec::constant(0.5, 1.0, 1.0, -1.0, 0.0, z.clone(), z.clone()),
            Err(FracError::PositivityViolation { name: "m", .. })
        ));
        assert!(ProblemSpec::constant(0.5, 0.0, 1.0, 0.0, 0.0, z.clone(), z.clone()).is_err());
        let other = Field::zeros(Grid::new(1, 32, 2.0 * PI).unwrap());
        assert!(matches!(
            ProblemSpec::constant(0.5, 1.0, 1.0, 0.0, 0.0, z.clone(), other),
            Err(FracError::GridMismatch { .. })
        ));
        let p = ProblemSpec::constant(0.5, 1.0, 1.0, 0.0, 0.0, z.clone(), z.clone()).unwrap();
        let sampled = SourceTerm::Sampled(vec![(0.0, z.clone()), (0.5, z.clone())]);
        assert!(matches!(p.clone().with_forcing(sampled), Err(FracError::InvalidSource(_))));
        let backwards = SourceTerm::Sampled(vec![(0.0, z.clone()), (2.0, z.clone()), (1.0, z.clone())]);
        assert!(p.with_forcing(backwards).is_err());
    }

    #[test]
    fn sampled_source_interpolates() {
        let g = grid();
        let a = Field::constant(g, 1.0).unwrap();
        let b = Field::constant(g, 3.0).unwrap();
        let src = SourceTerm::Sampled(vec![(0.0, a), (1.0, b)]);
        assert!((src.eval(&g, 0.25).samples()[5] - 1.5).abs() < 1e-15);
        assert!((src.eval(&g, 1.0).samples()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_sup() {
        let h = TimeProfile::Harmonic { frequency: 1.0, phase: 0.5 };
        assert_eq!(h.sup_abs(10.0), 1.0);
        assert!((h.sup_abs(0.1) - 0.5f64.cos()).abs() < 1e-15);
        assert!((h.sup_abs(2.0) - 0.5f64.cos()).abs() < 1e-15);
        assert!((h.sup_abs(2.5) - 3f64.cos().abs()).abs() < 1e-15);
    }

    #[test]
    fn variable_g_matches_operator() {
        // a run with g(x) reproduces one explicit Euler step against apply_dg
        let g = grid();
        let gv = Field::from_fn(g, |x| 1.0 + 0.5 * x[0].sin()).unwrap();
        let u0 = Field::from_fn(g, |x| (2.0 * x[0]).cos()).unwrap();
        let p = ProblemSpec::new(
            FracOrder::new(1.0).unwrap(),
            1.0,
            gv.clone(),
            Field::zeros(g),
            Field::zeros(g),
            SourceTerm::Zero,
            u0.clone(),
            Field::zeros(g),
        )
        .unwrap();
        let st = StateSnapshot { t: 0.0, step: 0, u: u0.clone(), ut: Field::zeros(g) };
        let (_, dut) = rhs(&st, &p).unwrap();
        let expect = crate::spectral::apply_dg(&u0, &gv, 1.0).unwrap();
        for (a, b) in dut.samples().iter().zip(expect.samples()) {
            assert!((a + b).abs() < 1e-12);
        }
    }
}

use super::{ProblemSpec, SourceTerm, BLOWUP_FACTOR};
use crate::error::{FracError, Result};
use crate::spectral::{symbol_power, Grid, Multiplier};

/// `D_g^s` split by whether `g` is constant.
enum Stiffness {
    /// `g |k|^{2s}` as one multiplier.
    Uniform(Multiplier),
    Variable { half: Multiplier, g: Vec<f64> },
}

/// Spatial part of the first-order system on raw sample buffers.
pub(crate) struct Operator {
    grid: Grid,
    stiffness: Stiffness,
    half: Multiplier,
    g: Vec<f64>,
    m: Vec<f64>,
    b: Vec<f64>,
}

impl Operator {
    pub(crate) fn new(p: &ProblemSpec) -> Result<Self> {
        let grid = *p.grid();
        let s = p.s();
        let min = p.g.min();
        if min <= 0.0 {
            return Err(FracError::PositivityViolation { name: "g", min });
        }
        let half = Multiplier::power(grid, s);
        let stiffness = match p.g.constant_value() {
            Some(gc) => Stiffness::Uniform(Multiplier::new(grid, |k| gc * symbol_power(k, 2.0 * s))),
            None => Stiffness::Variable { half: half.clone(), g: p.g.samples().to_vec() },
        };
        Ok(Operator {
            grid,
            stiffness,
            half,
            g: p.g.samples().to_vec(),
            m: p.m.samples().to_vec(),
            b: p.b.samples().to_vec(),
        })
    }

    pub(crate) fn damping(&self) -> &[f64] {
        &self.b
    }

    fn stiffness(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.stiffness {
            Stiffness::Uniform(full) => full.apply_raw(u),
            Stiffness::Variable { half, g } => {
                let mut inner = half.apply_raw(u)?;
                for (v, gv) in inner.iter_mut().zip(g) {
                    *v *= gv;
                }
                half.apply_raw(&inner)
            }
        }
    }

    /// `out = -D_g^s u - m u - b u_t`.
    pub(crate) fn acceleration(&self, u: &[f64], ut: &[f64], out: &mut [f64]) -> Result<()> {
        let dg = self.stiffness(u)?;
        for i in 0..out.len() {
            out[i] = -dg[i] - self.m[i] * u[i] - self.b[i] * ut[i];
        }
        Ok(())
    }

    pub(crate) fn energy(&self, u: &[f64], ut: &[f64]) -> Result<f64> {
        let w = self.grid.cell_volume();
        let hu = self.half.apply_raw(u)?;
        let mut sum = 0.0;
        for i in 0..u.len() {
            sum += ut[i] * ut[i] + self.g[i] * hu[i] * hu[i] + self.m[i] * u[i] * u[i];
        }
        Ok(sum * w)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepPlan {
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
}

impl StepPlan {
    pub(crate) fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub(crate) fn is_snapshot(&self, step: usize) -> bool {
        step.is_multiple_of(self.stride) || step == self.n_steps
    }
}

fn axpy(out: &mut [f64], x: &[f64], a: f64, y: &[f64]) {
    for i in 0..out.len() {
        out[i] = x[i] + a * y[i];
    }
}

/// Classical RK4 from global step `start` to `plan.n_steps`, calling `emit`
/// at every snapshot step (including `start` when it is one).
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate(
    op: &Operator,
    source: &SourceTerm,
    mut u: Vec<f64>,
    mut ut: Vec<f64>,
    plan: &StepPlan,
    start: usize,
    reference: f64,
    mut emit: impl FnMut(usize, &[f64], &[f64]) -> Result<()>,
) -> Result<()> {
    let n = u.len();
    let dt = plan.dt;
    let w = op.grid.cell_volume();
    let limit = BLOWUP_FACTOR * reference;
    let (mut u2, mut v2) = (vec![0.0; n], vec![0.0; n]);
    let (mut a1, mut a2, mut a3, mut a4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    if plan.is_snapshot(start) {
        emit(start, &u, &ut)?;
    }
    for step in start..plan.n_steps {
        let t = plan.time(step);
        let th = t + 0.5 * dt;

        op.acceleration(&u, &ut, &mut a1)?;
        source.accumulate(t, &mut a1);

        axpy(&mut u2, &u, 0.5 * dt, &ut);
        axpy(&mut v2, &ut, 0.5 * dt, &a1);
        op.acceleration(&u2, &v2, &mut a2)?;
        source.accumulate(th, &mut a2);
        // k2 for u is v2
        let k2u = v2.clone();

        axpy(&mut u2, &u, 0.5 * dt, &k2u);
        axpy(&mut v2, &ut, 0.5 * dt, &a2);
        op.acceleration(&u2, &v2, &mut a3)?;
        source.accumulate(th, &mut a3);
        let k3u = v2.clone();

        axpy(&mut u2, &u, dt, &k3u);
        axpy(&mut v2, &ut, dt, &a3);
        op.acceleration(&u2, &v2, &mut a4)?;
        source.accumulate(t + dt, &mut a4);

        let c = dt / 6.0;
        let mut size = 0.0;
        for i in 0..n {
            u[i] += c * (ut[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + v2[i]);
            ut[i] += c * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            size += u[i] * u[i] + ut[i] * ut[i];
        }
        let size = (size * w).sqrt();
        let next = step + 1;
        if !(size <= limit) {
            return Err(FracError::StabilityBreach { t: plan.time(next), norm: size, limit });
        }
        if plan.is_snapshot(next) {
            emit(next, &u, &ut)?;
        }
    }
    Ok(())
}

//! Duhamel superposition: the forced solution as the free solution plus a
//! tau-integral of free solutions launched with velocity `f(tau)`.

use crate::error::{FracError, Result};
use crate::evolve::{
    blowup_reference, integrate, solve_trajectory, time_step, Operator, ProblemSpec, SolverConfig,
    SourceTerm, StateSnapshot, StepPlan, Trajectory,
};
use crate::spectral::{lp_norm, Field};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct DuhamelDecomposition {
    /// Free solution with data `(u0, u1)`.
    pub w: Trajectory,
    pub tau_grid: Vec<f64>,
    /// `f(tau_j)`, the initial velocity of each auxiliary solve.
    pub v_initials: Vec<Field>,
    /// `w(t) + int_0^t v(t; tau) d tau` at the snapshot times of `w`.
    pub reconstructed: Trajectory,
}

/// Per-snapshot relative L2 gap between the superposition and a direct solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelDiscrepancy {
    pub n_tau: usize,
    pub times: Vec<f64>,
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Trapezoid weights for `int_0^t` on the nodes `j h` up to step `step`,
/// closed by the endpoint `t` itself. Returns the node weights and the
/// endpoint weight.
fn trapezoid(step: usize, ratio: usize, dt: f64) -> (Vec<f64>, f64) {
    let full = step / ratio;
    let h = ratio as f64 * dt;
    let tail = (step - full * ratio) as f64 * dt;
    let mut w = vec![h; full + 1];
    w[0] = 0.5 * h;
    w[full] = 0.5 * h;
    if full == 0 {
        w[0] = 0.0;
    }
    w[full] += 0.5 * tail;
    (w, 0.5 * tail)
}

/// How many auxiliary solves are integrated concurrently before their
/// contributions are folded in; folding is always in tau order.
const TAU_CHUNK: usize = 32;

pub fn duhamel_solve(p: &ProblemSpec, cfg: &SolverConfig, n_tau: usize) -> Result<DuhamelDecomposition> {
    p.validate()?;
    let (dt, n_steps) = time_step(p, cfg)?;
    if n_tau < 2 || n_steps % n_tau != 0 {
        return Err(FracError::MisalignedTauGrid { n_steps, n_tau });
    }
    let ratio = n_steps / n_tau;
    let grid = *p.grid();

    let mut free = p.clone();
    free.forcing = SourceTerm::Zero;
    let w = solve_trajectory(&free, cfg)?;

    let plan = StepPlan { dt, n_steps, stride: cfg.snapshot_stride };
    let op = Operator::new(p)?;
    let reference = blowup_reference(p)?;
    let tau_grid: Vec<f64> = (0..=n_tau).map(|j| plan.time(j * ratio)).collect();
    let v_initials: Vec<Field> = tau_grid.iter().map(|&t| p.forcing.eval(&grid, t)).collect();

    let snap_steps: Vec<usize> = w.snapshots.iter().map(|s| s.step).collect();
    let weights: Vec<(Vec<f64>, f64)> = snap_steps.iter().map(|&k| trapezoid(k, ratio, dt)).collect();
    let mut acc_u: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; snap_steps.len()];
    let mut acc_ut = acc_u.clone();

    // endpoint values: v(t; t) = 0 and v_t(t; t) = f(t)
    for (k, &step) in snap_steps.iter().enumerate() {
        let tail = weights[k].1;
        if tail > 0.0 {
            let f = p.forcing.eval(&grid, plan.time(step));
            for (a, v) in acc_ut[k].iter_mut().zip(f.samples()) {
                *a += tail * v;
            }
        }
    }

    let nodes: Vec<usize> = (0..=n_tau).collect();
    for chunk in nodes.chunks(TAU_CHUNK) {
        let runs: Vec<Vec<(usize, Vec<f64>, Vec<f64>)>> = chunk
            .par_iter()
            .map(|&j| {
                let mut out = Vec::new();
                integrate(
                    &op,
                    &SourceTerm::Zero,
                    vec![0.0; grid.len()],
                    v_initials[j].samples().to_vec(),
                    &plan,
                    j * ratio,
                    reference,
                    |step, u, ut| {
                        out.push((step, u.to_vec(), ut.to_vec()));
                        Ok(())
                    },
                )?;
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (&j, run) in chunk.iter().zip(runs) {
            for (step, u, ut) in run {
                let k = snap_steps.partition_point(|&s| s < step);
                let wj = weights[k].0.get(j).copied().unwrap_or(0.0);
                if wj == 0.0 {
                    continue;
                }
                for i in 0..u.len() {
                    acc_u[k][i] += wj * u[i];
                    acc_ut[k][i] += wj * ut[i];
                }
            }
        }
    }

    let snapshots = w
        .snapshots
        .iter()
        .zip(acc_u.into_iter().zip(acc_ut))
        .map(|(s, (iu, iut))| {
            Ok(StateSnapshot {
                t: s.t,
                step: s.step,
                u: s.u.add(&Field::new(grid, iu)?)?,
                ut: s.ut.add(&Field::new(grid, iut)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reconstructed = Trajectory { dt, n_steps, snapshots };
    Ok(DuhamelDecomposition { w, tau_grid, v_initials, reconstructed })
}

/// Compares `duhamel_solve` with `evolve::solve` on the same problem.
pub fn duhamel_discrepancy(p: &ProblemSpec, cfg: &SolverConfig, n_tau: usize) -> Result<DuhamelDiscrepancy> {
    let dec = duhamel_solve(p, cfg, n_tau)?;
    let direct = solve_trajectory(p, cfg)?;
    let discrepancy = dec
        .reconstructed
        .snapshots
        .iter()
        .zip(&direct.snapshots)
        .map(|(a, b)| {
            let diff = lp_norm(&a.u.sub(&b.u)?, 2.0)?;
            if diff == 0.0 {
                return Ok(0.0);
            }
            Ok(diff / lp_norm(&b.u, 2.0)?.max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_discrepancy = discrepancy.iter().copied().fold(0.0, f64::max);
    Ok(DuhamelDiscrepancy { n_tau, times: direct.times(), discrepancy, max_discrepancy })
}

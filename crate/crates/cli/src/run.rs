//! Dispatch of a validated config to the experiments, CSV and summary output.

use crate::config::{Experiment, Inequality, RunConfig, SolveBlock};
use crate::fieldio::{format_f64, write_atomic, write_field, FieldIoError};
use fracwave_core::duhamel::duhamel_discrepancy;
use fracwave_core::evolve::modal::modal_solution;
use fracwave_core::evolve::{solve, time_step, ProblemSpec, SourceTerm};
use fracwave_core::lab::{
    coherence_run, kato_ponce_probe, moderateness_sweep, negligibility_twin, sobolev_ratio_probe, ProbeReport,
    Verdict as SweepVerdict,
};
use fracwave_core::spectral::{lp_norm, Grid};
use fracwave_core::FracError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, pass: bool, detail: String) -> Self {
        Verdict { check: check.to_string(), pass, detail }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{experiment}: {source}")]
    Experiment { experiment: Experiment, source: FracError },
    #[error(transparent)]
    Field(#[from] FieldIoError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Files written by a run, relative to the output directory, and its verdicts.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Writer<'_> {
    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|source| RunError::Io { path, source })?;
        self.outcome.files.push(PathBuf::from(name));
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.bytes(name, text.as_bytes())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    fn verdict(&mut self, v: Verdict) {
        self.outcome.verdicts.push(v);
    }
}

fn num(v: f64) -> String {
    format_f64(v)
}

/// Runs `config`; outputs go to `out_dir`, which must exist.
pub fn run(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Outcome, RunError> {
    let mut w = Writer { dir: out_dir, outcome: Outcome::default() };
    let e = config.experiment;
    let ctx = |source: FracError| RunError::Experiment { experiment: e, source };
    match e {
        Experiment::Solve => run_solve(config, base_dir, &mut w).map_err(ctx_field(e))?,
        Experiment::Sweep => {
            let b = config.sweep.clone().unwrap_or_default();
            let ladder = config.ladder(&b.ladder);
            let t = config.template(base_dir)?;
            let r = moderateness_sweep(&t, b.kernel, &ladder, b.norm, &config.solver).map_err(ctx)?;
            w.csv(
                "sweep.csv",
                &["epsilon", "sup_norm"],
                r.epsilons.iter().zip(&r.norms_per_eps).map(|(e, n)| vec![num(*e), num(*n)]),
            )?;
            w.json("summary.json", &r)?;
            let detail = format!("slope {:.4}, r^2 {:.4}", r.fitted_slope, r.r_squared);
            match r.verdict {
                SweepVerdict::Moderate { n_hat } => w.verdict(Verdict::new("moderate", true, format!("{detail}, N = {n_hat}"))),
                SweepVerdict::Inconclusive => w.verdict(Verdict::new("moderate", false, format!("{detail}, inconclusive"))),
            }
            if let Some(x) = b.expected_slope {
                let gap = (r.fitted_slope - x.value).abs();
                w.verdict(Verdict::new(
                    "expected_slope",
                    gap <= x.tolerance,
                    format!("slope {:.4} vs {} +- {}", r.fitted_slope, x.value, x.tolerance),
                ));
            }
        }
        Experiment::Twin => {
            let b = config.twin.clone().unwrap_or_default();
            let ladder = config.ladder(&b.ladder);
            let t = config.template(base_dir)?;
            let r = negligibility_twin(&t, &ladder, b.kernel_a, b.kernel_b, &config.solver, b.margin).map_err(ctx)?;
            let rows = (0..r.epsilons.len()).map(|i| {
                vec![num(r.epsilons[i]), num(r.difference_norms[i]), num(r.solution_norms[i]), num(r.solution_l2_norms[i])]
            });
            w.csv("twin.csv", &["epsilon", "difference_l2", "solution_norm1", "solution_l2"], rows)?;
            w.json("summary.json", &r)?;
            let detail = match r.slope_gap() {
                Some(gap) => format!("slope gap {gap:.4}, margin {}", r.margin),
                None => "differences vanish identically".to_string(),
            };
            w.verdict(Verdict::new("negligible", r.negligible, detail));
        }
        Experiment::Coherence => {
            let b = config.coherence.clone().unwrap_or_default();
            let ladder = config.ladder(&b.ladder);
            let t = config.template(base_dir)?;
            let r = coherence_run(&t, b.kernel, &ladder, b.reference, &config.solver).map_err(ctx)?;
            let rows = (0..r.epsilons.len()).map(|i| vec![num(r.epsilons[i]), num(r.errors[i]), num(r.relative_errors[i])]);
            w.csv("coherence.csv", &["epsilon", "error_l2", "relative_error"], rows)?;
            w.json("summary.json", &r)?;
            w.verdict(Verdict::new("monotone", r.monotone, "errors non-increasing along the ladder".into()));
            w.verdict(Verdict::new(
                "final_relative_error",
                r.final_relative_error < b.tolerance,
                format!("{:.3e} vs {:e}", r.final_relative_error, b.tolerance),
            ));
        }
        Experiment::DuhamelCheck => {
            let b = config.duhamel_check.clone().unwrap_or_default();
            let p = problem(config, base_dir).map_err(ctx_field(e))?;
            let n_tau = match b.n_tau {
                Some(n) => n,
                None => time_step(&p, &config.solver).map_err(ctx)?.1,
            };
            let r = duhamel_discrepancy(&p, &config.solver, n_tau).map_err(ctx)?;
            let rows = r.times.iter().zip(&r.discrepancy).map(|(t, d)| vec![num(*t), num(*d)]);
            w.csv("duhamel.csv", &["t", "discrepancy"], rows)?;
            w.json("summary.json", &r)?;
            w.verdict(Verdict::new(
                "discrepancy",
                r.max_discrepancy <= b.tolerance,
                format!("max {:.3e} at n_tau = {n_tau} vs {:e}", r.max_discrepancy, b.tolerance),
            ));
        }
        Experiment::Probes => run_probes(config, &mut w)?,
    }
    Ok(w.outcome)
}

enum Failure {
    Frac(FracError),
    Other(RunError),
}

impl From<FracError> for Failure {
    fn from(e: FracError) -> Self {
        Failure::Frac(e)
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Other(e)
    }
}

impl From<FieldIoError> for Failure {
    fn from(e: FieldIoError) -> Self {
        Failure::Other(e.into())
    }
}

fn ctx_field(experiment: Experiment) -> impl Fn(Failure) -> RunError {
    move |f| match f {
        Failure::Frac(source) => RunError::Experiment { experiment, source },
        Failure::Other(e) => e,
    }
}

/// The concrete problem: regularized when a mollifier is given.
fn problem(config: &RunConfig, base_dir: &Path) -> Result<ProblemSpec, Failure> {
    let t = config.template(base_dir)?;
    let p = config.problem.as_ref().expect("validated problem");
    Ok(match &p.mollifier {
        Some(m) => t.instantiate(m)?,
        None => t.instantiate_unregularized()?,
    })
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    dt: f64,
    n_steps: usize,
    times: &'a [f64],
    energy: &'a [f64],
    dissipation_residual: &'a [f64],
    monotone_violation: Option<f64>,
    max_energy_drift: f64,
    modal_max_relative_error: Option<f64>,
}

fn run_solve(config: &RunConfig, base_dir: &Path, w: &mut Writer) -> Result<(), Failure> {
    let block: SolveBlock = config.solve.clone().unwrap_or_default();
    let p = problem(config, base_dir)?;
    let s = p.s();
    let (traj, report) = solve(&p, &config.solver)?;
    let norms = traj.composite_norms(s)?;
    let rows = traj.snapshots.iter().enumerate().map(|(i, snap)| {
        let residual = report.dissipation_residual.get(i).map_or(String::new(), |r| num(*r));
        vec![num(snap.t), num(norms[i].l2_u), num(norms[i].half_u), num(norms[i].l2_ut), num(report.energy[i]), residual]
    });
    w.csv("trajectory.csv", &["t", "l2_u", "half_laplacian_u", "l2_ut", "energy", "dissipation_residual"], rows)?;
    if block.write_final_state {
        for (name, field) in [("u_final.csv", &traj.last().u), ("ut_final.csv", &traj.last().ut)] {
            for path in write_field(&w.dir.join(name), field)? {
                w.outcome.files.push(PathBuf::from(path.file_name().expect("file name")));
            }
        }
    }

    let e0 = report.energy[0];
    let drift = report.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE);
    let unforced = matches!(p.forcing, SourceTerm::Zero) || p.forcing.is_zero();
    if unforced && p.b.max_abs() == 0.0 {
        w.verdict(Verdict::new(
            "energy_conservation",
            drift <= block.conservation_tolerance,
            format!("relative drift {drift:.3e} vs {:e}", block.conservation_tolerance),
        ));
    } else if unforced {
        let jump = report.monotone_violation.unwrap_or(0.0);
        w.verdict(Verdict::new(
            "energy_monotone",
            jump <= block.monotone_slack * e0,
            format!("largest increase {:.3e} E(0) vs {:e}", jump / e0.max(f64::MIN_POSITIVE), block.monotone_slack),
        ));
    }

    let mut modal_err = None;
    if let Some(tol) = block.modal_tolerance {
        match modal_error(&p, &traj.snapshots) {
            Ok(err) => {
                modal_err = Some(err);
                w.verdict(Verdict::new("modal_agreement", err <= tol, format!("max L2-relative error {err:.3e} vs {tol:e}")));
            }
            Err(FracError::MissingReference(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    w.json(
        "summary.json",
        &SolveSummary {
            dt: traj.dt,
            n_steps: traj.n_steps,
            times: &report.times,
            energy: &report.energy,
            dissipation_residual: &report.dissipation_residual,
            monotone_violation: report.monotone_violation,
            max_energy_drift: drift,
            modal_max_relative_error: modal_err,
        },
    )?;
    Ok(())
}

fn modal_error(p: &ProblemSpec, snaps: &[fracwave_core::evolve::StateSnapshot]) -> Result<f64, FracError> {
    let mut worst: f64 = 0.0;
    for snap in snaps {
        let (u, _) = modal_solution(p, snap.t)?;
        let diff = lp_norm(&snap.u.sub(&u)?, 2.0)?;
        let scale = lp_norm(&u, 2.0)?;
        worst = worst.max(if diff == 0.0 { 0.0 } else { diff / scale.max(f64::MIN_POSITIVE) });
    }
    Ok(worst)
}

#[derive(Serialize)]
struct ProbeSummary {
    inequality: &'static str,
    reports: Vec<ProbeReport>,
    relative_spread: f64,
}

fn run_probes(config: &RunConfig, w: &mut Writer) -> Result<(), RunError> {
    let e = config.experiment;
    let ctx = |source: FracError| RunError::Experiment { experiment: e, source };
    let b = config.probes.clone().expect("validated probes block");
    let base = config.grid();
    let resolutions = b.resolutions.clone().unwrap_or_else(|| vec![base.n(), 2 * base.n()]);
    let which: &[&'static str] = match b.inequality {
        Inequality::Sobolev => &["sobolev"],
        Inequality::KatoPonce => &["kato_ponce"],
        Inequality::Both => &["sobolev", "kato_ponce"],
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &name in which {
        let mut reports = Vec::new();
        for &n in &resolutions {
            let grid = Grid::new(base.dim(), n, base.length()).map_err(ctx)?;
            let r = match name {
                "sobolev" => sobolev_ratio_probe(&grid, b.s, b.n_samples, b.band, config.seed),
                _ => kato_ponce_probe(&grid, b.s, b.n_samples, b.band, config.seed),
            }
            .map_err(ctx)?;
            rows.extend(r.ratios.iter().enumerate().map(|(i, v)| vec![name.to_string(), n.to_string(), i.to_string(), num(*v)]));
            reports.push(r);
        }
        let maxima: Vec<f64> = reports.iter().map(|r| r.max_ratio).collect();
        let hi = maxima.iter().copied().fold(f64::MIN, f64::max);
        let lo = maxima.iter().copied().fold(f64::MAX, f64::min);
        let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        let listed: Vec<String> = resolutions.iter().zip(&maxima).map(|(n, m)| format!("n={n}: {m:.6}")).collect();
        w.verdict(Verdict::new(
            &format!("{name}_bounded"),
            spread < b.max_relative_spread,
            format!("max ratios {}; spread {spread:.3e} vs {}", listed.join(", "), b.max_relative_spread),
        ));
        summaries.push(ProbeSummary { inequality: name, reports, relative_spread: spread });
    }
    w.csv("probes.csv", &["inequality", "n", "sample", "ratio"], rows)?;
    w.json("summary.json", &summaries)?;
    Ok(())
}

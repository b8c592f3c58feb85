//! Run configuration: strict JSON, every unknown key rejected, every
//! violation reported with the path of the offending value.

use crate::fieldio::{read_field, FieldIoError};
use clap::ValueEnum;
use fracwave_core::evolve::{SolverConfig, TimeProfile};
use fracwave_core::lab::{default_ladder, ForcingSlot, ProblemTemplate, ReferenceKind, Slot};
use fracwave_core::mollify::{KernelKind, MollifierSpec, SingularDatum, SingularKind};
use fracwave_core::spectral::{Field, FracOrder, Grid, GridParams, NormSelector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Sweep,
    Twin,
    Coherence,
    DuhamelCheck,
    Probes,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Sweep => "sweep",
            Experiment::Twin => "twin",
            Experiment::Coherence => "coherence",
            Experiment::DuhamelCheck => "duhamel-check",
            Experiment::Probes => "probes",
        }
    }

    /// Key of the experiment-specific block.
    fn block(&self) -> &'static str {
        match self {
            Experiment::DuhamelCheck => "duhamel_check",
            other => other.name(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `amplitude cos(2 pi (k . x) / L + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWave {
    pub wavevector: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSlot {
    pub kind: SingularKind,
    pub center: Vec<f64>,
    #[serde(default = "unit")]
    pub amplitude: f64,
    /// Added to the net.
    #[serde(default)]
    pub base: f64,
}

impl SingularSlot {
    pub fn datum(&self) -> SingularDatum {
        SingularDatum::new(self.kind, self.center.clone(), self.amplitude)
    }
}

fn unit() -> f64 {
    1.0
}

/// Value of one coefficient or data slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SlotSpec {
    Constant(f64),
    /// Tabulated field; relative paths are taken from the config's directory.
    File(PathBuf),
    PlaneWave(PlaneWave),
    Singular(SingularSlot),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub profile: TimeProfile,
    pub shape: SlotSpec,
}

fn zero_slot() -> SlotSpec {
    SlotSpec::Constant(0.0)
}

fn unit_slot() -> SlotSpec {
    SlotSpec::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub s: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "unit_slot")]
    pub g: SlotSpec,
    #[serde(default = "zero_slot")]
    pub m: SlotSpec,
    #[serde(default = "zero_slot")]
    pub b: SlotSpec,
    pub u0: SlotSpec,
    #[serde(default = "zero_slot")]
    pub u1: SlotSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
    /// Regularization for `solve` and `duhamel-check` when a slot is singular.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<MollifierSpec>,
}

fn default_modal_tolerance() -> Option<f64> {
    Some(1e-6)
}

fn default_conservation() -> f64 {
    1e-6
}

fn default_monotone_slack() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    /// Relative drift allowed when `b = 0` and `f = 0`.
    #[serde(default = "default_conservation")]
    pub conservation_tolerance: f64,
    /// Largest energy increase, relative to `E(0)`, when `b >= 0` and `f = 0`.
    #[serde(default = "default_monotone_slack")]
    pub monotone_slack: f64,
    /// L2-relative agreement with the modal closed form, when one exists.
    #[serde(default = "default_modal_tolerance")]
    pub modal_tolerance: Option<f64>,
    /// Also write the final state as field files.
    #[serde(default)]
    pub write_final_state: bool,
}

impl Default for SolveBlock {
    fn default() -> Self {
        SolveBlock {
            conservation_tolerance: default_conservation(),
            monotone_slack: default_monotone_slack(),
            modal_tolerance: default_modal_tolerance(),
            write_final_state: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSlope {
    pub value: f64,
    pub tolerance: f64,
}

fn default_kernel() -> KernelKind {
    KernelKind::CompactBump
}

fn default_norm() -> NormSelector {
    NormSelector::Norm1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Defaults to `2^-2 .. 2^-6` clipped at `4 dx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_norm")]
    pub norm: NormSelector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<ExpectedSlope>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { ladder: None, kernel: default_kernel(), norm: default_norm(), expected_slope: None }
    }
}

fn default_kernel_b() -> KernelKind {
    KernelKind::Gaussian
}

fn default_margin() -> f64 {
    fracwave_core::lab::DEFAULT_TWIN_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_kernel")]
    pub kernel_a: KernelKind,
    #[serde(default = "default_kernel_b")]
    pub kernel_b: KernelKind,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for TwinBlock {
    fn default() -> Self {
        TwinBlock { ladder: None, kernel_a: default_kernel(), kernel_b: default_kernel_b(), margin: default_margin() }
    }
}

fn default_reference() -> ReferenceKind {
    ReferenceKind::FineEpsRefined
}

fn default_coherence_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    /// Bound on the last relative error of the ladder.
    #[serde(default = "default_coherence_tolerance")]
    pub tolerance: f64,
}

impl Default for CoherenceBlock {
    fn default() -> Self {
        CoherenceBlock {
            ladder: None,
            kernel: default_kernel(),
            reference: default_reference(),
            tolerance: default_coherence_tolerance(),
        }
    }
}

fn default_duhamel_tolerance() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelBlock {
    /// Defaults to the number of solver steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tau: Option<usize>,
    #[serde(default = "default_duhamel_tolerance")]
    pub tolerance: f64,
}

impl Default for DuhamelBlock {
    fn default() -> Self {
        DuhamelBlock { n_tau: None, tolerance: default_duhamel_tolerance() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    Sobolev,
    KatoPonce,
    Both,
}

fn default_inequality() -> Inequality {
    Inequality::Both
}

fn default_samples() -> usize {
    100
}

fn default_band() -> usize {
    8
}

fn default_spread() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesBlock {
    pub s: f64,
    #[serde(default = "default_inequality")]
    pub inequality: Inequality,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_band")]
    pub band: usize,
    /// Defaults to `[n, 2n]` from the grid block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolutions: Option<Vec<usize>>,
    /// Largest allowed relative spread of the max ratio across resolutions.
    #[serde(default = "default_spread")]
    pub max_relative_spread: f64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub grid: GridParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin: Option<TwinBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<CoherenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duhamel_check: Option<DuhamelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<ProbesBlock>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// One validation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push(ConfigIssue { path: path.into(), message: message.to_string() });
    }
}

/// Parses and validates a config; file references resolve against `base_dir`.
pub fn parse_config(bytes: &[u8], base_dir: &Path) -> Result<RunConfig, ConfigErrors> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        ConfigErrors(vec![ConfigIssue { path, message: e.into_inner().to_string() }])
    })?;
    de.end().map_err(|e| ConfigErrors(vec![ConfigIssue { path: "<root>".into(), message: e.to_string() }]))?;
    validate(&config, base_dir)?;
    Ok(config)
}

pub fn to_json(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn validate(c: &RunConfig, base_dir: &Path) -> Result<(), ConfigErrors> {
    let mut issues = Issues(Vec::new());
    let grid = match Grid::try_from(c.grid) {
        Ok(g) => Some(g),
        Err(e) => {
            issues.push("grid", e);
            None
        }
    };
    if let Err(e) = c.solver.validate() {
        issues.push("solver", e);
    }

    let blocks: [(Experiment, bool); 6] = [
        (Experiment::Solve, c.solve.is_some()),
        (Experiment::Sweep, c.sweep.is_some()),
        (Experiment::Twin, c.twin.is_some()),
        (Experiment::Coherence, c.coherence.is_some()),
        (Experiment::DuhamelCheck, c.duhamel_check.is_some()),
        (Experiment::Probes, c.probes.is_some()),
    ];
    for (e, present) in blocks {
        if present && e != c.experiment {
            issues.push(e.block(), format!("block does not belong to experiment {}", c.experiment));
        }
    }

    match (&c.problem, c.experiment) {
        (None, Experiment::Probes) => {}
        (None, e) => issues.push("problem", format!("required for experiment {e}")),
        (Some(p), e) => {
            if let Some(g) = &grid {
                validate_problem(p, e, g, base_dir, &mut issues);
            }
        }
    }

    if let Some(g) = &grid {
        match c.experiment {
            Experiment::Sweep => {
                let b = c.sweep.clone().unwrap_or_default();
                if let Some(l) = &b.ladder {
                    validate_ladder(l, b.kernel, g, "sweep.ladder", &mut issues);
                }
                if let Some(x) = b.expected_slope {
                    if !(x.tolerance >= 0.0) {
                        issues.push("sweep.expected_slope.tolerance", "must be non-negative");
                    }
                }
            }
            Experiment::Twin => {
                let b = c.twin.clone().unwrap_or_default();
                if let Some(l) = &b.ladder {
                    validate_ladder(l, b.kernel_a, g, "twin.ladder", &mut issues);
                    validate_ladder(l, b.kernel_b, g, "twin.ladder", &mut issues);
                }
                if !b.margin.is_finite() {
                    issues.push("twin.margin", "must be finite");
                }
                unit_g_required(c, "twin", &mut issues);
            }
            Experiment::Coherence => {
                let b = c.coherence.clone().unwrap_or_default();
                if let Some(l) = &b.ladder {
                    validate_ladder(l, b.kernel, g, "coherence.ladder", &mut issues);
                }
                if !(b.tolerance > 0.0) {
                    issues.push("coherence.tolerance", "must be positive");
                }
                unit_g_required(c, "coherence", &mut issues);
                if let Some(p) = &c.problem {
                    for (name, slot) in [("g", &p.g), ("m", &p.m), ("b", &p.b)] {
                        if matches!(slot, SlotSpec::Singular(_)) {
                            issues.push(format!("problem.{name}"), "coherence needs a classical (non-singular) coefficient");
                        }
                    }
                    let constant = [&p.g, &p.m, &p.b].iter().all(|s| matches!(s, SlotSpec::Constant(_)));
                    if b.reference == ReferenceKind::AnalyticModal && !constant {
                        issues.push("coherence.reference", "analytic_modal needs constant g, m and b");
                    }
                }
            }
            Experiment::DuhamelCheck => {
                let b = c.duhamel_check.clone().unwrap_or_default();
                if b.n_tau.is_some_and(|n| n < 2) {
                    issues.push("duhamel_check.n_tau", "must be at least 2");
                }
                if !(b.tolerance > 0.0) {
                    issues.push("duhamel_check.tolerance", "must be positive");
                }
            }
            Experiment::Probes => match &c.probes {
                None => issues.push("probes", "required for experiment probes"),
                Some(b) => validate_probes(b, g, &mut issues),
            },
            Experiment::Solve => {}
        }
    }

    if issues.0.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(issues.0))
    }
}

fn unit_g_required(c: &RunConfig, experiment: &str, issues: &mut Issues) {
    if let Some(p) = &c.problem {
        if p.g != SlotSpec::Constant(1.0) {
            issues.push("problem.g", format!("{experiment} runs require g = 1"));
        }
    }
}

fn validate_problem(p: &ProblemConfig, e: Experiment, grid: &Grid, base_dir: &Path, issues: &mut Issues) {
    if let Err(err) = FracOrder::new(p.s) {
        issues.push("problem.s", err);
    }
    if !(p.horizon.is_finite() && p.horizon > 0.0) {
        issues.push("problem.T", "must be positive and finite");
    }
    let mut singular = false;
    for (name, slot) in [("g", &p.g), ("m", &p.m), ("b", &p.b), ("u0", &p.u0), ("u1", &p.u1)] {
        singular |= validate_slot(slot, &format!("problem.{name}"), grid, base_dir, issues);
    }
    if let Some(f) = &p.forcing {
        singular |= validate_slot(&f.shape, "problem.forcing.shape", grid, base_dir, issues);
        if let TimeProfile::Harmonic { frequency, phase } = f.profile {
            if !(frequency.is_finite() && phase.is_finite()) {
                issues.push("problem.forcing.profile", "frequency and phase must be finite");
            }
        }
    }
    for (name, slot, strict) in [("g", &p.g, true), ("m", &p.m, false), ("b", &p.b, false)] {
        if let SlotSpec::Constant(v) = slot {
            let ok = if strict { *v > 0.0 } else { *v >= 0.0 };
            if !(ok && v.is_finite()) {
                let rule = if strict { "positive" } else { "non-negative" };
                issues.push(format!("problem.{name}.constant"), format!("{v} must be {rule}"));
            }
        }
    }
    match &p.mollifier {
        Some(m) => {
            if let Err(err) = m.validate().and_then(|_| m.check_resolvable(grid)) {
                issues.push("problem.mollifier.epsilon", err);
            }
        }
        None => {
            if singular && matches!(e, Experiment::Solve | Experiment::DuhamelCheck) {
                issues.push("problem.mollifier", format!("a singular slot needs a mollifier for {e}"));
            }
        }
    }
}

/// Returns true when the slot is singular.
fn validate_slot(slot: &SlotSpec, path: &str, grid: &Grid, base_dir: &Path, issues: &mut Issues) -> bool {
    match slot {
        SlotSpec::Constant(v) => {
            if !v.is_finite() {
                issues.push(format!("{path}.constant"), "must be finite");
            }
            false
        }
        SlotSpec::File(f) => {
            if let Err(e) = read_field(&base_dir.join(f), grid) {
                issues.push(format!("{path}.file"), e);
            }
            false
        }
        SlotSpec::PlaneWave(w) => {
            if w.wavevector.len() != grid.dim() {
                issues.push(
                    format!("{path}.plane_wave.wavevector"),
                    format!("has {} entries, grid dimension is {}", w.wavevector.len(), grid.dim()),
                );
            }
            let nyquist = (grid.n() / 2) as i64;
            if let Some(k) = w.wavevector.iter().find(|k| k.abs() >= nyquist) {
                issues.push(
                    format!("{path}.plane_wave.wavevector"),
                    format!("mode {k} is not resolved (|k| < {nyquist})"),
                );
            }
            if !(w.amplitude.is_finite() && w.phase.is_finite()) {
                issues.push(format!("{path}.plane_wave"), "amplitude and phase must be finite");
            }
            false
        }
        SlotSpec::Singular(s) => {
            if let Err(e) = s.datum().validate(grid) {
                issues.push(format!("{path}.singular"), e);
            }
            if !s.base.is_finite() {
                issues.push(format!("{path}.singular.base"), "must be finite");
            }
            true
        }
    }
}

fn validate_ladder(ladder: &[f64], kernel: KernelKind, grid: &Grid, path: &str, issues: &mut Issues) {
    if ladder.len() < 4 {
        issues.push(path, format!("needs at least 4 entries, got {}", ladder.len()));
    }
    for (i, &eps) in ladder.iter().enumerate() {
        let at = format!("{path}[{i}]");
        match MollifierSpec::new(kernel, eps).and_then(|m| m.check_resolvable(grid)) {
            Err(e) => issues.push(at, e),
            Ok(()) => {
                if i > 0 && eps >= ladder[i - 1] {
                    issues.push(at, format!("{eps} does not decrease"));
                }
            }
        }
    }
}

fn validate_probes(b: &ProbesBlock, grid: &Grid, issues: &mut Issues) {
    let d = grid.dim() as f64;
    if !(b.s > 0.0 && d > 2.0 * b.s) {
        issues.push("probes.s", format!("needs 0 < 2s < d = {}", grid.dim()));
    }
    if b.n_samples == 0 {
        issues.push("probes.n_samples", "must be positive");
    }
    if !(b.max_relative_spread >= 0.0) {
        issues.push("probes.max_relative_spread", "must be non-negative");
    }
    let resolutions = b.resolutions.clone().unwrap_or_else(|| vec![grid.n(), 2 * grid.n()]);
    if resolutions.is_empty() {
        issues.push("probes.resolutions", "must not be empty");
    }
    for (i, &n) in resolutions.iter().enumerate() {
        match Grid::new(grid.dim(), n, grid.length()) {
            Err(e) => issues.push(format!("probes.resolutions[{i}]"), e),
            Ok(_) if b.band == 0 || b.band >= n / 2 => {
                issues.push(format!("probes.resolutions[{i}]"), format!("band {} not resolved on n = {n}", b.band))
            }
            Ok(_) => {}
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::try_from(self.grid).expect("validated grid")
    }

    /// The experiment-specific ladder, or the default one on this grid.
    pub fn ladder(&self, explicit: &Option<Vec<f64>>) -> Vec<f64> {
        explicit.clone().unwrap_or_else(|| default_ladder(&self.grid()))
    }

    /// The problem with every slot resolved; file slots are read from `base_dir`.
    pub fn template(&self, base_dir: &Path) -> Result<ProblemTemplate, FieldIoError> {
        let p = self.problem.as_ref().expect("validated problem");
        let grid = self.grid();
        let slot = |s: &SlotSpec| resolve_slot(s, &grid, base_dir);
        let forcing = match &p.forcing {
            None => ForcingSlot::Zero,
            Some(f) => ForcingSlot::Separable { profile: f.profile, slot: slot(&f.shape)? },
        };
        Ok(ProblemTemplate {
            grid,
            order: FracOrder::new(p.s).expect("validated order"),
            horizon: p.horizon,
            g: slot(&p.g)?,
            m: slot(&p.m)?,
            b: slot(&p.b)?,
            u0: slot(&p.u0)?,
            u1: slot(&p.u1)?,
            forcing,
        })
    }
}

fn resolve_slot(s: &SlotSpec, grid: &Grid, base_dir: &Path) -> Result<Slot, FieldIoError> {
    Ok(match s {
        SlotSpec::Constant(v) => Slot::Constant(*v),
        SlotSpec::File(f) => Slot::Tabulated(read_field(&base_dir.join(f), grid)?),
        SlotSpec::PlaneWave(w) => Slot::Tabulated(plane_wave(w, grid)),
        SlotSpec::Singular(s) => Slot::Singular { datum: s.datum(), base: s.base },
    })
}

pub fn plane_wave(w: &PlaneWave, grid: &Grid) -> Field {
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    Field::from_fn(*grid, |x| {
        let phase: f64 = w.wavevector.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum();
        w.amplitude * (scale * phase + w.phase).cos()
    })
    .expect("finite plane wave")
}

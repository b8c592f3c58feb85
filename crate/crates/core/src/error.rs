use thiserror::Error;

/// Errors raised by the solver and experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("field has {got} samples, grid expects {expected}")]
    SampleCount { expected: usize, got: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("operator order must be positive and finite, got {0}")]
    InvalidOrder(f64),

    #[error("Lebesgue exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("coefficient `{name}` violates positivity: min = {min}")]
    PositivityViolation { name: &'static str, min: f64 },

    #[error("imaginary residue {residue:e} after inverse transform exceeds tolerance (scale {scale:e})")]
    ImaginaryResidue { residue: f64, scale: f64 },

    #[error("mollifier epsilon must lie in (0, 1], got {0}")]
    InvalidEpsilon(f64),

    #[error("kernel with epsilon {epsilon} is unresolvable: needs epsilon >= {minimum} (4 grid spacings)")]
    UnresolvableKernel { epsilon: f64, minimum: f64 },

    #[error("compact kernel radius {epsilon} exceeds half the box length {half_box}")]
    KernelExceedsBox { epsilon: f64, half_box: f64 },

    #[error("invalid singular datum: {0}")]
    InvalidDatum(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid source term: {0}")]
    InvalidSource(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("solution blew up at t = {t}: norm {norm:e} exceeds guard {limit:e}")]
    StabilityBreach { t: f64, norm: f64, limit: f64 },

    #[error("dissipation identity requires zero forcing")]
    ForcingPresent,

    #[error("tau grid misaligned: {n_steps} solver steps are not divisible by n_tau = {n_tau}")]
    MisalignedTauGrid { n_steps: usize, n_tau: usize },

    #[error("invalid epsilon ladder: {0}")]
    InvalidLadder(String),

    #[error("invalid fit input: {0}")]
    InvalidFit(String),

    #[error("power-law fit inconclusive: r^2 = {r_squared:.4} < {threshold}")]
    InconclusiveFit { r_squared: f64, threshold: f64 },

    #[error("scope violation: {0}")]
    ScopeViolation(String),

    #[error("reference solution unavailable: {0}")]
    MissingReference(String),

    #[error("inequality regime requires d > 2s, got d = {dim}, s = {s}")]
    RegimeViolation { dim: usize, s: f64 },
}

pub type Result<T> = std::result::Result<T, FracError>;

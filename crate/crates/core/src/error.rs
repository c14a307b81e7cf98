use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("loop is not continuous: lift jump {jump:.3} at sample {index} (limit 0.5)")]
    NonContinuousLoop { index: usize, jump: f64 },
    #[error("loop does not close: displacement {displacement:?} is not integral")]
    LoopNotClosed { displacement: Vec<f64> },
    #[error("level {value} lies outside the chart range [{lo}, {hi}]")]
    OutOfChart { value: f64, lo: f64, hi: f64 },
    #[error("loops at the same torus level bound no positive-area annulus")]
    CoincidentLoops,
    #[error("bad profile parameters: m = {m}, S = {s}, eps = {eps} (need m < S and eps > 0)")]
    BadProfileParams { m: f64, s: f64, eps: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("gap inf_X H - sup_Y H = {gap} does not exceed C = {c}")]
    ThresholdNotMet { gap: f64, c: f64 },
    #[error("no dyadic eps_1 below {tau} separates the bands by more than C = {c}")]
    NoEpsilon { tau: f64, c: f64 },
    #[error("slope {target} is never attained on (0, {eps})")]
    NoRoot { target: f64, eps: f64 },
    #[error("implicit midpoint Newton diverged at t = {t}: residual {residual:e}")]
    NewtonDivergence { t: f64, residual: f64 },
    #[error("trajectory left the chart at t = {t} (p = {p})")]
    LeftChart { t: f64, p: f64 },
    #[error("dimension mismatch: expected {expected} degrees of freedom, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} degrees of freedom are not supported by the integrator (max 2)")]
    UnsupportedDimension(usize),
    #[error("cluster at {center:?} is neither a point nor a curve at radius {radius:e}")]
    AmbiguousCluster { center: Vec<f64>, radius: f64 },
    #[error("orbit class {orbit:?} differs from reference class {reference:?}")]
    ClassMismatch { orbit: Vec<i64>, reference: Vec<i64> },
    #[error("orbit does not lie in the half strip {{±p > {bound}}}")]
    NotInHalfStrip { bound: f64 },
    #[error("orbit reaches |p| = {max_abs_p:.4} >= k = {k}; raise k")]
    EscapesWindow { max_abs_p: f64, k: u32 },
    #[error("no beta in Z^n with beta.w != 0 and alpha not parallel to beta")]
    NoValidBeta,
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("the zero class is not admissible here")]
    ZeroClass,
    #[error("base Hamiltonian is not 1-periodic in p")]
    NotPeriodic,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared across the library.
///
/// Numerical routines in this crate are total on their documented domains;
/// every variant here corresponds to a precondition violation or to a
/// structural failure (singular collocation system, divergent iteration)
/// that the caller can act on. Plain NaN propagation is not wrapped: a NaN
/// input to a kernel evaluation yields NaN output.
#[derive(Debug, Error)]
pub enum Error {
    /// SOE tables are shipped for fixed orders only.
    #[error("unsupported SOE order {0} (tables exist for n = 8, 12, 16)")]
    UnsupportedOrder(usize),

    /// A shipped coefficient table failed re-validation against its budget.
    #[error("SOE table n={n} failed validation: sup error {achieved:.3e} > budget {budget:.3e}")]
    AccuracyNotMet {
        n: usize,
        achieved: f64,
        budget: f64,
    },

    /// A coefficient asset could not be parsed.
    #[error("malformed SOE table asset: {0}")]
    InvalidTable(String),

    /// Heat-kernel evaluations need t > 0.
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    /// Sweep-based transforms require sorted sources and targets.
    #[error("{0} must be sorted ascending")]
    UnsortedInput(&'static str),

    /// A piecewise function was given coincident breakpoints.
    #[error("piece [{0}, {1}] has zero or negative width")]
    DegeneratePiece(f64, f64),

    /// The series (small-t) path was called outside its validity window.
    #[error("t = {t} exceeds the series-path threshold {max}")]
    TimeTooLarge { t: f64, max: f64 },

    /// A target lies outside the source domain where the operation requires
    /// it inside.
    #[error("target {x} outside domain [{a}, {b}]")]
    TargetOutOfDomain { x: f64, a: f64, b: f64 },

    /// Periodic transforms take targets inside the period cell.
    #[error("target {x} outside period cell [{a}, {b}]")]
    TargetOutOfCell { x: f64, a: f64, b: f64 },

    /// A graded-mesh routine was invoked in the wrong b−a regime.
    #[error("mesh region mismatch: b - a = {0} on the wrong side of {1}")]
    RegionMismatch(f64, f64),

    /// Evaluation time outside the representation's range.
    #[error("time {t} outside representation range (0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    /// Potential evaluation exactly on the boundary curve is excluded
    /// (jump relation).
    #[error("evaluation point {x} lies on the boundary at t = {t}")]
    OnBoundary { x: f64, t: f64 },

    /// A collocation panel produced a numerically singular system.
    #[error("singular collocation system on panel [{0}, {1}]")]
    SingularSystem(f64, f64),

    /// Panel plan does not tile the time interval.
    #[error("panel plan gap near t = {0}")]
    PanelPlanGap(f64),

    /// Boundary trajectories must satisfy a(t) < b(t).
    #[error("domain degenerate at t = {t}: a = {a}, b = {b}")]
    DomainDegenerate { t: f64, a: f64, b: f64 },

    /// Adaptive reference quadrature exceeded its recursion budget.
    #[error("oracle subdivision depth exceeded on [{0}, {1}]")]
    DepthExceeded(f64, f64),

    /// SDC correction residual grew for two consecutive sweeps.
    #[error("SDC diverged on panel {panel}: residual {residual:.3e}")]
    SdcDivergence { panel: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by geometry validation, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("window of half-width {eps} contains no grid row; need n2_half >= {min_n2_half} for x_max = {x_max}")]
    EmptyWindow {
        eps: f64,
        x_max: f64,
        min_n2_half: usize,
    },

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("mode-matched boundary condition invalid: {0}")]
    BoundaryCondition(String),

    #[error("factorization is singular (zero pivot at column {0})")]
    SingularFactorization(usize),

    #[error("eigensolver did not converge: best residual {best_residual:.3e} after {iterations} iterations (tol {tol:.3e})")]
    NoConvergence {
        best_residual: f64,
        iterations: usize,
        tol: f64,
    },

    #[error("no eigenvalue below the threshold for this fiber")]
    NoEigenvalueBelowThreshold,

    #[error("threshold window holds {found} candidates; at most 2 are supported (unexpected multiplicity)")]
    UnexpectedMultiplicity { found: usize },

    #[error("virtual-level detection unstable under refinement: {0}")]
    UnstableDetection(String),

    #[error("L_tau vanishes for both solutions; the pair cannot be rotated")]
    VanishingLTau,

    #[error("resonance data error: {0}")]
    ResonanceData(String),

    #[error("linear solve broke down: {0}")]
    SolveBreakdown(String),

    #[error("band sweep failed: {0}")]
    Sweep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

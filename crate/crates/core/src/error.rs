use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge direction ({0}, {1}) is not a coprime pair")]
    NotCoprime(i64, i64),
    #[error("bump width {0} does not fit inside the unit cell")]
    WidthTooLarge(f64),
    #[error("grid size {0} is odd; square symmetry checks need an even grid")]
    GridNotSymmetric(usize),
    #[error("deformation matrix is singular (det = {0:e})")]
    SingularDeformation(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("bordered solve is ill-conditioned (relative residual {0:e})")]
    IllConditioned(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no degeneracy found (minimal gap {0:e})")]
    NoDegeneracyFound(f64),
    #[error("degeneracy pair is not inversion symmetric (defect {0:e})")]
    NotInversionSymmetric(f64),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("no band gap: {0}")]
    NoBandGap(String),
    #[error("computational domain too small: {0}")]
    DomainTooSmall(String),
    #[error("curve continuation ambiguous at kappa = {kappa} (best overlap {overlap:.3})")]
    ContinuationAmbiguous { kappa: f64, overlap: f64 },
    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
    #[error("domain wall transition does not fit the strip: {0}")]
    WallTooWide(String),
    #[error("spectral gap closed on the grid at k = ({0}, {1})")]
    GapClosedOnGrid(f64, f64),
    #[error("effective window mismatch: {0}")]
    WindowMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

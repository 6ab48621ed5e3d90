use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("filter invariant violated: {0}")]
    InvalidFilter(String),

    /// `G*ΛG` is not positive definite at some grid angle.
    #[error("parameter is infeasible: G*ΛG not positive definite at theta = {theta}")]
    Infeasible { theta: f64 },

    #[error("factor CG is near-singular at theta = {theta} (condition number {condition:e})")]
    SingularFactor { theta: f64, condition: f64 },

    #[error("determinantal root on the unit circle: |z| = {modulus}")]
    RootOnCircle { modulus: f64 },

    #[error("degenerate factor: det(zCG) vanishes identically")]
    DegenerateFactor,

    #[error("det(zCG) is not a polynomial in 1/z of degree <= {degree} for this filter")]
    NotPolynomial { degree: usize },

    #[error("no sign change of det J_h on [{t_lo}, {t_hi}] (values {det_lo:e}, {det_hi:e})")]
    NoSignChange {
        t_lo: f64,
        t_hi: f64,
        det_lo: f64,
        det_hi: f64,
    },

    #[error("path parameter t = {t} is infeasible")]
    InfeasiblePath { t: f64 },

    #[error("rank mismatch: expected numerical rank {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

//! Parametric moment map of matrix-valued spectral estimation.
//!
//! The crate evaluates `h(Λ) = ∫ G W (G*ΛG)^{-1} W* G*` for a rational
//! filter bank `G`, represents its Jacobian and Hessian in an orthonormal
//! basis of range Γ, locates critical points along parameter paths,
//! classifies them through a Lyapunov-Schmidt reduction and solves moment
//! equations by predictor-corrector continuation.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bifurcation;
pub mod continuation;
pub mod critical;
pub mod error;
pub mod filter;
pub mod instance;
pub mod linalg;
pub mod moments;
pub mod par;
pub mod polyroots;

pub use basis::{build_basis, feasibility_check, lambda_from_factor, project, FactorC, HermitianBasis, LambdaParam};
pub use bifurcation::{
    analyze, augmented_jacobian, bifurcation_hessian, classify, ls_decompose, BifurcationReport, Classification,
    LSDecomposition,
};
pub use continuation::{
    continuation_solve, ContinuationMode, ContinuationOptions, ContinuationStatus, ContinuationStep, ContinuationTrace,
};
pub use critical::{bisect_critical, det_scan, BisectOptions, CriticalPointRecord, DetSample, DetScan, SegmentPath};
pub use error::{Error, Result};
pub use filter::{
    eval_filter, gamma_adjoint, gamma_apply, integrate, integrate_with, make_grid, FrequencyGrid, MatrixSamples,
    RationalFilter, Summation,
};
pub use moments::{JacobianMatrixRep, MomentContext, PriorFactor};
pub use polyroots::{determinantal_roots, RootReport};

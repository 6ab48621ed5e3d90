//! Serializable reports. Field order in the JSON output is the declaration
//! order below; floats use the shortest representation that round-trips.

use momentmap::linalg::{RMat, C64};
use serde::Serialize;

use crate::config::MatrixSpec;

/// Basis ordering stated in every report.
pub const BASIS_ORDER: &str = "lag blocks 1..p, each m*m generators in row-major order (block below the \
    diagonal, transpose above), then the lag-0 upper triangle row by row; every element has unit \
    Frobenius norm";

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub config_sha256: String,
    pub delta_theta: f64,
    pub grid_nodes: usize,
    pub summation: &'static str,
    pub basis_order: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub provenance: Provenance,
    pub result: T,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorRoots {
    pub name: String,
    /// Roots of `det(zCG)`, descending modulus; the degree deficit shows up
    /// as roots at zero.
    pub roots: Vec<Complex>,
    pub moduli: Vec<f64>,
    pub schur: bool,
    /// Coefficients of `q(w) = det(zCG)`, `w = 1/z`, ascending powers.
    pub coefficients: Vec<Complex>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetScanReport {
    pub samples: usize,
    pub det_start: f64,
    pub det_end: f64,
    pub brackets: Vec<[f64; 2]>,
    pub csv_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub t_c: f64,
    pub lambda_c: MatrixSpec,
    pub lambda_c_coords: Vec<f64>,
    pub det_at_c: f64,
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub rank_threshold: f64,
    pub iterations: usize,
    pub bracket: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Bifurcation {
    pub critical: CriticalPoint,
    pub augmented_jacobian: MatrixSpec,
    pub augmented_singular_values: Vec<f64>,
    pub augmented_rank: usize,
    pub kernel_dimension: usize,
    pub kernel_basis: MatrixSpec,
    pub left_null_vector: Vec<f64>,
    pub reconstruction_error: f64,
    pub orthogonality_residual: f64,
    pub hessian_b: MatrixSpec,
    pub eigenvalues: [f64; 2],
    pub classification: momentmap::Classification,
}

#[derive(Debug, Clone, Serialize)]
pub struct Continuation {
    pub mode: momentmap::ContinuationMode,
    pub status: momentmap::ContinuationStatus,
    pub message: String,
    pub steps: usize,
    pub last_good_t: f64,
    pub final_residual: f64,
    pub target_norm: f64,
    pub solution: Option<MatrixSpec>,
    /// `‖Λ - Λ_end‖_F` for a converged run.
    pub distance_to_path_end: Option<f64>,
    pub csv_file: String,
    pub trace: Vec<momentmap::ContinuationStep>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauEntry {
    pub name: String,
    pub tau: MatrixSpec,
    pub tau_coords: Vec<f64>,
    /// Singular values of the central-difference Jacobian of `C ↦ τ(C)`.
    pub jacobian_singular_values: Vec<f64>,
    pub jacobian_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    /// `abs`, `rel` or `bound` (value must lie below the tolerance).
    pub kind: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub all_pass: bool,
    pub checks: Vec<GoldenCheck>,
    pub det_start: f64,
    pub det_end: f64,
    pub bifurcation: Bifurcation,
}

pub fn matrix(x: &RMat) -> MatrixSpec {
    MatrixSpec::from_matrix(x)
}

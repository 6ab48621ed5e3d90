//! Lyapunov-Schmidt reduction of the augmented map `H(Λ, t) = h(Λ) - p(t)`,
//! `p(t) = h(Λ⁽ᵗ⁾)`, at a critical point on the path, and the sign test on
//! the Hessian of the bifurcation equation.
//!
//! In coordinates `y = (x, t) ∈ R^{M+1}`, `J_H = [J_h(Λ) | -ṗ(t)]`. At a
//! critical point on the path `J_H` has rank `M - 1` and a two dimensional
//! kernel spanned by the columns of `V₂`. With `u_M` the left singular vector
//! of the zero singular value, the Hessian of the bifurcation equation is
//! `V₂ᵀ [Σ_j u_{jM} ∇²H_j] V₂`.

use nalgebra::{DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::basis::LambdaParam;
use crate::critical::{CriticalPointRecord, SegmentPath, DEFAULT_RANK_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, orthogonal_complement, svd, RMat};
use crate::moments::MomentContext;

/// Eigenvalues with magnitude below this fraction of the largest count as
/// zero in the classification.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// `M x (M+1)` Jacobian of `H` at `(Λ, t)`.
pub fn augmented_jacobian(ctx: &MomentContext, lambda: &LambdaParam, t: f64, path: &SegmentPath) -> Result<RMat> {
    let dim = ctx.dim();
    let jac = ctx.jacobian_matrix(lambda)?;
    let p_dot = ctx.dh_coords(&path.at(t), &path.direction())?;
    let mut out = RMat::zeros(dim, dim + 1);
    out.view_mut((0, 0), (dim, dim)).copy_from(&jac.entries);
    out.set_column(dim, &(-p_dot));
    Ok(out)
}

/// SVD-based splitting `R^{M+1} = range V₁ ⊕ range V₂`,
/// `R^M = range U₁ ⊕ span u_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct LSDecomposition {
    pub u1: RMat,
    pub u2: DVector<f64>,
    pub v1: RMat,
    /// Kernel basis, `(M+1) x 2`.
    pub v2: RMat,
    /// The `M - 1` nonzero singular values, descending.
    pub sigma: DVector<f64>,
    /// All `M` singular values of `J_H`, descending.
    pub all_singular_values: DVector<f64>,
}

impl LSDecomposition {
    /// `‖J - U₁ diag(σ) V₁ᵀ‖_F`.
    pub fn reconstruction_error(&self, j_aug: &RMat) -> f64 {
        let recon = &self.u1 * RMat::from_diagonal(&self.sigma) * self.v1.transpose();
        (j_aug - recon).norm()
    }

    /// `max(‖U₁ᵀu_M‖, ‖V₁ᵀV₂‖, ‖[V₁ V₂]ᵀ[V₁ V₂] - I‖)`.
    pub fn orthogonality_residual(&self) -> f64 {
        let a = (self.u1.transpose() * &self.u2).norm();
        let b = (self.v1.transpose() * &self.v2).norm();
        let v = RMat::from_columns(&self.v1.column_iter().chain(self.v2.column_iter()).collect::<Vec<_>>());
        let c = (v.transpose() * &v - RMat::identity(v.ncols(), v.ncols())).norm();
        a.max(b).max(c)
    }
}

pub fn ls_decompose(j_aug: &RMat, rank_threshold: f64) -> Result<LSDecomposition> {
    let dim = j_aug.nrows();
    if j_aug.ncols() != dim + 1 || dim < 2 {
        return Err(Error::DimensionMismatch {
            what: "augmented Jacobian",
            expected: "M x (M+1) with M >= 2".into(),
            found: format!("{} x {}", j_aug.nrows(), j_aug.ncols()),
        });
    }
    let s = svd(j_aug)?;
    let rank = numerical_rank(&s.sigma, rank_threshold);
    if rank != dim - 1 {
        return Err(Error::RankMismatch {
            expected: dim - 1,
            found: rank,
        });
    }
    let v = s.v_t.transpose();
    let u1 = s.u.columns(0, dim - 1).into_owned();
    let u2 = s.u.column(dim - 1).into_owned();
    let v1 = v.columns(0, dim - 1).into_owned();
    let complement = orthogonal_complement(&v);
    let v2 = RMat::from_columns(&[v.column(dim - 1), complement.column(0)]);
    Ok(LSDecomposition {
        u1,
        u2,
        v1,
        v2,
        sigma: s.sigma.rows(0, dim - 1).into_owned(),
        all_singular_values: s.sigma,
    })
}

/// Hessians `∇²H_j`, `j = 1..M`, each `(M+1) x (M+1)`: second partials of
/// `h` in the parameter block, zero mixed entries, `-⟨Λ_j, p̈(t)⟩` in the
/// `(t, t)` corner.
pub fn augmented_hessians(ctx: &MomentContext, lambda: &LambdaParam, t: f64, path: &SegmentPath) -> Result<Vec<RMat>> {
    let dim = ctx.dim();
    let inner = ctx.second_derivative_array(lambda)?;
    let dir = path.direction();
    let p_ddot = ctx.d2h_coords(&path.at(t), &dir, &dir)?;
    Ok(inner
        .into_iter()
        .enumerate()
        .map(|(j, slab)| {
            let mut h = RMat::zeros(dim + 1, dim + 1);
            h.view_mut((0, 0), (dim, dim)).copy_from(&slab);
            h[(dim, dim)] = -p_ddot[j];
            h
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Eigenvalues of distinct signs: two solution branches cross.
    SimpleBifurcation,
    /// Eigenvalues of the same sign: the zero is isolated.
    IsolatedZero,
    /// A (relatively) zero eigenvalue; the second-order test is silent.
    Degenerate,
}

pub fn classify(eigenvalues: [f64; 2]) -> Classification {
    let scale = eigenvalues[0].abs().max(eigenvalues[1].abs());
    if scale == 0.0 || eigenvalues.iter().any(|e| e.abs() < DEGENERACY_THRESHOLD * scale) {
        Classification::Degenerate
    } else if (eigenvalues[0] > 0.0) != (eigenvalues[1] > 0.0) {
        Classification::SimpleBifurcation
    } else {
        Classification::IsolatedZero
    }
}

/// `V₂ᵀ [Σ_j u_{jM} ∇²H_j] V₂`.
pub fn reduce_hessian(hessians: &[RMat], decomposition: &LSDecomposition) -> RMat {
    let size = hessians[0].nrows();
    let mut contracted = RMat::zeros(size, size);
    for (h, u) in hessians.iter().zip(decomposition.u2.iter()) {
        contracted += h * *u;
    }
    let b = decomposition.v2.transpose() * contracted * &decomposition.v2;
    (&b + b.transpose()) * 0.5
}

/// Ascending eigenvalues of a symmetric 2x2 matrix.
pub fn eigenvalues_2x2(b: &RMat) -> [f64; 2] {
    let m = Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
    let e = m.symmetric_eigenvalues();
    let (a, c) = (e[0], e[1]);
    if a <= c {
        [a, c]
    } else {
        [c, a]
    }
}

pub fn bifurcation_hessian(
    ctx: &MomentContext,
    critical: &CriticalPointRecord,
    path: &SegmentPath,
    decomposition: &LSDecomposition,
) -> Result<(RMat, [f64; 2])> {
    let hessians = augmented_hessians(ctx, &critical.lambda_c, critical.t_c, path)?;
    let b = reduce_hessian(&hessians, decomposition);
    let eig = eigenvalues_2x2(&b);
    Ok((b, eig))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationReport {
    pub critical: CriticalPointRecord,
    pub augmented_jacobian: RMat,
    pub decomposition: LSDecomposition,
    pub hessian_b: RMat,
    pub eigenvalues: [f64; 2],
    pub classification: Classification,
}

/// Full reduction at a critical point. Regular points are refused through
/// the rank check of [`ls_decompose`].
pub fn analyze(ctx: &MomentContext, path: &SegmentPath, critical: CriticalPointRecord) -> Result<BifurcationReport> {
    analyze_with_threshold(ctx, path, critical, DEFAULT_RANK_THRESHOLD)
}

pub fn analyze_with_threshold(
    ctx: &MomentContext,
    path: &SegmentPath,
    critical: CriticalPointRecord,
    rank_threshold: f64,
) -> Result<BifurcationReport> {
    let j_aug = augmented_jacobian(ctx, &critical.lambda_c, critical.t_c, path)?;
    let decomposition = ls_decompose(&j_aug, rank_threshold)?;
    let (hessian_b, eigenvalues) = bifurcation_hessian(ctx, &critical, path, &decomposition)?;
    Ok(BifurcationReport {
        classification: classify(eigenvalues),
        critical,
        augmented_jacobian: j_aug,
        decomposition,
        hessian_b,
        eigenvalues,
    })
}

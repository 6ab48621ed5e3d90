//! Sign changes of `det J_h` along a line segment of parameters and
//! bisection to the critical point.
//!
//! If the Jacobian were nonsingular on the (convex) feasible set, its
//! determinant could not change sign along any path in it. A bracket with
//! opposite signs therefore certifies a singular Jacobian inside.

use nalgebra::DVector;

use crate::basis::{HermitianBasis, LambdaParam};
use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::moments::MomentContext;
use crate::par;

pub const DEFAULT_TOL_T: f64 = 1e-8;
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_SCAN_SAMPLES: usize = 11;

/// `Λ⁽ᵗ⁾ = (1 - t) Λ⁽⁰⁾ + t Λ⁽¹⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPath {
    basis: HermitianBasis,
    pub start: LambdaParam,
    pub end: LambdaParam,
}

impl SegmentPath {
    pub fn new(basis: &HermitianBasis, start: LambdaParam, end: LambdaParam) -> Result<Self> {
        if start.coords.len() != basis.dim() || end.coords.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                what: "path endpoint coordinates",
                expected: basis.dim().to_string(),
                found: format!("{} and {}", start.coords.len(), end.coords.len()),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            start,
            end,
        })
    }

    pub fn at(&self, t: f64) -> LambdaParam {
        LambdaParam::lerp(&self.basis, &self.start, &self.end, t).expect("endpoint dimensions checked")
    }

    /// `Λ⁽¹⁾ - Λ⁽⁰⁾`.
    pub fn direction(&self) -> LambdaParam {
        self.basis
            .param(&self.end.coords - &self.start.coords)
            .expect("endpoint dimensions checked")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetSample {
    pub t: f64,
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetScan {
    pub samples: Vec<DetSample>,
    /// Adjacent sample pairs with strictly opposite determinant signs.
    pub brackets: Vec<(f64, f64)>,
}

/// `det J_h(Λ⁽ᵗ⁾)`, with infeasibility reported against `t`.
pub fn det_along(ctx: &MomentContext, path: &SegmentPath, t: f64) -> Result<f64> {
    match ctx.jacobian_matrix(&path.at(t)) {
        Ok(j) => Ok(j.determinant()),
        Err(Error::Infeasible { .. }) => Err(Error::InfeasiblePath { t }),
        Err(e) => Err(e),
    }
}

pub fn det_scan(ctx: &MomentContext, path: &SegmentPath, num_samples: usize) -> Result<DetScan> {
    if num_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "determinant scan needs at least 2 samples, got {num_samples}"
        )));
    }
    let last = (num_samples - 1) as f64;
    let samples = par::map_indexed(num_samples, ctx.parallel(), |i| {
        let t = i as f64 / last;
        det_along(ctx, path, t).map(|det| DetSample { t, det })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let brackets = samples
        .windows(2)
        .filter(|w| w[0].det * w[1].det < 0.0)
        .map(|w| (w[0].t, w[1].t))
        .collect();
    Ok(DetScan { samples, brackets })
}

/// Result of a scalar bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl Bisection {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisection on a sign change of `f` until the bracket is narrower than
/// `tol`. `f_lo` and `f_hi` are the values at the initial ends.
pub fn bisect_sign_change<F>(mut f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, tol: f64) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(f_lo * f_hi < 0.0) {
        return Err(Error::NoSignChange {
            t_lo: lo,
            t_hi: hi,
            det_lo: f_lo,
            det_hi: f_hi,
        });
    }
    if !(tol > 0.0) || !(hi > lo) {
        return Err(Error::InvalidInput(format!(
            "bisection needs lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"
        )));
    }
    let (mut lo, mut hi, mut f_lo) = (lo, hi, f_lo);
    let mut iterations = 0;
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(Bisection {
                lo: mid,
                hi: mid,
                iterations,
            });
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection { lo, hi, iterations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointRecord {
    pub t_c: f64,
    pub lambda_c: LambdaParam,
    pub det_at_c: f64,
    /// Singular values of `J_h(Λᶜ)`, descending.
    pub singular_values: DVector<f64>,
    /// Singular values above `rank_threshold · σ_max`.
    pub numerical_rank: usize,
    pub rank_threshold: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOptions {
    pub tol_t: f64,
    pub rank_threshold: f64,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            tol_t: DEFAULT_TOL_T,
            rank_threshold: DEFAULT_RANK_THRESHOLD,
        }
    }
}

pub fn bisect_critical(
    ctx: &MomentContext,
    path: &SegmentPath,
    bracket: (f64, f64),
    options: BisectOptions,
) -> Result<CriticalPointRecord> {
    let (lo, hi) = bracket;
    let f_lo = det_along(ctx, path, lo)?;
    let f_hi = det_along(ctx, path, hi)?;
    let b = bisect_sign_change(|t| det_along(ctx, path, t), lo, hi, f_lo, f_hi, options.tol_t)?;
    let t_c = b.midpoint();
    let lambda_c = path.at(t_c);
    let jac = ctx.jacobian_matrix(&lambda_c)?;
    let singular_values = jac.singular_values();
    Ok(CriticalPointRecord {
        t_c,
        det_at_c: jac.determinant(),
        numerical_rank: numerical_rank(&singular_values, options.rank_threshold),
        singular_values,
        rank_threshold: options.rank_threshold,
        lambda_c,
        iterations: b.iterations,
        bracket: (b.lo, b.hi),
    })
}

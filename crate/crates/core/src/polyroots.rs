//! Determinantal roots of `z·C·G(z)`.
//!
//! For the block shift filter `zCG(z)` is a matrix polynomial in `w = 1/z`
//! of degree `p`, so `q(w) = det(zCG)` has degree at most `m·p = n - m`.
//! The coefficients of `q` are recovered exactly by sampling on roots of
//! unity and an inverse DFT; the roots then come from the companion matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filter::RationalFilter;
use crate::linalg::{to_complex, CMat, RMat, C64};

/// Roots with modulus in `[1 - margin, 1 + margin]` count as on-circle.
pub const DEFAULT_SCHUR_MARGIN: f64 = 1e-9;

/// Relative threshold for pruning vanishing end coefficients.
const PRUNE_RELATIVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RootReport {
    /// Roots in the z-plane, by descending modulus.
    pub roots: Vec<C64>,
    pub moduli: Vec<f64>,
    /// All moduli strictly below `1 - margin`.
    pub schur: bool,
    /// Coefficients of `q(w) = det(zCG)` in ascending powers of `w = 1/z`.
    pub coefficients: Vec<C64>,
    /// Roots of `q` at `w = 0` (that is, at `z = ∞`), which are not listed.
    pub dropped_at_infinity: usize,
}

/// `det(zCG(z))` at a single point.
pub fn det_zcg(c: &CMat, filter: &RationalFilter, z: C64) -> Result<C64> {
    let g = filter.eval(z)?;
    Ok((c * g * z).determinant())
}

pub fn determinantal_roots(c: &RMat, filter: &RationalFilter, margin: f64) -> Result<RootReport> {
    let n = filter.state_dim();
    let m = filter.channel_dim();
    if c.shape() != (m, n) {
        return Err(Error::DimensionMismatch {
            what: "factor C",
            expected: format!("{m} x {n}"),
            found: format!("{} x {}", c.nrows(), c.ncols()),
        });
    }
    if c.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateFactor);
    }
    let degree = n - m;
    let cc = to_complex(c);
    let coefficients = interpolate(&cc, filter, degree, 0.0)?;

    let scale = coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale <= PRUNE_RELATIVE * c.norm().powi(m as i32) {
        return Err(Error::DegenerateFactor);
    }

    // an off-circle probe guards against filters where det(zCG) is not a
    // polynomial of the assumed degree
    let probe_w = C64::from_polar(0.5, 0.3);
    let direct = det_zcg(&cc, filter, probe_w.inv())?;
    if (direct - horner(&coefficients, probe_w)).norm() > 1e-8 * scale.max(direct.norm()) {
        return Err(Error::NotPolynomial { degree });
    }

    let mut lo = 0;
    let mut hi = coefficients.len();
    let threshold = PRUNE_RELATIVE * scale;
    while hi > lo && coefficients[hi - 1].norm() <= threshold {
        hi -= 1;
    }
    while lo < hi && coefficients[lo].norm() <= threshold {
        lo += 1;
    }
    let w_roots = companion_roots(&coefficients[lo..hi]);
    // w = ∞ roots (degree deficit) map to z = 0
    let at_origin = degree - (hi - 1);

    let mut roots: Vec<C64> = w_roots.iter().map(|w| w.inv()).collect();
    roots.extend(std::iter::repeat_n(C64::new(0.0, 0.0), at_origin));
    roots.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.im.total_cmp(&b.im)));
    let moduli: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
    let schur = moduli.iter().all(|r| *r < 1.0 - margin);
    Ok(RootReport {
        roots,
        moduli,
        schur,
        coefficients,
        dropped_at_infinity: lo,
    })
}

/// Coefficients of `q(w)` from samples at `w_k = e^{i(2πk/(d+1) + phase)}`.
pub fn interpolate(c: &CMat, filter: &RationalFilter, degree: usize, phase: f64) -> Result<Vec<C64>> {
    let count = degree + 1;
    let nodes: Vec<C64> = (0..count)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / count as f64 + phase))
        .collect();
    let values = nodes
        .iter()
        .map(|w| det_zcg(c, filter, w.inv()))
        .collect::<Result<Vec<_>>>()?;
    let inv = 1.0 / count as f64;
    Ok((0..count)
        .map(|j| {
            nodes
                .iter()
                .zip(&values)
                .map(|(w, q)| q * w.powi(-(j as i32)))
                .sum::<C64>()
                * inv
        })
        .collect())
}

fn horner(coefficients: &[C64], w: C64) -> C64 {
    coefficients.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + c)
}

/// Roots of `Σ c_j w^j` (ascending, nonzero leading coefficient).
fn companion_roots(coefficients: &[C64]) -> Vec<C64> {
    let d = coefficients.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    let lead = coefficients[d];
    let mut companion = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coefficients[i] / lead;
    }
    companion
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filter() -> RationalFilter {
        RationalFilter::block_shift(2, 1).unwrap()
    }

    /// Closed-form roots of `det(C1 + w C0)` for 2x2 blocks.
    fn quadratic_route(c: &RMat) -> Vec<C64> {
        let c0 = c.view((0, 0), (2, 2)).into_owned();
        let c1 = c.view((0, 2), (2, 2)).into_owned();
        // det(C1 + w C0) = a w² + b w + k
        let a = c0.determinant();
        let k = c1.determinant();
        let b = c0[(0, 0)] * c1[(1, 1)] + c1[(0, 0)] * c0[(1, 1)] - c0[(0, 1)] * c1[(1, 0)] - c1[(0, 1)] * c0[(1, 0)];
        let disc = C64::new(b * b - 4.0 * a * k, 0.0).sqrt();
        vec![(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)]
            .into_iter()
            .map(|w| w.inv())
            .collect()
    }

    fn assert_same_roots(got: &[C64], want: &[C64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for w in want {
            assert!(
                got.iter().any(|g| (g - w).norm() < tol),
                "root {w} not found in {got:?}"
            );
        }
    }

    #[test]
    fn companion_agrees_with_quadratic() {
        let c = RMat::from_row_slice(2, 4, &[0.3, -1.2, 0.7, 2.0, 1.1, 0.4, -0.5, 0.9]);
        let r = determinantal_roots(&c, &filter(), DEFAULT_SCHUR_MARGIN).unwrap();
        assert_same_roots(&r.roots, &quadratic_route(&c), 1e-12);
    }

    #[test]
    fn roots_annihilate_the_determinant() {
        let c = RMat::from_row_slice(2, 4, &[1.0, 2.0, -0.5, 0.3, 0.2, -1.0, 1.5, 0.8]);
        let f = filter();
        let r = determinantal_roots(&c, &f, DEFAULT_SCHUR_MARGIN).unwrap();
        let scale = r.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for z in &r.roots {
            let q = horner(&r.coefficients, z.inv());
            assert!(q.norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn coefficients_do_not_depend_on_nodes() {
        let c = to_complex(&RMat::from_row_slice(2, 4, &[1.0, 2.0, -0.5, 0.3, 0.2, -1.0, 1.5, 0.8]));
        let f = filter();
        let a = interpolate(&c, &f, 2, 0.0).unwrap();
        let b = interpolate(&c, &f, 2, 0.41).unwrap();
        let d = interpolate(&c, &f, 4, 0.0).unwrap();
        for j in 0..3 {
            assert!((a[j] - b[j]).norm() < 1e-10);
            assert!((a[j] - d[j]).norm() < 1e-10);
        }
        assert!(d[3].norm() < 1e-10 && d[4].norm() < 1e-10);
    }

    #[test]
    fn degree_deficit_and_infinite_roots() {
        let f = filter();
        // C = [0 | I]: zCG = I, q ≡ 1, both roots at z = 0
        let c = RMat::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let r = determinantal_roots(&c, &f, DEFAULT_SCHUR_MARGIN).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert!(r.moduli.iter().all(|m| *m == 0.0));
        assert!(r.schur);
        // C = [I | 0]: zCG = w I, q = w², both roots at z = ∞
        let c = RMat::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let r = determinantal_roots(&c, &f, DEFAULT_SCHUR_MARGIN).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.dropped_at_infinity, 2);
    }

    #[test]
    fn degenerate_and_on_circle() {
        let f = filter();
        assert!(matches!(
            determinantal_roots(&RMat::zeros(2, 4), &f, DEFAULT_SCHUR_MARGIN),
            Err(Error::DegenerateFactor)
        ));
        // rank-one C: det identically zero
        let c = RMat::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            determinantal_roots(&c, &f, DEFAULT_SCHUR_MARGIN),
            Err(Error::DegenerateFactor)
        ));
        // C1 + w C0 with C0 = diag(-1, 1), C1 = I: roots z = 1 and z = -1
        let c = RMat::from_row_slice(2, 4, &[-1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let r = determinantal_roots(&c, &f, DEFAULT_SCHUR_MARGIN).unwrap();
        assert!(!r.schur);
        assert!(r.moduli.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }
}

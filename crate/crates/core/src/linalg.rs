//! Small dense helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub fn to_complex(x: &RMat) -> CMat {
    x.map(|v| C64::new(v, 0.0))
}

/// `(X + X*) / 2`.
pub fn hermitize(x: &CMat) -> CMat {
    (x + x.adjoint()) * C64::new(0.5, 0.0)
}

pub fn symmetrize(x: &RMat) -> RMat {
    (x + x.transpose()) * 0.5
}

/// Frobenius inner product `trace(A B)` for real symmetric arguments.
pub fn trace_inner(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
/// `None` when a pivot is not strictly positive.
///
/// nalgebra's complex Cholesky takes complex square roots of the pivots and
/// so never rejects an indefinite matrix; the factorization is done here.
pub fn hpd_inverse(q: &CMat) -> Option<CMat> {
    let n = q.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = q[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let pivot = d.sqrt();
        l[(j, j)] = C64::new(pivot, 0.0);
        for i in j + 1..n {
            let mut v = q[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / pivot;
        }
    }
    // L^{-1} by forward substitution, then (L L*)^{-1} = L^{-*} L^{-1}
    let mut linv = CMat::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut v = if i == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in col..i {
                v -= l[(i, k)] * linv[(k, col)];
            }
            linv[(i, col)] = v / l[(i, i)];
        }
    }
    Some(linv.adjoint() * linv)
}

pub fn min_eigenvalue_hermitian(q: &CMat) -> f64 {
    hermitize(q)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Determinant through partially pivoted LU; the sign carries the
/// permutation parity.
pub fn determinant(a: &RMat) -> f64 {
    a.clone().lu().determinant()
}

/// Singular values sorted in descending order together with the factors.
pub struct SortedSvd {
    pub u: RMat,
    pub sigma: DVector<f64>,
    pub v_t: RMat,
}

pub fn svd(a: &RMat) -> Result<SortedSvd> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not produce U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce V^T".into()))?;
    Ok(SortedSvd {
        u,
        sigma: svd.singular_values,
        v_t,
    })
}

pub fn singular_values(a: &RMat) -> DVector<f64> {
    a.clone().svd(false, false).singular_values
}

/// Count of singular values above `relative * sigma_max`.
pub fn numerical_rank(sigma: &DVector<f64>, relative: f64) -> usize {
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > relative * max).count()
}

/// Condition number from singular values; infinite for a singular matrix.
pub fn condition_number(a: &RMat) -> f64 {
    let s = singular_values(a);
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn complex_condition_number(a: &CMat) -> f64 {
    let s = a.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unit vectors spanning the orthogonal complement of the orthonormal
/// columns of `q` (a `d x k` matrix with `k < d`), by modified Gram-Schmidt
/// against the standard basis.
pub fn orthogonal_complement(q: &RMat) -> RMat {
    let d = q.nrows();
    let missing = d - q.ncols();
    let mut basis: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut extra = Vec::with_capacity(missing);
    while extra.len() < missing {
        // pick the standard vector with the largest residual
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = -1.0;
        for i in 0..d {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&v);
                    v.axpy(-c, b, 1.0);
                }
            }
            let nv = v.norm();
            if nv > best_norm {
                best_norm = nv;
                best = Some(v);
            }
        }
        let v = best.expect("d > 0") / best_norm;
        basis.push(v.clone());
        extra.push(v);
    }
    RMat::from_columns(&extra)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_sign_follows_permutation() {
        let p = RMat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((determinant(&p) + 1.0).abs() < 1e-15);
        let a = RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        assert!((determinant(&a) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthonormal() {
        let q = RMat::from_row_slice(3, 1, &[1.0, 1.0, 0.0]) / 2f64.sqrt();
        let c = orthogonal_complement(&q);
        assert_eq!(c.ncols(), 2);
        let full = RMat::from_columns(&[q.column(0), c.column(0), c.column(1)]);
        let gram = full.transpose() * &full;
        assert!((gram - RMat::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn svd_is_descending() {
        let a = RMat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
        let s = svd(&a).unwrap();
        assert!(s.sigma[0] >= s.sigma[1]);
        assert!((s.sigma[0] - 3.0).abs() < 1e-14);
        assert_eq!(numerical_rank(&s.sigma, 1e-8), 2);
    }

    #[test]
    fn hpd_inverse_rejects_indefinite() {
        let q = to_complex(&RMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(hpd_inverse(&q).is_none());
        let q = to_complex(&RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let inv = hpd_inverse(&q).unwrap();
        assert!((q * inv - CMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn trace_inner_matches_definition() {
        let a = RMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = RMat::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(trace_inner(&a, &b), (&a * &b).trace());
    }
}

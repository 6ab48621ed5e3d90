//! Orthonormal coordinates on range Γ for the real covariance extension
//! problem: symmetric block-Toeplitz matrices of block size `m` with
//! `p + 1` block rows.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filter::{FrequencyGrid, RationalFilter};
use crate::linalg::{min_eigenvalue_hermitian, symmetrize, to_complex, trace_inner, RMat};
use crate::polyroots::{determinantal_roots, RootReport, DEFAULT_SCHUR_MARGIN};

/// Ordered orthonormal basis of range Γ under `⟨A, B⟩ = trace(AB)`.
///
/// Order: for each lag `k = 1..=p` the `m²` generators `e_ab` of the
/// lag-`k` block in row-major order, then the `m(m+1)/2` generators of the
/// diagonal block (`e_aa`, `e_ab + e_ba` for `a < b`, row-major over the
/// upper triangle). Each element is divided by its Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBasis {
    m: usize,
    p: usize,
    elements: Vec<RMat>,
}

impl HermitianBasis {
    pub fn block_toeplitz(m: usize, p: usize) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::InvalidInput(format!(
                "block Toeplitz basis needs m >= 1 and p >= 1, got m = {m}, p = {p}"
            )));
        }
        let mut elements = Vec::with_capacity(m * (m + 1) / 2 + p * m * m);
        for lag in 1..=p {
            for a in 0..m {
                for b in 0..m {
                    let mut block = RMat::zeros(m, m);
                    block[(a, b)] = 1.0;
                    elements.push(toeplitz_from_lag(m, p, lag, &block));
                }
            }
        }
        for a in 0..m {
            for b in a..m {
                let mut block = RMat::zeros(m, m);
                block[(a, b)] = 1.0;
                block[(b, a)] = 1.0;
                elements.push(toeplitz_from_lag(m, p, 0, &block));
            }
        }
        for e in &mut elements {
            let norm = e.norm();
            *e /= norm;
        }
        Ok(Self { m, p, elements })
    }

    pub fn elements(&self) -> &[RMat] {
        &self.elements
    }

    /// Number of basis elements `M = m(m+1)/2 + p m²`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Side of the represented matrices, `n = m(p+1)`.
    pub fn side(&self) -> usize {
        self.m * (self.p + 1)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn gram(&self) -> RMat {
        let d = self.dim();
        RMat::from_fn(d, d, |i, j| trace_inner(&self.elements[i], &self.elements[j]))
    }

    /// Coordinates `⟨Λ_k, X⟩`.
    pub fn coordinates(&self, x: &RMat) -> Result<DVector<f64>> {
        self.check_side(x)?;
        Ok(DVector::from_iterator(
            self.dim(),
            self.elements.iter().map(|e| trace_inner(e, x)),
        ))
    }

    pub fn assemble(&self, coords: &DVector<f64>) -> Result<RMat> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "coordinate vector",
                expected: self.dim().to_string(),
                found: coords.len().to_string(),
            });
        }
        let n = self.side();
        let mut out = RMat::zeros(n, n);
        for (c, e) in coords.iter().zip(&self.elements) {
            out += e * *c;
        }
        Ok(out)
    }

    pub fn param(&self, coords: DVector<f64>) -> Result<LambdaParam> {
        let matrix = self.assemble(&coords)?;
        Ok(LambdaParam { matrix, coords })
    }

    /// Orthogonal projection of a symmetric matrix onto range Γ.
    pub fn project(&self, x: &RMat) -> Result<LambdaParam> {
        let coords = self.coordinates(&symmetrize(x))?;
        self.param(coords)
    }

    /// Assembles lag blocks `(Λ_0, Λ_1, …, Λ_p)`; `Λ_0` is symmetrized.
    pub fn from_blocks(&self, blocks: &[RMat]) -> Result<LambdaParam> {
        if blocks.len() != self.p + 1 {
            return Err(Error::DimensionMismatch {
                what: "lag blocks",
                expected: (self.p + 1).to_string(),
                found: blocks.len().to_string(),
            });
        }
        let n = self.side();
        let mut x = RMat::zeros(n, n);
        for (lag, blk) in blocks.iter().enumerate() {
            if blk.shape() != (self.m, self.m) {
                return Err(Error::DimensionMismatch {
                    what: "lag block",
                    expected: format!("{0} x {0}", self.m),
                    found: format!("{} x {}", blk.nrows(), blk.ncols()),
                });
            }
            x += toeplitz_from_lag(self.m, self.p, lag, blk);
        }
        self.project(&x)
    }

    /// Lag block `Λ_k` (the block in block-row `k`, block-column 0).
    pub fn block(&self, lambda: &LambdaParam, lag: usize) -> RMat {
        lambda.matrix.view((lag * self.m, 0), (self.m, self.m)).into_owned()
    }

    fn check_side(&self, x: &RMat) -> Result<()> {
        let n = self.side();
        if x.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "range-gamma matrix",
                expected: format!("{n} x {n}"),
                found: format!("{} x {}", x.nrows(), x.ncols()),
            });
        }
        Ok(())
    }
}

/// Block-Toeplitz matrix carrying `block` at lag `lag` (and its transpose
/// above the diagonal). For `lag = 0` the block is placed on every diagonal
/// position; callers pass symmetric blocks there.
fn toeplitz_from_lag(m: usize, p: usize, lag: usize, block: &RMat) -> RMat {
    let n = m * (p + 1);
    let mut x = RMat::zeros(n, n);
    for col in 0..=(p - lag) {
        let row = col + lag;
        let mut lower = x.view_mut((row * m, col * m), (m, m));
        lower += block;
        if lag > 0 {
            let mut upper = x.view_mut((col * m, row * m), (m, m));
            upper += block.transpose();
        }
    }
    x
}

pub fn build_basis(m: usize, p: usize) -> Result<HermitianBasis> {
    HermitianBasis::block_toeplitz(m, p)
}

/// A point of range Γ held both as a matrix and as basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaParam {
    pub matrix: RMat,
    pub coords: DVector<f64>,
}

impl LambdaParam {
    /// `(1 - t) a + t b`, formed on coordinates as `a + t (b - a)` so that
    /// equal endpoints give a constant path; `t = 1` returns `b` exactly.
    pub fn lerp(basis: &HermitianBasis, a: &LambdaParam, b: &LambdaParam, t: f64) -> Result<Self> {
        if t == 1.0 {
            return basis.param(b.coords.clone());
        }
        basis.param(&a.coords + (&b.coords - &a.coords) * t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            matrix: &self.matrix * alpha,
            coords: &self.coords * alpha,
        }
    }
}

pub fn project(x: &RMat, basis: &HermitianBasis) -> Result<LambdaParam> {
    basis.project(x)
}

/// Real `m x n` factor `C` with `det(zCG)` free of unit-circle roots.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorC {
    c: RMat,
    roots: RootReport,
}

impl FactorC {
    pub fn new(c: RMat, filter: &RationalFilter) -> Result<Self> {
        let roots = determinantal_roots(&c, filter, DEFAULT_SCHUR_MARGIN)?;
        if let Some(z) = roots.moduli.iter().find(|r| (**r - 1.0).abs() <= DEFAULT_SCHUR_MARGIN) {
            return Err(Error::RootOnCircle { modulus: *z });
        }
        Ok(Self { c, roots })
    }

    pub fn matrix(&self) -> &RMat {
        &self.c
    }

    pub fn roots(&self) -> &RootReport {
        &self.roots
    }
}

/// `Λ = Π_{range Γ}(CᵀC)`, so that `G*ΛG = (CG)*(CG)` on the circle.
pub fn lambda_from_factor(c: &FactorC, basis: &HermitianBasis) -> Result<LambdaParam> {
    basis.project(&(c.c.transpose() * &c.c))
}

/// `min_k λ_min(G*(θ_k) Λ G(θ_k))`; `Λ ∈ L₊` iff the result is positive.
pub fn feasibility_check(filter: &RationalFilter, lambda: &LambdaParam, grid: &FrequencyGrid) -> Result<f64> {
    let l = to_complex(&lambda.matrix);
    let g = filter.sample(grid)?;
    Ok(g.iter()
        .map(|gk| min_eigenvalue_hermitian(&(gk.adjoint() * &l * gk)))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_block_toeplitz(x: &RMat, m: usize, p: usize) -> bool {
        let blk = |i: usize, j: usize| x.view((i * m, j * m), (m, m)).into_owned();
        for i in 0..=p {
            for j in 0..=p {
                let reference = if i >= j {
                    blk(i - j, 0)
                } else {
                    blk(j - i, 0).transpose()
                };
                if (blk(i, j) - reference).norm() > 1e-15 {
                    return false;
                }
            }
        }
        (x - x.transpose()).norm() < 1e-15
    }

    #[test]
    fn seven_dim_basis_is_orthonormal() {
        let b = build_basis(2, 1).unwrap();
        assert_eq!(b.dim(), 7);
        assert!((b.gram() - RMat::identity(7, 7)).norm() < 1e-12);
        for e in b.elements() {
            assert!(is_block_toeplitz(e, 2, 1));
        }
    }

    #[test]
    fn normalization_constants_match_listing() {
        let b = build_basis(2, 1).unwrap();
        let s2 = 2f64.sqrt();
        let norms = [s2, s2, s2, s2, s2, 2.0, s2];
        // unnormalized generators have a single nonzero value 1, so the
        // normalized nonzero magnitude is 1 / norm
        for (e, n) in b.elements().iter().zip(norms) {
            let max = e.iter().copied().fold(0.0, f64::max);
            assert!((max - 1.0 / n).abs() < 1e-15);
        }
        // first element: e11 in the lower lag-1 block
        assert!(b.elements()[0][(2, 0)] > 0.0 && b.elements()[0][(0, 2)] > 0.0);
        // second element: e12 in Λ1, i.e. (2, 1) below and (1, 2) above
        assert!(b.elements()[1][(2, 1)] > 0.0 && b.elements()[1][(1, 2)] > 0.0);
        // sixth element: off-diagonal of Λ0
        assert!(b.elements()[5][(0, 1)] > 0.0 && b.elements()[5][(3, 2)] > 0.0);
    }

    #[test]
    fn scalar_and_general_dimensions() {
        assert_eq!(build_basis(1, 1).unwrap().dim(), 2);
        for (m, p) in [(1, 3), (2, 2), (3, 1), (3, 2)] {
            let b = build_basis(m, p).unwrap();
            assert_eq!(b.dim(), m * (m + 1) / 2 + p * m * m);
            assert!((b.gram() - RMat::identity(b.dim(), b.dim())).norm() < 1e-12);
            for e in b.elements() {
                assert!(is_block_toeplitz(e, m, p));
            }
        }
        assert!(build_basis(0, 1).is_err());
        assert!(build_basis(2, 0).is_err());
    }

    #[test]
    fn projection_is_idempotent_on_toeplitz() {
        let b = build_basis(2, 1).unwrap();
        let coords = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 4.0, -0.7, 1.1]);
        let l = b.param(coords.clone()).unwrap();
        let again = project(&l.matrix, &b).unwrap();
        assert!((again.matrix - &l.matrix).norm() < 1e-14);
        assert!((again.coords - coords).norm() < 1e-14);
    }

    #[test]
    fn trailing_identity_factor() {
        let filter = RationalFilter::block_shift(2, 1).unwrap();
        let b = build_basis(2, 1).unwrap();
        let c = RMat::from_row_slice(2, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let l = lambda_from_factor(&FactorC::new(c, &filter).unwrap(), &b).unwrap();
        assert!((b.block(&l, 0) - RMat::identity(2, 2) * 0.5).norm() < 1e-15);
        assert!(b.block(&l, 1).norm() < 1e-15);
    }

    #[test]
    fn from_blocks_roundtrip() {
        let b = build_basis(2, 1).unwrap();
        let l0 = RMat::from_row_slice(2, 2, &[4.0, 0.5, 0.5, 1.0]);
        let l1 = RMat::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.25]);
        let l = b.from_blocks(&[l0.clone(), l1.clone()]).unwrap();
        assert!((b.block(&l, 0) - l0).norm() < 1e-14);
        assert!((b.block(&l, 1) - l1).norm() < 1e-14);
    }

    #[test]
    fn feasibility_examples() {
        let filter = RationalFilter::block_shift(2, 1).unwrap();
        let grid = FrequencyGrid::new(1e-2).unwrap();
        let b = build_basis(2, 1).unwrap();
        let ident = b.project(&RMat::identity(4, 4)).unwrap();
        assert!((feasibility_check(&filter, &ident, &grid).unwrap() - 2.0).abs() < 1e-12);
        let neg = ident.scaled(-1.0);
        assert!((feasibility_check(&filter, &neg, &grid).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_sizes() {
        let b = build_basis(2, 1).unwrap();
        assert!(b.project(&RMat::zeros(3, 3)).is_err());
        assert!(b.param(DVector::zeros(6)).is_err());
    }
}

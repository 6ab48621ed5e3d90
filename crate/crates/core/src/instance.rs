//! The two-channel, lag-one covariance extension instance whose moment map
//! has a critical point: shift filter with `m = 2`, `p = 1`, prior factor
//! `K` and the path endpoint factors `C⁽⁰⁾`, `C⁽¹⁾`.

use crate::basis::{build_basis, lambda_from_factor, FactorC, HermitianBasis, LambdaParam};
use crate::critical::SegmentPath;
use crate::error::Result;
use crate::filter::{FrequencyGrid, RationalFilter};
use crate::linalg::RMat;
use crate::moments::{MomentContext, PriorFactor};

pub const M: usize = 2;
pub const P: usize = 1;

/// Prior factor, `W(z) = zKG(z)`.
pub const K: [[f64; 4]; 2] = [[-0.22, -1.23, 2.22, 0.0], [-1.11, -0.96, 1.14, 2.49]];

/// Factor of the path start `Λ⁽⁰⁾`.
pub const C0: [[f64; 4]; 2] = [[-1.08, -0.57, 2.45, 0.0], [0.84, -0.08, 1.01, 0.78]];

/// Factor of the path end `Λ⁽¹⁾`.
pub const C1: [[f64; 4]; 2] = [[0.63, 0.67, 1.45, 0.0], [1.68, -0.61, 1.04, 2.0]];

pub fn matrix(rows: &[[f64; 4]; 2]) -> RMat {
    RMat::from_fn(2, 4, |i, j| rows[i][j])
}

/// Filter, basis and the three factors, validated.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub filter: RationalFilter,
    pub basis: HermitianBasis,
    pub k: RMat,
    pub c0: FactorC,
    pub c1: FactorC,
}

impl Counterexample {
    pub fn new() -> Result<Self> {
        let filter = RationalFilter::block_shift(M, P)?;
        let basis = build_basis(M, P)?;
        let c0 = FactorC::new(matrix(&C0), &filter)?;
        let c1 = FactorC::new(matrix(&C1), &filter)?;
        Ok(Self {
            filter,
            basis,
            k: matrix(&K),
            c0,
            c1,
        })
    }

    pub fn context(&self, delta_theta: f64) -> Result<MomentContext> {
        MomentContext::new(
            self.filter.clone(),
            PriorFactor::outer(self.k.clone(), &self.filter)?,
            FrequencyGrid::new(delta_theta)?,
            self.basis.clone(),
        )
    }

    /// Same filter and grid with the identity prior.
    pub fn identity_prior_context(&self, delta_theta: f64) -> Result<MomentContext> {
        MomentContext::new(
            self.filter.clone(),
            PriorFactor::Identity,
            FrequencyGrid::new(delta_theta)?,
            self.basis.clone(),
        )
    }

    pub fn lambda0(&self) -> Result<LambdaParam> {
        lambda_from_factor(&self.c0, &self.basis)
    }

    pub fn lambda1(&self) -> Result<LambdaParam> {
        lambda_from_factor(&self.c1, &self.basis)
    }

    pub fn path(&self) -> Result<SegmentPath> {
        SegmentPath::new(&self.basis, self.lambda0()?, self.lambda1()?)
    }
}

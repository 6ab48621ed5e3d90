#![allow(dead_code)]

use momentmap::{HermitianBasis, LambdaParam, MomentContext};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coords(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-scale..scale))
}

pub fn identity_param(basis: &HermitianBasis) -> LambdaParam {
    let n = basis.side();
    basis.project(&nalgebra::DMatrix::identity(n, n)).unwrap()
}

/// `I + E`, with `E` a random element of range Γ, redrawn until `G*ΛG`
/// stays clearly positive on the grid.
pub fn random_feasible(ctx: &MomentContext, rng: &mut ChaCha8Rng, scale: f64) -> LambdaParam {
    let basis = ctx.basis();
    let id = identity_param(basis);
    loop {
        let lambda = basis
            .param(&id.coords + random_coords(rng, basis.dim(), scale))
            .unwrap();
        if ctx.feasibility_check(&lambda) > 0.05 {
            return lambda;
        }
    }
}

/// Random unit-norm direction in range Γ.
pub fn random_direction(basis: &HermitianBasis, rng: &mut ChaCha8Rng) -> LambdaParam {
    let v = random_coords(rng, basis.dim(), 1.0);
    let norm = v.norm();
    basis.param(v / norm).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

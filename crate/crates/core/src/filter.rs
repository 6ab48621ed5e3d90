//! Rational filter bank `G(z) = (zI - A)^{-1} B` on the unit circle and the
//! quadrature operators built on it.
//!
//! All integrals are normalized circle integrals `∫ F(e^{iθ}) dθ/2π`,
//! approximated by the rectangle rule on an equidistant grid over `(-π, π]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, to_complex, CMat, RMat, C64};
use crate::par;

/// Discrete-time filter `G(z) = (zI - A)^{-1} B`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFilter {
    a: CMat,
    b: CMat,
}

impl RationalFilter {
    /// Validates stability of `A`, full column rank of `B` and reachability.
    pub fn new(a: CMat, b: CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::InvalidFilter(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                what: "filter input matrix B",
                expected: format!("{n} x m"),
                found: format!("{} x {}", b.nrows(), b.ncols()),
            });
        }
        let m = b.ncols();

        let radius = spectral_radius(&a)?;
        if radius >= 1.0 {
            return Err(Error::InvalidFilter(format!(
                "A is not stable: spectral radius {radius}"
            )));
        }
        if complex_rank(&b) < m {
            return Err(Error::InvalidFilter("B does not have full column rank".into()));
        }
        let mut blocks = Vec::with_capacity(n);
        let mut power = b.clone();
        for _ in 0..n {
            blocks.push(power.clone());
            power = &a * power;
        }
        let mut reach = CMat::zeros(n, n * m);
        for (k, blk) in blocks.iter().enumerate() {
            reach.view_mut((0, k * m), (n, m)).copy_from(blk);
        }
        if complex_rank(&reach) < n {
            return Err(Error::InvalidFilter("(A, B) is not reachable".into()));
        }
        Ok(Self { a, b })
    }

    pub fn from_real(a: &RMat, b: &RMat) -> Result<Self> {
        Self::new(to_complex(a), to_complex(b))
    }

    /// Block shift filter of the covariance extension problem with `m`
    /// channels and maximal lag `p`: `G(z) = [z^{-(p+1)} I; ...; z^{-1} I]`.
    pub fn block_shift(m: usize, p: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("channel dimension m must be >= 1".into()));
        }
        let n = m * (p + 1);
        let mut a = RMat::zeros(n, n);
        for i in 0..n - m {
            a[(i, i + m)] = 1.0;
        }
        let mut b = RMat::zeros(n, m);
        for i in 0..m {
            b[(n - m + i, i)] = 1.0;
        }
        Self::from_real(&a, &b)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn channel_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    /// `G(z)` as an `n x m` matrix, by a linear solve against `zI - A`.
    pub fn eval(&self, z: C64) -> Result<CMat> {
        let n = self.state_dim();
        let shifted = CMat::identity(n, n) * z - &self.a;
        shifted
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::InvalidFilter(format!("zI - A singular at z = {z}")))
    }

    /// `G(e^{iθ})` at every grid angle.
    pub fn sample(&self, grid: &FrequencyGrid) -> Result<Vec<CMat>> {
        grid.angles()
            .iter()
            .map(|&t| self.eval(C64::from_polar(1.0, t)))
            .collect()
    }
}

fn spectral_radius(a: &CMat) -> Result<f64> {
    let eig = a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("complex Schur form did not converge".into()))?;
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn complex_rank(x: &CMat) -> usize {
    let s = x.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&v| v > 1e-10 * max.max(f64::MIN_POSITIVE)).count()
}

/// `G(z)` for a filter; thin wrapper kept for symmetry with the other
/// operators of this module.
pub fn eval_filter(filter: &RationalFilter, z: C64) -> Result<CMat> {
    filter.eval(z)
}

/// Equidistant angles `θ_k = -π + kΔθ`, `k = 1..N`, ending exactly at `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    angles: Vec<f64>,
    step: f64,
}

impl FrequencyGrid {
    /// Grid with `N = round(2π/Δθ)` nodes; the realized step is `2π/N`.
    pub fn new(delta_theta: f64) -> Result<Self> {
        if !delta_theta.is_finite() || delta_theta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "grid step must be positive and finite, got {delta_theta}"
            )));
        }
        let n = (2.0 * PI / delta_theta).round();
        if n < 1.0 {
            return Err(Error::InvalidInput(format!(
                "grid step {delta_theta} exceeds the circle length"
            )));
        }
        Ok(Self::with_nodes(n as usize))
    }

    /// Grid with exactly `n` nodes. `θ_{N-k} = -θ_k` holds bitwise.
    pub fn with_nodes(n: usize) -> Self {
        assert!(n > 0, "grid needs at least one node");
        let nf = n as f64;
        let angles = (1..=n).map(|k| PI * ((2 * k) as f64 - nf) / nf).collect();
        Self {
            angles,
            step: 2.0 * PI / nf,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Quadrature weight `Δθ/2π = 1/N`.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }
}

pub fn make_grid(delta_theta: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::new(delta_theta)
}

/// Summation order of the rectangle rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Summation {
    /// Ascending grid index, single-threaded. Golden values use this.
    #[default]
    Sequential,
    /// Fixed-tree pairwise summation; leaves may be evaluated on the rayon
    /// pool. Deterministic, but not bitwise equal to `Sequential`.
    Pairwise,
}

/// Sum `(1/N) Σ_k f(k)` over grid nodes in the requested order.
pub(crate) fn quadrature<T, F>(len: usize, summation: Summation, parallel: bool, zero: DMatrix<T>, f: F) -> DMatrix<T>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
    F: Fn(usize) -> DMatrix<T> + Sync,
{
    let add = |acc: &mut DMatrix<T>, x: &DMatrix<T>| *acc += x;
    let mut total = match summation {
        Summation::Sequential => {
            let mut acc = zero;
            for k in 0..len {
                acc += f(k);
            }
            acc
        }
        Summation::Pairwise => par::pairwise_sum(0, len, parallel, &zero, &f, &add),
    };
    let w = 1.0 / len as f64;
    total.iter_mut().for_each(|v| *v = v.scale(w));
    total
}

/// Samples of a matrix-valued function on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSamples {
    values: Vec<CMat>,
    side: usize,
    hermitian: bool,
}

impl MatrixSamples {
    pub fn new(values: Vec<CMat>, hermitian: bool) -> Result<Self> {
        let side = values.first().map(|v| v.nrows()).unwrap_or(0);
        for v in &values {
            if v.nrows() != side || v.ncols() != side {
                return Err(Error::DimensionMismatch {
                    what: "matrix samples",
                    expected: format!("{side} x {side}"),
                    found: format!("{} x {}", v.nrows(), v.ncols()),
                });
            }
            if hermitian {
                let scale = v.norm().max(1.0);
                if (v - v.adjoint()).norm() > 1e-12 * scale {
                    return Err(Error::InvalidInput("sample flagged Hermitian is not Hermitian".into()));
                }
            }
        }
        Ok(Self {
            values,
            side,
            hermitian,
        })
    }

    /// Samples `f(θ_k)` over the grid.
    pub fn from_fn(grid: &FrequencyGrid, hermitian: bool, f: impl Fn(f64) -> CMat) -> Result<Self> {
        Self::new(grid.angles().iter().map(|&t| f(t)).collect(), hermitian)
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rectangle rule `(Δθ/2π) Σ_k F(θ_k)` in ascending `k`.
pub fn integrate(samples: &MatrixSamples, grid: &FrequencyGrid) -> Result<CMat> {
    integrate_with(samples, grid, Summation::Sequential, false)
}

pub fn integrate_with(
    samples: &MatrixSamples,
    grid: &FrequencyGrid,
    summation: Summation,
    parallel: bool,
) -> Result<CMat> {
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "samples vs grid",
            expected: grid.len().to_string(),
            found: samples.len().to_string(),
        });
    }
    let side = samples.side();
    let out = quadrature(grid.len(), summation, parallel, CMat::zeros(side, side), |k| {
        samples.values[k].clone()
    });
    Ok(if samples.hermitian { hermitize(&out) } else { out })
}

/// `Γ(Φ) = ∫ G Φ G*`.
pub fn gamma_apply(filter: &RationalFilter, phi: &MatrixSamples, grid: &FrequencyGrid) -> Result<CMat> {
    let m = filter.channel_dim();
    if phi.side() != m {
        return Err(Error::DimensionMismatch {
            what: "spectral density side",
            expected: m.to_string(),
            found: phi.side().to_string(),
        });
    }
    if phi.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "samples vs grid",
            expected: grid.len().to_string(),
            found: phi.len().to_string(),
        });
    }
    let g = filter.sample(grid)?;
    let n = filter.state_dim();
    let out = quadrature(grid.len(), Summation::Sequential, false, CMat::zeros(n, n), |k| {
        &g[k] * &phi.values[k] * g[k].adjoint()
    });
    Ok(hermitize(&out))
}

/// `Γ*(X)(z) = G*(z) X G(z)`.
pub fn gamma_adjoint(filter: &RationalFilter, x: &CMat, z: C64) -> Result<CMat> {
    let n = filter.state_dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "gamma adjoint argument",
            expected: format!("{n} x {n}"),
            found: format!("{} x {}", x.nrows(), x.ncols()),
        });
    }
    let g = filter.eval(z)?;
    Ok(g.adjoint() * x * g)
}

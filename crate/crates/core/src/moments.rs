//! The moment map `h(Λ) = ∫ G W (G*ΛG)^{-1} W* G*`, its first and second
//! Fréchet derivatives, the adjoint of the first derivative, the matrix
//! representation in an orthonormal basis of range Γ, and the alternative
//! map `τ(C) = ∫ G (CG)^{-1} Ψ (CG)^{-*} G*`.
//!
//! Every map is evaluated by the rectangle rule on the context's grid. The
//! per-node filter values `G(θ_k)`, outer factor values `W(θ_k)` and basis
//! images `G*Λ_j G` are computed once when the context is built.
//!
//! Parameters live in the real symmetric case, so the quadrature results are
//! real up to roundoff (the grid is symmetric under `θ -> -θ`); the real part
//! is returned.

use nalgebra::DVector;

use crate::basis::{FactorC, HermitianBasis, LambdaParam};
use crate::error::{Error, Result};
use crate::filter::{quadrature, FrequencyGrid, RationalFilter, Summation};
use crate::linalg::{
    complex_condition_number, determinant, hpd_inverse, min_eigenvalue_hermitian, singular_values, to_complex, CMat,
    RMat, C64,
};
use crate::par;
use crate::polyroots::{determinantal_roots, DEFAULT_SCHUR_MARGIN};

/// Condition number above which `CG` is treated as singular in `τ`.
pub const TAU_CONDITION_MAX: f64 = 1e12;

/// Outer factor of the prior `Ψ = W W*`.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorFactor {
    /// `Ψ = I`, `W = I`.
    Identity,
    /// `W(z) = z K G(z)`, so `Ψ = K G G* Kᵀ`.
    Outer(RMat),
}

impl PriorFactor {
    /// Checks that `det(zKG)` is Schur, which makes `zKG` the outer factor.
    pub fn outer(k: RMat, filter: &RationalFilter) -> Result<Self> {
        let roots = determinantal_roots(&k, filter, DEFAULT_SCHUR_MARGIN)?;
        if !roots.schur {
            let worst = roots.moduli.iter().copied().fold(0.0, f64::max);
            return Err(Error::InvalidInput(format!(
                "prior factor zKG is not Schur: largest determinantal root modulus {worst}"
            )));
        }
        Ok(Self::Outer(k))
    }

    fn eval(&self, z: C64, g: &CMat) -> CMat {
        match self {
            Self::Identity => CMat::identity(g.ncols(), g.ncols()),
            Self::Outer(k) => to_complex(k) * g * z,
        }
    }
}

struct Node {
    theta: f64,
    g: CMat,
    g_adj: CMat,
    w: CMat,
    w_adj: CMat,
    /// `G*(θ) Λ_j G(θ)` for every basis element.
    basis_adj: Vec<CMat>,
}

/// Evaluation context: filter, prior, grid, basis and summation options.
pub struct MomentContext {
    filter: RationalFilter,
    prior: PriorFactor,
    grid: FrequencyGrid,
    basis: HermitianBasis,
    summation: Summation,
    parallel: bool,
    nodes: Vec<Node>,
}

impl std::fmt::Debug for MomentContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentContext")
            .field("state_dim", &self.filter.state_dim())
            .field("channel_dim", &self.filter.channel_dim())
            .field("prior", &self.prior)
            .field("grid_len", &self.grid.len())
            .field("basis_dim", &self.basis.dim())
            .field("summation", &self.summation)
            .field("parallel", &self.parallel)
            .finish()
    }
}

impl MomentContext {
    pub fn new(filter: RationalFilter, prior: PriorFactor, grid: FrequencyGrid, basis: HermitianBasis) -> Result<Self> {
        let n = filter.state_dim();
        let m = filter.channel_dim();
        if basis.side() != n || basis.m() != m {
            return Err(Error::DimensionMismatch {
                what: "basis vs filter",
                expected: format!("n = {n}, m = {m}"),
                found: format!("n = {}, m = {}", basis.side(), basis.m()),
            });
        }
        if let PriorFactor::Outer(k) = &prior {
            if k.shape() != (m, n) {
                return Err(Error::DimensionMismatch {
                    what: "prior factor K",
                    expected: format!("{m} x {n}"),
                    found: format!("{} x {}", k.nrows(), k.ncols()),
                });
            }
        }
        let elements: Vec<CMat> = basis.elements().iter().map(to_complex).collect();
        let mut nodes = Vec::with_capacity(grid.len());
        for &theta in grid.angles() {
            let z = C64::from_polar(1.0, theta);
            let g = filter.eval(z)?;
            let g_adj = g.adjoint();
            let w = prior.eval(z, &g);
            let w_adj = w.adjoint();
            let psi = &w * &w_adj;
            if min_eigenvalue_hermitian(&psi) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "prior is not coercive: Ψ singular at theta = {theta}"
                )));
            }
            let basis_adj = elements.iter().map(|e| &g_adj * e * &g).collect();
            nodes.push(Node {
                theta,
                g,
                g_adj,
                w,
                w_adj,
                basis_adj,
            });
        }
        Ok(Self {
            filter,
            prior,
            grid,
            basis,
            summation: Summation::Sequential,
            parallel: false,
            nodes,
        })
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    /// Allows independent evaluations (matrix entries, path samples) and
    /// pairwise quadrature leaves to run on the rayon pool. Results do not
    /// depend on this flag.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn filter(&self) -> &RationalFilter {
        &self.filter
    }

    pub fn prior(&self) -> &PriorFactor {
        &self.prior
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn basis(&self) -> &HermitianBasis {
        &self.basis
    }

    pub fn summation(&self) -> Summation {
        self.summation
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `min_k λ_min(G*ΛG)` over the grid.
    pub fn feasibility_check(&self, lambda: &LambdaParam) -> f64 {
        let l = to_complex(&lambda.matrix);
        self.nodes
            .iter()
            .map(|nd| min_eigenvalue_hermitian(&(&nd.g_adj * &l * &nd.g)))
            .fold(f64::INFINITY, f64::min)
    }

    /// `(G*ΛG)^{-1}` at every node.
    fn inverse_spectra(&self, lambda: &LambdaParam) -> Result<Vec<CMat>> {
        let n = self.filter.state_dim();
        if lambda.matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "parameter matrix",
                expected: format!("{n} x {n}"),
                found: format!("{} x {}", lambda.matrix.nrows(), lambda.matrix.ncols()),
            });
        }
        let l = to_complex(&lambda.matrix);
        par::map_indexed(self.nodes.len(), self.parallel, |k| {
            let nd = &self.nodes[k];
            hpd_inverse(&(&nd.g_adj * &l * &nd.g)).ok_or(Error::Infeasible { theta: nd.theta })
        })
        .into_iter()
        .collect()
    }

    /// `∫ G X(θ) G*` for an `m x m` integrand, returned as a real symmetric
    /// matrix.
    fn lift<F>(&self, inner: F) -> RMat
    where
        F: Fn(&Node, usize) -> CMat + Sync,
    {
        let n = self.filter.state_dim();
        let total = quadrature(
            self.nodes.len(),
            self.summation,
            self.parallel,
            CMat::zeros(n, n),
            |k| {
                let nd = &self.nodes[k];
                &nd.g * inner(nd, k) * &nd.g_adj
            },
        );
        let re = total.map(|v| v.re);
        (&re + re.transpose()) * 0.5
    }

    /// Real scalar quadrature `(1/N) Σ_k f(k)` of an `r x c` real array.
    fn reduce<F>(&self, rows: usize, cols: usize, f: F) -> RMat
    where
        F: Fn(&Node, usize) -> RMat + Sync,
    {
        quadrature(
            self.nodes.len(),
            self.summation,
            self.parallel,
            RMat::zeros(rows, cols),
            |k| f(&self.nodes[k], k),
        )
    }

    fn adjoint_image(&self, nd: &Node, delta: &CMat) -> CMat {
        &nd.g_adj * delta * &nd.g
    }

    pub fn h_map(&self, lambda: &LambdaParam) -> Result<RMat> {
        let qinv = self.inverse_spectra(lambda)?;
        Ok(self.lift(|nd, k| &nd.w * &qinv[k] * &nd.w_adj))
    }

    /// Coordinates of `h(Λ)` in the basis.
    pub fn h_coords(&self, lambda: &LambdaParam) -> Result<DVector<f64>> {
        self.basis.coordinates(&self.h_map(lambda)?)
    }

    /// `∇h(Λ)(δΛ) = -∫ G W Q^{-1} Γ*(δΛ) Q^{-1} W* G*`, `Q = G*ΛG`.
    pub fn dh_apply(&self, lambda: &LambdaParam, delta: &LambdaParam) -> Result<RMat> {
        let qinv = self.inverse_spectra(lambda)?;
        let d = to_complex(&delta.matrix);
        Ok(self.lift(|nd, k| {
            let s = self.adjoint_image(nd, &d);
            -(&nd.w * &qinv[k] * s * &qinv[k] * &nd.w_adj)
        }))
    }

    /// `∇h(Λ)*(δΛ) = -∫ G Q^{-1} W* Γ*(δΛ) W Q^{-1} G*`.
    pub fn dh_adjoint_apply(&self, lambda: &LambdaParam, delta: &LambdaParam) -> Result<RMat> {
        let qinv = self.inverse_spectra(lambda)?;
        let d = to_complex(&delta.matrix);
        Ok(self.lift(|nd, k| {
            let s = self.adjoint_image(nd, &d);
            -(&qinv[k] * &nd.w_adj * s * &nd.w * &qinv[k])
        }))
    }

    /// `∇²h(Λ)(δ₁, δ₂) = ∫ F + F*` with
    /// `F = G W Q^{-1} Γ*(δ₂) Q^{-1} Γ*(δ₁) Q^{-1} W* G*`.
    pub fn d2h_apply(&self, lambda: &LambdaParam, delta1: &LambdaParam, delta2: &LambdaParam) -> Result<RMat> {
        let qinv = self.inverse_spectra(lambda)?;
        let d1 = to_complex(&delta1.matrix);
        let d2 = to_complex(&delta2.matrix);
        Ok(self.lift(|nd, k| {
            let s1 = self.adjoint_image(nd, &d1);
            let s2 = self.adjoint_image(nd, &d2);
            let q = &qinv[k];
            let f = &nd.w * q * s2 * q * s1 * q * &nd.w_adj;
            &f + f.adjoint()
        }))
    }

    /// `J_h(Λ)` with entries `⟨Λ_j, ∇h(Λ)(Λ_k)⟩`.
    ///
    /// Evaluated on the `m x m` level: `⟨Λ_j, ∫ G X G*⟩ = ∫ tr(Γ*(Λ_j) X)`.
    pub fn jacobian_matrix(&self, lambda: &LambdaParam) -> Result<JacobianMatrixRep> {
        let qinv = self.inverse_spectra(lambda)?;
        let dim = self.dim();
        let entries = self.reduce(dim, dim, |nd, k| {
            let q = &qinv[k];
            let left = &nd.w * q;
            let right = q * &nd.w_adj;
            let mut out = RMat::zeros(dim, dim);
            for col in 0..dim {
                let t = &left * &nd.basis_adj[col] * &right;
                for row in 0..dim {
                    out[(row, col)] = -trace_product(&nd.basis_adj[row], &t);
                }
            }
            out
        });
        Ok(JacobianMatrixRep {
            entries,
            lambda: lambda.coords.clone(),
        })
    }

    /// Coordinates of `∇h(Λ)(δΛ)`, on the `m x m` level.
    pub fn dh_coords(&self, lambda: &LambdaParam, delta: &LambdaParam) -> Result<DVector<f64>> {
        let qinv = self.inverse_spectra(lambda)?;
        let d = to_complex(&delta.matrix);
        let dim = self.dim();
        let col = self.reduce(dim, 1, |nd, k| {
            let q = &qinv[k];
            let t = &nd.w * q * self.adjoint_image(nd, &d) * q * &nd.w_adj;
            RMat::from_fn(dim, 1, |row, _| -trace_product(&nd.basis_adj[row], &t))
        });
        Ok(col.column(0).into_owned())
    }

    /// Coordinates of `∇²h(Λ)(δ₁, δ₂)`.
    pub fn d2h_coords(&self, lambda: &LambdaParam, delta1: &LambdaParam, delta2: &LambdaParam) -> Result<DVector<f64>> {
        let qinv = self.inverse_spectra(lambda)?;
        let d1 = to_complex(&delta1.matrix);
        let d2 = to_complex(&delta2.matrix);
        Ok(self.second_partials(&qinv, |nd| (self.adjoint_image(nd, &d1), self.adjoint_image(nd, &d2))))
    }

    fn second_partials<D>(&self, qinv: &[CMat], dirs: D) -> DVector<f64>
    where
        D: Fn(&Node) -> (CMat, CMat) + Sync,
    {
        let dim = self.dim();
        let col = self.reduce(dim, 1, |nd, k| {
            let (s1, s2) = dirs(nd);
            let q = &qinv[k];
            let f = &nd.w * q * s2 * q * s1 * q * &nd.w_adj;
            RMat::from_fn(dim, 1, |row, _| 2.0 * trace_product(&nd.basis_adj[row], &f))
        });
        col.column(0).into_owned()
    }

    /// Second partials `⟨Λ_j, ∇²h(Λ)(Λ_k, Λ_ℓ)⟩` as `M` symmetric `M x M`
    /// matrices indexed by `j`.
    pub fn second_derivative_array(&self, lambda: &LambdaParam) -> Result<Vec<RMat>> {
        let qinv = self.inverse_spectra(lambda)?;
        let dim = self.dim();
        let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|k| (k..dim).map(move |l| (k, l))).collect();
        let columns = par::map_indexed(pairs.len(), self.parallel, |i| {
            let (k, l) = pairs[i];
            self.second_partials(&qinv, |nd| (nd.basis_adj[k].clone(), nd.basis_adj[l].clone()))
        });
        let mut out = vec![RMat::zeros(dim, dim); dim];
        for ((k, l), col) in pairs.into_iter().zip(columns) {
            for (j, slab) in out.iter_mut().enumerate() {
                slab[(k, l)] = col[j];
                slab[(l, k)] = col[j];
            }
        }
        Ok(out)
    }

    /// `τ(C) = ∫ G (CG)^{-1} Ψ (CG)^{-*} G*`.
    pub fn tau_map(&self, c: &FactorC) -> Result<RMat> {
        self.tau_raw(c.matrix())
    }

    fn tau_raw(&self, c: &RMat) -> Result<RMat> {
        let m = self.filter.channel_dim();
        let n = self.filter.state_dim();
        if c.shape() != (m, n) {
            return Err(Error::DimensionMismatch {
                what: "factor C",
                expected: format!("{m} x {n}"),
                found: format!("{} x {}", c.nrows(), c.ncols()),
            });
        }
        let cc = to_complex(c);
        let factors = par::map_indexed(self.nodes.len(), self.parallel, |k| {
            let nd = &self.nodes[k];
            let cg = &cc * &nd.g;
            let condition = complex_condition_number(&cg);
            if !(condition <= TAU_CONDITION_MAX) {
                return Err(Error::SingularFactor {
                    theta: nd.theta,
                    condition,
                });
            }
            // (CG)^{-1} W, so the integrand is V V*
            cg.lu().solve(&nd.w).ok_or(Error::SingularFactor {
                theta: nd.theta,
                condition,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(self.lift(|_, k| &factors[k] * factors[k].adjoint()))
    }

    /// Central-difference Jacobian of `C ↦ coords(τ(C))` with respect to the
    /// entries of `C` in row-major order.
    pub fn tau_jacobian_fd(&self, c: &FactorC, eps: f64) -> Result<RMat> {
        let base = c.matrix();
        let (rows, cols) = base.shape();
        let dim = self.dim();
        let mut jac = RMat::zeros(dim, rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[(i, j)] += eps;
                minus[(i, j)] -= eps;
                let diff = self
                    .basis
                    .coordinates(&(self.tau_raw(&plus)? - self.tau_raw(&minus)?))?
                    / (2.0 * eps);
                jac.set_column(i * cols + j, &diff);
            }
        }
        Ok(jac)
    }
}

/// Real part of `tr(A B)` for small square matrices.
fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Matrix representation of `∇h(Λ)` in the fixed basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrixRep {
    pub entries: RMat,
    /// Coordinates of the point at which the Jacobian was taken.
    pub lambda: DVector<f64>,
}

impl JacobianMatrixRep {
    pub fn determinant(&self) -> f64 {
        determinant(&self.entries)
    }

    /// Descending singular values.
    pub fn singular_values(&self) -> DVector<f64> {
        singular_values(&self.entries)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

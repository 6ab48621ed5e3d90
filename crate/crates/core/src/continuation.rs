//! Solving `h(Λ) = Σ` by continuation along the straight line
//! `p(t) = t·y + (1 - t)·y₀` in moment coordinates, `y₀ = h(Λ_start)`.
//!
//! The solution curve `x(t)` satisfies `ẋ = J_h(x)^{-1} (y - y₀)`. The
//! primary solver is an Euler predictor with a Newton corrector at fixed
//! `t`; an explicit adaptive ODE integrator without correction is kept for
//! comparison. Both stop when the Jacobian condition number exceeds
//! `cond_max`, which is how divergence near a critical point shows up.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::LambdaParam;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, min_eigenvalue_hermitian, to_complex, RMat};
use crate::moments::MomentContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuationMode {
    PredictorCorrector,
    /// Embedded Dormand-Prince 5(4) pair on the IVP, no corrector.
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub cond_max: f64,
    /// Corrector stops when `‖h(x) - p(t)‖ <= newton_tol · max(‖p(t)‖, 1)`.
    pub newton_tol: f64,
    pub max_corrector_iterations: usize,
    /// Converged runs satisfy `‖h(Λ) - Σ‖_F < residual_tol · ‖Σ‖_F`.
    pub residual_tol: f64,
    /// Local error tolerance of the ODE mode.
    pub ode_tol: f64,
    pub mode: ContinuationMode,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            min_step: 1e-10,
            cond_max: 1e10,
            newton_tol: 1e-10,
            max_corrector_iterations: 20,
            residual_tol: 1e-8,
            ode_tol: 1e-9,
            mode: ContinuationMode::PredictorCorrector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuationStatus {
    Converged,
    DivergedNearSingularity,
    InfeasibleIterate,
    /// ODE mode reached `t = 1` but the terminal residual is above
    /// tolerance.
    ToleranceNotMet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub t: f64,
    pub coords: Vec<f64>,
    /// `‖h(x) - p(t)‖` after the step.
    pub residual: f64,
    /// 2-norm condition number of `J_h` at the accepted point.
    pub condition: f64,
    /// Corrector residuals, starting with the predicted point.
    pub corrector_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationTrace {
    pub steps: Vec<ContinuationStep>,
    pub status: ContinuationStatus,
    pub solution: Option<LambdaParam>,
    /// Largest `t` reached with an accepted point.
    pub last_good_t: f64,
    /// `‖h(Λ) - Σ‖_F` at the last accepted point.
    pub final_residual: f64,
    pub message: String,
}

struct Problem<'a> {
    ctx: &'a MomentContext,
    y: DVector<f64>,
    target_norm: f64,
    y0: DVector<f64>,
    dy: DVector<f64>,
    opts: ContinuationOptions,
}

enum Outcome {
    Accepted {
        x: DVector<f64>,
        residuals: Vec<f64>,
        condition: f64,
    },
    Singular,
    Infeasible,
    Failed,
}

impl Problem<'_> {
    fn target_at(&self, t: f64) -> DVector<f64> {
        &self.y0 + &self.dy * t
    }

    fn param(&self, x: &DVector<f64>) -> LambdaParam {
        self.ctx
            .basis()
            .param(x.clone())
            .expect("coordinate length fixed by basis")
    }

    /// Residual and Jacobian at `x`; `None` if `x` is infeasible.
    fn evaluate(&self, x: &DVector<f64>, t: f64) -> Result<Option<(DVector<f64>, RMat)>> {
        let lambda = self.param(x);
        match (self.ctx.h_coords(&lambda), self.ctx.jacobian_matrix(&lambda)) {
            (Ok(h), Ok(j)) => Ok(Some((h - self.target_at(t), j.entries))),
            (Err(Error::Infeasible { .. }), _) | (_, Err(Error::Infeasible { .. })) => Ok(None),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    }

    fn velocity(&self, jac: &RMat) -> Option<DVector<f64>> {
        jac.clone().lu().solve(&self.dy)
    }

    fn correct(&self, mut x: DVector<f64>, t: f64) -> Result<Outcome> {
        let scale = self.target_at(t).norm().max(1.0);
        let mut residuals = Vec::new();
        for _ in 0..=self.opts.max_corrector_iterations {
            let Some((r, jac)) = self.evaluate(&x, t)? else {
                return Ok(Outcome::Infeasible);
            };
            let rn = r.norm();
            residuals.push(rn);
            let condition = condition_number(&jac);
            if !(condition <= self.opts.cond_max) {
                return Ok(Outcome::Singular);
            }
            if rn <= self.opts.newton_tol * scale {
                return Ok(Outcome::Accepted {
                    x,
                    residuals,
                    condition,
                });
            }
            if residuals.len() > 2 && rn > residuals[residuals.len() - 2] {
                return Ok(Outcome::Failed);
            }
            match jac.lu().solve(&r) {
                Some(dx) => x -= dx,
                None => return Ok(Outcome::Singular),
            }
        }
        Ok(Outcome::Failed)
    }
}

pub fn continuation_solve(
    ctx: &MomentContext,
    target: &RMat,
    start: &LambdaParam,
    options: ContinuationOptions,
) -> Result<ContinuationTrace> {
    let basis = ctx.basis();
    let y = basis.coordinates(target)?;
    let target_norm = target.norm();
    let in_range = (basis.assemble(&y)? - target).norm();
    if in_range > 1e-8 * target_norm.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "target is not in range Γ (projection residual {in_range:e})"
        )));
    }
    if !(min_eigenvalue_hermitian(&to_complex(target)) > 0.0) {
        return Err(Error::InvalidInput("target is not positive definite".into()));
    }
    let y0 = match ctx.h_coords(start) {
        Ok(v) => v,
        Err(Error::Infeasible { theta }) => {
            return Err(Error::InvalidInput(format!(
                "start parameter is infeasible at theta = {theta}"
            )))
        }
        Err(e) => return Err(e),
    };
    let problem = Problem {
        ctx,
        dy: &y - &y0,
        y,
        target_norm,
        y0,
        opts: options,
    };
    if problem.dy.norm() <= options.residual_tol * target_norm {
        return Ok(ContinuationTrace {
            steps: Vec::new(),
            status: ContinuationStatus::Converged,
            solution: Some(start.clone()),
            last_good_t: 1.0,
            final_residual: problem.dy.norm(),
            message: "target equals h(start)".into(),
        });
    }
    match options.mode {
        ContinuationMode::PredictorCorrector => predictor_corrector(&problem, start),
        ContinuationMode::Ode => integrate_ode(&problem, start),
    }
}

fn finish(
    problem: &Problem<'_>,
    steps: Vec<ContinuationStep>,
    status: ContinuationStatus,
    x: &DVector<f64>,
    t: f64,
    message: String,
) -> Result<ContinuationTrace> {
    let lambda = problem.param(x);
    let final_residual = (problem.ctx.h_coords(&lambda)? - &problem.y).norm();
    let mut status = status;
    if status == ContinuationStatus::Converged && !(final_residual < problem.opts.residual_tol * problem.target_norm) {
        status = ContinuationStatus::ToleranceNotMet;
    }
    Ok(ContinuationTrace {
        solution: (status == ContinuationStatus::Converged).then_some(lambda),
        steps,
        status,
        last_good_t: t,
        final_residual,
        message,
    })
}

fn predictor_corrector(problem: &Problem<'_>, start: &LambdaParam) -> Result<ContinuationTrace> {
    let opts = problem.opts;
    let mut x = start.coords.clone();
    let mut t = 0.0;
    let mut dt = opts.initial_step;
    let mut steps = Vec::new();
    let mut jac = problem.ctx.jacobian_matrix(start)?.entries;
    loop {
        let condition = condition_number(&jac);
        if !(condition <= opts.cond_max) {
            let msg = format!(
                "Jacobian condition {condition:e} exceeds {:e} at t = {t}",
                opts.cond_max
            );
            return finish(problem, steps, ContinuationStatus::DivergedNearSingularity, &x, t, msg);
        }
        let Some(v) = problem.velocity(&jac) else {
            let msg = format!("singular Jacobian at t = {t}");
            return finish(problem, steps, ContinuationStatus::DivergedNearSingularity, &x, t, msg);
        };
        let mut last_failure = ContinuationStatus::DivergedNearSingularity;
        let accepted = loop {
            if dt < opts.min_step {
                break None;
            }
            let t_next = (t + dt).min(1.0);
            let predicted = &x + &v * (t_next - t);
            match problem.correct(predicted, t_next)? {
                Outcome::Accepted {
                    x,
                    residuals,
                    condition,
                } => break Some((t_next, x, residuals, condition)),
                Outcome::Infeasible => last_failure = ContinuationStatus::InfeasibleIterate,
                Outcome::Singular | Outcome::Failed => last_failure = ContinuationStatus::DivergedNearSingularity,
            }
            dt *= 0.5;
        };
        let Some((t_next, x_next, residuals, condition)) = accepted else {
            let msg = format!("step size fell below {:e} at t = {t}", opts.min_step);
            return finish(problem, steps, last_failure, &x, t, msg);
        };
        let iterations = residuals.len() - 1;
        steps.push(ContinuationStep {
            t: t_next,
            coords: x_next.iter().copied().collect(),
            residual: *residuals.last().expect("at least one residual"),
            condition,
            corrector_residuals: residuals,
        });
        x = x_next;
        t = t_next;
        if t >= 1.0 {
            return finish(
                problem,
                steps,
                ContinuationStatus::Converged,
                &x,
                t,
                "reached t = 1".into(),
            );
        }
        if iterations <= 3 {
            dt *= 1.5;
        }
        jac = problem.ctx.jacobian_matrix(&problem.param(&x))?.entries;
    }
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the stage
// times are not needed
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn integrate_ode(problem: &Problem<'_>, start: &LambdaParam) -> Result<ContinuationTrace> {
    let opts = problem.opts;
    let mut x = start.coords.clone();
    let mut t = 0.0;
    let mut dt = opts.initial_step;
    let mut steps = Vec::new();
    // velocity and condition at x; None when infeasible or singular
    let slope = |x: &DVector<f64>| -> Result<Option<(DVector<f64>, f64)>> {
        match problem.ctx.jacobian_matrix(&problem.param(x)) {
            Ok(j) => {
                let condition = condition_number(&j.entries);
                Ok(problem.velocity(&j.entries).map(|v| (v, condition)))
            }
            Err(Error::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let Some((mut k1, mut condition)) = slope(&x)? else {
        let msg = "start parameter left the feasible set".to_string();
        return finish(problem, steps, ContinuationStatus::InfeasibleIterate, &x, t, msg);
    };
    while t < 1.0 {
        if !(condition <= opts.cond_max) {
            let msg = format!(
                "Jacobian condition {condition:e} exceeds {:e} at t = {t}",
                opts.cond_max
            );
            return finish(problem, steps, ContinuationStatus::DivergedNearSingularity, &x, t, msg);
        }
        if dt < opts.min_step {
            let msg = format!("step size fell below {:e} at t = {t}", opts.min_step);
            return finish(problem, steps, ContinuationStatus::DivergedNearSingularity, &x, t, msg);
        }
        let h = dt.min(1.0 - t);
        let mut k = vec![k1.clone()];
        let mut rejected = false;
        let mut last_condition = condition;
        for a in DP_A.iter().skip(1) {
            let mut stage = x.clone();
            for (kj, aj) in k.iter().zip(a) {
                stage.axpy(h * aj, kj, 1.0);
            }
            match slope(&stage)? {
                Some((v, c)) => {
                    k.push(v);
                    last_condition = c;
                }
                None => {
                    rejected = true;
                    break;
                }
            }
        }
        if rejected {
            dt *= 0.5;
            continue;
        }
        let mut err_vec = DVector::zeros(x.len());
        for (kj, ej) in k.iter().zip(DP_E) {
            err_vec.axpy(h * ej, kj, 1.0);
        }
        let err = err_vec.norm() / (opts.ode_tol * x.norm().max(1.0));
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err > 1.0 {
            dt = h * factor;
            continue;
        }
        // the last stage is evaluated at the fifth-order solution
        let mut next = x.clone();
        for (kj, aj) in k.iter().zip(DP_A[6]) {
            next.axpy(h * aj, kj, 1.0);
        }
        x = next;
        t = if h == 1.0 - t { 1.0 } else { t + h };
        k1 = k.pop().expect("seven stages");
        condition = last_condition;
        let residual = match problem.ctx.h_coords(&problem.param(&x)) {
            Ok(hx) => (hx - problem.target_at(t)).norm(),
            Err(Error::Infeasible { .. }) => {
                let msg = format!("iterate left the feasible set at t = {t}");
                return finish(problem, steps, ContinuationStatus::InfeasibleIterate, &x, t, msg);
            }
            Err(e) => return Err(e),
        };
        steps.push(ContinuationStep {
            t,
            coords: x.iter().copied().collect(),
            residual,
            condition,
            corrector_residuals: Vec::new(),
        });
        dt = h * factor;
    }
    finish(
        problem,
        steps,
        ContinuationStatus::Converged,
        &x,
        t,
        "reached t = 1".into(),
    )
}

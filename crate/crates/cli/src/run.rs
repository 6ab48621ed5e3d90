//! Subcommand implementations. Each writes its report files into the
//! output directory and returns the JSON document it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use momentmap::bifurcation::analyze_with_threshold;
use momentmap::continuation::{continuation_solve, ContinuationMode, ContinuationOptions, ContinuationStatus};
use momentmap::critical::{
    bisect_critical, det_along, det_scan, BisectOptions, DetScan, SegmentPath, DEFAULT_SCAN_SAMPLES,
};
use momentmap::linalg::numerical_rank;
use momentmap::polyroots::{determinantal_roots, DEFAULT_SCHUR_MARGIN};
use momentmap::{
    build_basis, lambda_from_factor, BifurcationReport, Classification, CriticalPointRecord, FactorC, FrequencyGrid,
    HermitianBasis, MomentContext, PriorFactor, RationalFilter, Summation,
};
use serde::Serialize;

use crate::config::{MatrixSpec, ScenarioConfig};
use crate::error::CliError;
use crate::report::{
    matrix, Bifurcation, Continuation, CriticalPoint, DetScanReport, FactorRoots, GoldenCheck, Provenance, Report,
    Reproduction, TauEntry, BASIS_ORDER,
};

/// Grid step of `--full-grid`.
pub const FULL_GRID_DELTA: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub delta_theta: Option<f64>,
    pub full_grid: bool,
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Roots,
    DetScan {
        samples: usize,
    },
    Bisect {
        samples: usize,
        bracket: Option<(f64, f64)>,
    },
    Bifurcate {
        samples: usize,
    },
    Continue {
        mode: ContinuationMode,
    },
    Tau {
        eps: f64,
    },
    Reproduce,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Roots => "roots",
            Self::DetScan { .. } => "det-scan",
            Self::Bisect { .. } => "bisect",
            Self::Bifurcate { .. } => "bifurcate",
            Self::Continue { .. } => "continue",
            Self::Tau { .. } => "tau",
            Self::Reproduce => "reproduce",
        }
    }
}

/// Validated objects built from a config.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub filter: RationalFilter,
    pub basis: HermitianBasis,
    pub factors: Vec<FactorC>,
    pub ctx: MomentContext,
    pub provenance: Provenance,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, options: &RunOptions) -> Result<Self, CliError> {
        let delta = if options.full_grid {
            FULL_GRID_DELTA
        } else {
            options.delta_theta.unwrap_or(config.delta_theta)
        };
        let filter = RationalFilter::block_shift(config.m, config.p)?;
        let basis = build_basis(config.m, config.p)?;
        let prior =
            PriorFactor::outer(config.k.to_matrix(), &filter).map_err(|e| CliError::Config(format!("K: {e}")))?;
        let factors = config
            .c_list
            .iter()
            .enumerate()
            .map(|(i, c)| {
                FactorC::new(c.to_matrix(), &filter).map_err(|e| CliError::Config(format!("C_list[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grid = FrequencyGrid::new(delta).map_err(|e| CliError::Config(format!("delta_theta: {e}")))?;
        let summation = if options.parallel {
            Summation::Pairwise
        } else {
            Summation::Sequential
        };
        let ctx = MomentContext::new(filter.clone(), prior, grid, basis.clone())?
            .with_summation(summation)
            .with_parallel(options.parallel);
        let provenance = Provenance {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: config.hash(),
            delta_theta: delta,
            grid_nodes: ctx.grid().len(),
            summation: if options.parallel {
                "pairwise-parallel"
            } else {
                "sequential"
            },
            basis_order: BASIS_ORDER,
        };
        Ok(Self {
            config,
            filter,
            basis,
            factors,
            ctx,
            provenance,
        })
    }

    pub fn path(&self) -> Result<SegmentPath, CliError> {
        self.config.endpoints()?;
        let start = lambda_from_factor(&self.factors[0], &self.basis)?;
        let end = lambda_from_factor(&self.factors[1], &self.basis)?;
        Ok(SegmentPath::new(&self.basis, start, end)?)
    }

    fn report<T: Serialize>(&self, command: &'static str, result: T) -> Report<T> {
        Report {
            command,
            provenance: self.provenance.clone(),
            result,
        }
    }
}

/// `{:.16e}`, i.e. 17 significant digits.
fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<String, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
    text.push('\n');
    fs::write(out.join(name), &text)?;
    Ok(text)
}

fn write_csv(
    out: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(out.join(name)).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.into_iter().map(sci))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn factor_names(config: &ScenarioConfig) -> Vec<String> {
    (0..config.c_list.len()).map(|i| format!("C_list[{i}]")).collect()
}

fn critical_point(rec: &CriticalPointRecord) -> CriticalPoint {
    CriticalPoint {
        t_c: rec.t_c,
        lambda_c: matrix(&rec.lambda_c.matrix),
        lambda_c_coords: rec.lambda_c.coords.iter().copied().collect(),
        det_at_c: rec.det_at_c,
        singular_values: rec.singular_values.iter().copied().collect(),
        numerical_rank: rec.numerical_rank,
        rank_threshold: rec.rank_threshold,
        iterations: rec.iterations,
        bracket: [rec.bracket.0, rec.bracket.1],
    }
}

fn bifurcation(report: &BifurcationReport, rank_threshold: f64) -> Bifurcation {
    let d = &report.decomposition;
    Bifurcation {
        critical: critical_point(&report.critical),
        augmented_jacobian: matrix(&report.augmented_jacobian),
        augmented_singular_values: d.all_singular_values.iter().copied().collect(),
        augmented_rank: numerical_rank(&d.all_singular_values, rank_threshold),
        kernel_dimension: d.v2.ncols(),
        kernel_basis: matrix(&d.v2),
        left_null_vector: d.u2.iter().copied().collect(),
        reconstruction_error: d.reconstruction_error(&report.augmented_jacobian),
        orthogonality_residual: d.orthogonality_residual(),
        hessian_b: matrix(&report.hessian_b),
        eigenvalues: report.eigenvalues,
        classification: report.classification,
    }
}

fn scan(s: &Scenario, path: &SegmentPath, samples: usize) -> Result<DetScan, CliError> {
    Ok(det_scan(&s.ctx, path, samples)?)
}

fn first_bracket(scan: &DetScan) -> Result<(f64, f64), CliError> {
    match scan.brackets.first() {
        Some(&b) => Ok(b),
        None => {
            let first = scan.samples.first().expect("at least two samples");
            let last = scan.samples.last().expect("at least two samples");
            Err(momentmap::Error::NoSignChange {
                t_lo: first.t,
                t_hi: last.t,
                det_lo: first.det,
                det_hi: last.det,
            }
            .into())
        }
    }
}

fn bisect_options(config: &ScenarioConfig) -> BisectOptions {
    BisectOptions {
        tol_t: config.tolerances.tol_t,
        rank_threshold: config.tolerances.rank_threshold,
    }
}

fn locate_critical(s: &Scenario, path: &SegmentPath, samples: usize) -> Result<CriticalPointRecord, CliError> {
    let bracket = first_bracket(&scan(s, path, samples)?)?;
    Ok(bisect_critical(&s.ctx, path, bracket, bisect_options(&s.config))?)
}

pub fn roots(s: &Scenario) -> Result<Report<Vec<FactorRoots>>, CliError> {
    let mut named = vec![("K".to_string(), s.config.k.to_matrix())];
    named.extend(
        factor_names(&s.config)
            .into_iter()
            .zip(s.config.c_list.iter().map(MatrixSpec::to_matrix)),
    );
    let out = named
        .into_iter()
        .map(|(name, c)| {
            let r = determinantal_roots(&c, &s.filter, DEFAULT_SCHUR_MARGIN)?;
            Ok(FactorRoots {
                name,
                roots: r.roots.iter().map(|&z| z.into()).collect(),
                moduli: r.moduli.clone(),
                schur: r.schur,
                coefficients: r.coefficients.iter().map(|&z| z.into()).collect(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(s.report("roots", out))
}

pub fn det_scan_report(s: &Scenario, samples: usize, out: &Path) -> Result<Report<DetScanReport>, CliError> {
    let path = s.path()?;
    let scan = scan(s, &path, samples)?;
    write_csv(
        out,
        "det_scan.csv",
        &["t", "det"],
        scan.samples.iter().map(|p| vec![p.t, p.det]),
    )?;
    Ok(s.report(
        "det-scan",
        DetScanReport {
            samples: scan.samples.len(),
            det_start: scan.samples[0].det,
            det_end: scan.samples[scan.samples.len() - 1].det,
            brackets: scan.brackets.iter().map(|&(a, b)| [a, b]).collect(),
            csv_file: "det_scan.csv".into(),
        },
    ))
}

pub fn bisect(s: &Scenario, samples: usize, bracket: Option<(f64, f64)>) -> Result<Report<CriticalPoint>, CliError> {
    let path = s.path()?;
    let rec = match bracket {
        Some(b) => bisect_critical(&s.ctx, &path, b, bisect_options(&s.config))?,
        None => locate_critical(s, &path, samples)?,
    };
    Ok(s.report("bisect", critical_point(&rec)))
}

pub fn bifurcate(s: &Scenario, samples: usize) -> Result<Report<Bifurcation>, CliError> {
    let path = s.path()?;
    let rec = locate_critical(s, &path, samples)?;
    let threshold = s.config.tolerances.rank_threshold;
    let report = analyze_with_threshold(&s.ctx, &path, rec, threshold)?;
    Ok(s.report("bifurcate", bifurcation(&report, threshold)))
}

/// Solve `h(Λ) = h(Λ_end)` from `Λ_start` along the path endpoints.
pub fn continuation(s: &Scenario, mode: ContinuationMode, out: &Path) -> Result<Report<Continuation>, CliError> {
    let path = s.path()?;
    let target = s.ctx.h_map(&path.end)?;
    let t = &s.config.tolerances;
    let options = ContinuationOptions {
        cond_max: t.cond_max,
        residual_tol: t.residual_tol,
        mode,
        ..ContinuationOptions::default()
    };
    let trace = continuation_solve(&s.ctx, &target, &path.start, options)?;
    let dim = s.ctx.dim();
    let mut header = vec!["t".to_string(), "residual".into(), "condition".into()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        out,
        "continuation.csv",
        &header,
        trace.steps.iter().map(|st| {
            let mut row = vec![st.t, st.residual, st.condition];
            row.extend(&st.coords);
            row
        }),
    )?;
    let distance = trace.solution.as_ref().map(|l| (&l.matrix - &path.end.matrix).norm());
    Ok(s.report(
        "continue",
        Continuation {
            mode,
            status: trace.status,
            message: trace.message.clone(),
            steps: trace.steps.len(),
            last_good_t: trace.last_good_t,
            final_residual: trace.final_residual,
            target_norm: target.norm(),
            solution: trace.solution.as_ref().map(|l| matrix(&l.matrix)),
            distance_to_path_end: distance,
            csv_file: "continuation.csv".into(),
            trace: trace.steps,
        },
    ))
}

pub fn tau(s: &Scenario, eps: f64) -> Result<Report<Vec<TauEntry>>, CliError> {
    let out = factor_names(&s.config)
        .into_iter()
        .zip(&s.factors)
        .map(|(name, c)| {
            let tau = s.ctx.tau_map(c)?;
            let jac = s.ctx.tau_jacobian_fd(c, eps)?;
            let sv = jac.svd(false, false).singular_values;
            Ok(TauEntry {
                name,
                tau_coords: s.basis.coordinates(&tau)?.iter().copied().collect(),
                tau: matrix(&tau),
                jacobian_rank: numerical_rank(&sv, s.config.tolerances.rank_threshold),
                jacobian_singular_values: sv.iter().copied().collect(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(s.report("tau", out))
}

mod golden {
    pub const ROOTS_K: [(f64, f64); 2] = [(0.5868, 0.0), (-0.3558, 0.0)];
    pub const ROOTS_C0: [(f64, f64); 2] = [(0.1211, 0.5302), (0.1211, -0.5302)];
    pub const MODULUS_C0: f64 = 0.5438;
    pub const ROOTS_C1: [(f64, f64); 2] = [(0.7791, 0.0), (-0.6683, 0.0)];
    pub const LAMBDA0: [[f64; 4]; 2] = [[4.4473, 0.6681, 0.6681, 0.4698], [-1.7976, -1.4773, 0.6552, -0.0624]];
    pub const LAMBDA1: [[f64; 4]; 2] = [[3.2017, 0.7387, 0.7387, 2.4105], [2.6607, 0.3371, 3.3600, -1.2200]];
    pub const LAMBDA_C: [[f64; 4]; 2] = [[4.3901, 0.6713, 0.6713, 0.5589], [-1.5930, -1.3940, 0.7793, -0.1155]];
    pub const DET0: f64 = 10.6871;
    pub const DET1: f64 = -326.6439;
    pub const T_C: f64 = 0.0459;
    pub const SIGMA_2: f64 = 0.0573;
    pub const EIGENVALUES: [f64; 2] = [-0.3226, 0.0239];
}

struct Checks(Vec<GoldenCheck>);

impl Checks {
    fn abs(&mut self, name: impl Into<String>, value: f64, expected: f64, tol: f64) {
        self.push(name, value, expected, tol, "abs", (value - expected).abs() <= tol);
    }

    fn rel(&mut self, name: impl Into<String>, value: f64, expected: f64, tol: f64) {
        self.push(
            name,
            value,
            expected,
            tol,
            "rel",
            (value - expected).abs() <= tol * expected.abs(),
        );
    }

    fn bound(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.push(name, value, 0.0, tol, "bound", value < tol);
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        value: f64,
        expected: f64,
        tolerance: f64,
        kind: &'static str,
        pass: bool,
    ) {
        self.0.push(GoldenCheck {
            name: name.into(),
            value,
            expected,
            tolerance,
            kind,
            pass: pass && value.is_finite(),
        });
    }

    fn roots(&mut self, name: &str, c: &MatrixSpec, s: &Scenario, expected: &[(f64, f64)]) -> Result<(), CliError> {
        let r = determinantal_roots(&c.to_matrix(), &s.filter, DEFAULT_SCHUR_MARGIN)?;
        for (i, &(re, im)) in expected.iter().enumerate() {
            let target = momentmap::linalg::C64::new(re, im);
            let err = r
                .roots
                .iter()
                .map(|z| (z - target).norm())
                .fold(f64::INFINITY, f64::min);
            self.bound(format!("{name} root {i} distance"), err, 1e-3);
        }
        Ok(())
    }

    fn blocks(
        &mut self,
        name: &str,
        s: &Scenario,
        lambda: &momentmap::LambdaParam,
        expected: &[[f64; 4]; 2],
        tol: f64,
    ) {
        for (lag, want) in expected.iter().enumerate() {
            let b = s.basis.block(lambda, lag);
            for (k, &w) in want.iter().enumerate() {
                self.abs(
                    format!("{name} block {lag} entry ({}, {})", k / 2, k % 2),
                    b[(k / 2, k % 2)],
                    w,
                    tol,
                );
            }
        }
    }
}

/// Whole pipeline on the configured instance, checked against the known
/// values of the two-channel lag-one example.
pub fn reproduce(s: &Scenario) -> Result<Report<Reproduction>, CliError> {
    let c = &s.config;
    if c.m != 2 || c.p != 1 {
        return Err(CliError::Config(format!(
            "reproduce needs the m = 2, p = 1 instance, got m = {}, p = {}",
            c.m, c.p
        )));
    }
    let (c0, c1) = c.endpoints()?;
    let mut checks = Checks(Vec::new());
    checks.roots("K", &c.k, s, &golden::ROOTS_K)?;
    checks.roots("C0", c0, s, &golden::ROOTS_C0)?;
    checks.roots("C1", c1, s, &golden::ROOTS_C1)?;
    let m0 = determinantal_roots(&c0.to_matrix(), &s.filter, DEFAULT_SCHUR_MARGIN)?.moduli[0];
    checks.abs("C0 root modulus", m0, golden::MODULUS_C0, 1e-3);

    let path = s.path()?;
    checks.blocks("Lambda0", s, &path.start, &golden::LAMBDA0, 1e-3);
    checks.blocks("Lambda1", s, &path.end, &golden::LAMBDA1, 1e-3);

    let det0 = det_along(&s.ctx, &path, 0.0)?;
    let det1 = det_along(&s.ctx, &path, 1.0)?;
    checks.rel("det J_h(Lambda0)", det0, golden::DET0, 5e-3);
    checks.rel("det J_h(Lambda1)", det1, golden::DET1, 5e-3);
    checks.bound("det sign product", (det0 * det1).signum(), 0.0);

    let rec = locate_critical(s, &path, DEFAULT_SCAN_SAMPLES)?;
    checks.abs("t_c", rec.t_c, golden::T_C, 5e-4);
    checks.blocks("Lambda_c", s, &rec.lambda_c, &golden::LAMBDA_C, 5e-3);
    let sv = &rec.singular_values;
    let dim = sv.len();
    checks.bound("sigma_min / sigma_max", sv[dim - 1] / sv[0], 1e-8);
    checks.rel("second smallest singular value", sv[dim - 2], golden::SIGMA_2, 0.05);
    checks.abs("rank deficiency", (dim - rec.numerical_rank) as f64, 1.0, 0.0);

    let threshold = c.tolerances.rank_threshold;
    let report = analyze_with_threshold(&s.ctx, &path, rec, threshold)?;
    let bif = bifurcation(&report, threshold);
    checks.abs("augmented rank", bif.augmented_rank as f64, 6.0, 0.0);
    checks.abs("kernel dimension", bif.kernel_dimension as f64, 2.0, 0.0);
    // eigenvalues are ascending; the sign of u_M flips the pair
    let [a, b] = bif.eigenvalues;
    let [ea, eb] = golden::EIGENVALUES;
    let direct = ((a - ea) / ea).abs().max(((b - eb) / eb).abs());
    let flipped = ((-b - ea) / ea).abs().max(((-a - eb) / eb).abs());
    let (lo, hi) = if direct <= flipped { (a, b) } else { (-b, -a) };
    checks.rel("Hessian eigenvalue (negative, up to global sign)", lo, ea, 0.05);
    checks.rel("Hessian eigenvalue (positive, up to global sign)", hi, eb, 0.05);
    checks.abs(
        "classification is simple-bifurcation",
        (bif.classification == Classification::SimpleBifurcation) as u8 as f64,
        1.0,
        0.0,
    );

    let all_pass = checks.0.iter().all(|c| c.pass);
    Ok(s.report(
        "reproduce",
        Reproduction {
            all_pass,
            checks: checks.0,
            det_start: det0,
            det_end: det1,
            bifurcation: bif,
        },
    ))
}

/// Run one subcommand: build the scenario, compute, write files. Returns
/// the written JSON text.
pub fn run(command: Command, config: ScenarioConfig, options: &RunOptions) -> Result<String, CliError> {
    fs::create_dir_all(&options.out)?;
    let s = Scenario::new(config, options)?;
    let out = options.out.as_path();
    match command {
        Command::Roots => write_json(out, "roots.json", &roots(&s)?),
        Command::DetScan { samples } => write_json(out, "det_scan.json", &det_scan_report(&s, samples, out)?),
        Command::Bisect { samples, bracket } => write_json(out, "critical_point.json", &bisect(&s, samples, bracket)?),
        Command::Bifurcate { samples } => write_json(out, "bifurcation.json", &bifurcate(&s, samples)?),
        Command::Continue { mode } => {
            let report = continuation(&s, mode, out)?;
            let text = write_json(out, "continuation.json", &report)?;
            match report.result.status {
                ContinuationStatus::Converged => Ok(text),
                ContinuationStatus::InfeasibleIterate => Err(CliError::Infeasible(report.result.message)),
                status => Err(CliError::Numerical(format!("{status:?}: {}", report.result.message))),
            }
        }
        Command::Tau { eps } => write_json(out, "tau.json", &tau(&s, eps)?),
        Command::Reproduce => {
            let report = reproduce(&s)?;
            let text = write_json(out, "reproduce.json", &report)?;
            if report.result.all_pass {
                Ok(text)
            } else {
                let failed: Vec<&str> = report
                    .result
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::Numerical(format!(
                    "golden checks failed: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

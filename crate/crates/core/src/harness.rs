//! Temporal convergence studies and their reports.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::SpectralSpace;
use crate::stepper::{self, Forcing, ProblemSpec, SchemeKind, SchemeSpec, SpaceTimeFn, Startup};

/// Relative slack used when checking that step sizes divide a time.
const GRID_TOL: f64 = 1e-9;

#[derive(Clone)]
pub enum Reference {
    /// Exact solution `u(x, t)`.
    Exact(SpaceTimeFn),
    /// Same scheme on the same space with a much smaller step.
    SelfReference { degree: usize, tau: f64 },
}

impl std::fmt::Debug for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Reference::Exact(_) => f.write_str("Exact"),
            Reference::SelfReference { degree, tau } => f
                .debug_struct("SelfReference")
                .field("degree", degree)
                .field("tau", tau)
                .finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub problem: ProblemSpec,
    pub scheme: SchemeKind,
    pub startup: Startup,
    pub degree: usize,
    /// Descending step sizes.
    pub tau_grid: Vec<f64>,
    pub reference: Reference,
    pub eval_time: f64,
    /// Free-form description of the problem, echoed into the report.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub tau: f64,
    pub l2_error: f64,
    /// `None` on the first row, or when the pair of errors has no finite rate.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceEcho {
    Exact,
    SelfReference { degree: usize, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEcho {
    pub label: String,
    pub mu: f64,
    pub beta: f64,
    pub final_time: f64,
    pub scheme: SchemeKind,
    pub startup: Startup,
    pub degree: usize,
    pub tau_grid: Vec<f64>,
    pub reference: ReferenceEcho,
    pub eval_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub study: StudyEcho,
    pub software_version: String,
    /// Seconds since the Unix epoch when the study finished.
    pub generated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2_error).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Number of steps of size `tau` in `time`, if it is (nearly) an integer.
fn steps_in(time: f64, tau: f64) -> Option<usize> {
    let n = time / tau;
    let rounded = n.round();
    ((n - rounded).abs() <= GRID_TOL * n.max(1.0) && rounded >= 1.0).then_some(rounded as usize)
}

/// Pairwise observed orders `ln(e_{j-1}/e_j) / ln(τ_{j-1}/τ_j)`.
pub fn observed_orders(taus: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for j in 1..errors.len() {
        let rate = (errors[j - 1] / errors[j]).ln() / (taus[j - 1] / taus[j]).ln();
        out[j] = rate.is_finite().then_some(rate);
    }
    out
}

fn validate(spec: &StudySpec) -> Result<Vec<usize>> {
    if spec.tau_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Config("tau_grid must be strictly descending".into()));
    }
    if !(spec.eval_time > 0.0) || spec.eval_time > spec.problem.final_time() * (1.0 + GRID_TOL) {
        return Err(Error::Config(format!(
            "eval_time {} must lie in (0, {}]",
            spec.eval_time,
            spec.problem.final_time()
        )));
    }
    let steps = spec
        .tau_grid
        .iter()
        .map(|&tau| {
            if !(tau > 0.0) {
                return Err(Error::Config(format!(
                    "step size must be positive, got {tau}"
                )));
            }
            steps_in(spec.eval_time, tau).ok_or_else(|| {
                Error::Config(format!(
                    "tau = {tau} does not divide eval_time = {}",
                    spec.eval_time
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Reference::SelfReference { degree, tau } = spec.reference {
        if degree != spec.degree {
            return Err(Error::Config(format!(
                "self-reference degree {degree} must equal the study degree {}",
                spec.degree
            )));
        }
        steps_in(spec.eval_time, tau).ok_or_else(|| {
            Error::Config(format!("reference tau = {tau} does not divide eval_time"))
        })?;
        for &t in &spec.tau_grid {
            if steps_in(t, tau).is_none() {
                return Err(Error::Config(format!(
                    "reference tau = {tau} does not divide grid tau = {t}"
                )));
            }
        }
    }
    Ok(steps)
}

fn solve_final(
    problem: &ProblemSpec,
    kind: SchemeKind,
    startup: Startup,
    n_steps: usize,
    space: &SpectralSpace,
) -> Result<Vec<f64>> {
    let history = stepper::run(
        problem,
        SchemeSpec::new(kind, n_steps).with_startup(startup),
        space,
    )?;
    Ok(history.last().to_vec())
}

/// One solve per step size, errors at `eval_time`, pairwise orders.
///
/// The reference solve runs first; the grid runs then execute in parallel.
pub fn run_study(spec: &StudySpec) -> Result<ConvergenceReport> {
    let steps = validate(spec)?;
    let space = SpectralSpace::new(spec.degree)?;
    let problem = spec.problem.with_final_time(spec.eval_time)?;

    let reference_modal = match &spec.reference {
        Reference::SelfReference { tau, .. } => {
            let n = steps_in(spec.eval_time, *tau).expect("validated");
            let u = solve_final(&problem, spec.scheme, spec.startup, n, &space).map_err(|e| {
                Error::Study {
                    tau: *tau,
                    source: Box::new(e),
                }
            })?;
            Some(u)
        }
        Reference::Exact(_) => None,
    };

    let errors = spec
        .tau_grid
        .par_iter()
        .zip(&steps)
        .map(|(&tau, &n)| {
            let u = solve_final(&problem, spec.scheme, spec.startup, n, &space).map_err(|e| {
                Error::Study {
                    tau,
                    source: Box::new(e),
                }
            })?;
            Ok(match (&spec.reference, &reference_modal) {
                (_, Some(r)) => {
                    let diff: Vec<f64> = u.iter().zip(r).map(|(a, b)| a - b).collect();
                    space.modal_l2_norm(&diff)
                }
                (Reference::Exact(exact), None) => {
                    space.modal_l2_error(&u, |x| exact(x, spec.eval_time))
                }
                (Reference::SelfReference { .. }, None) => unreachable!("reference computed above"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let orders = observed_orders(&spec.tau_grid, &errors);
    let rows = spec
        .tau_grid
        .iter()
        .zip(errors)
        .zip(orders)
        .map(|((&tau, l2_error), order)| ReportRow {
            tau,
            l2_error,
            order,
        })
        .collect();
    Ok(ConvergenceReport {
        rows,
        metadata: ReportMetadata {
            study: echo(spec),
            software_version: crate::VERSION.to_string(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    })
}

fn echo(spec: &StudySpec) -> StudyEcho {
    StudyEcho {
        label: spec.label.clone(),
        mu: spec.problem.mu(),
        beta: spec.problem.beta(),
        final_time: spec.problem.final_time(),
        scheme: spec.scheme,
        startup: spec.startup,
        degree: spec.degree,
        tau_grid: spec.tau_grid.clone(),
        reference: match spec.reference {
            Reference::Exact(_) => ReferenceEcho::Exact,
            Reference::SelfReference { degree, tau } => {
                ReferenceEcho::SelfReference { degree, tau }
            }
        },
        eval_time: spec.eval_time,
    }
}

/// A linear problem with exact solution `(1 + t^σ) sin(πx)`.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub problem: ProblemSpec,
    pub sigma: f64,
    pub exact: SpaceTimeFn,
}

/// `u = (1 + t^σ) sin(πx)` and the matching source, using
/// `∂_t^β t^σ = Γ(σ+1)/Γ(σ+1-β) t^{σ-β}`.
pub fn manufactured_problem(
    sigma: f64,
    beta: f64,
    mu: f64,
    final_time: f64,
) -> Result<ManufacturedProblem> {
    if !(sigma > beta) {
        return Err(Error::Domain(format!(
            "singularity index sigma = {sigma} must exceed beta = {beta}"
        )));
    }
    let pi = std::f64::consts::PI;
    let coef = (libm::lgamma(sigma + 1.0) - libm::lgamma(sigma + 1.0 - beta)).exp();
    let source: SpaceTimeFn = Arc::new(move |x: f64, t: f64| {
        let s = (pi * x).sin();
        coef * t.powf(sigma - beta) * s + mu * pi * pi * (1.0 + t.powf(sigma)) * s
    });
    let exact: SpaceTimeFn = Arc::new(move |x: f64, t: f64| (1.0 + t.powf(sigma)) * (pi * x).sin());
    let problem = ProblemSpec::new(
        mu,
        beta,
        final_time,
        Arc::new(move |x| (pi * x).sin()),
        Forcing::Linear(source),
    )?;
    Ok(ManufacturedProblem {
        problem,
        sigma,
        exact,
    })
}

pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("tau,l2_error,order\n");
    for row in &report.rows {
        let order = row.order.map(|o| o.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", row.tau, row.l2_error, order);
    }
    out
}

pub fn report_json(report: &ConvergenceReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &ConvergenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Json => report_json(report)?,
    };
    std::fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_report() -> ConvergenceReport {
        ConvergenceReport {
            rows: vec![],
            metadata: ReportMetadata {
                study: StudyEcho {
                    label: "empty".into(),
                    mu: 1.0,
                    beta: 0.5,
                    final_time: 1.0,
                    scheme: SchemeKind::LinearP1,
                    startup: Startup::default(),
                    degree: 8,
                    tau_grid: vec![],
                    reference: ReferenceEcho::Exact,
                    eval_time: 1.0,
                },
                software_version: crate::VERSION.into(),
                generated_at: 0,
            },
        }
    }

    #[test]
    fn header_only_csv() {
        assert_eq!(report_csv(&empty_report()), "tau,l2_error,order\n");
    }

    #[test]
    fn order_formula() {
        let o = observed_orders(&[0.5, 0.25, 0.125], &[4.0, 1.0, 0.5]);
        assert_eq!(o, vec![None, Some(2.0), Some(1.0)]);
        let o = observed_orders(&[0.5, 0.25], &[1.0, 0.0]);
        assert_eq!(o, vec![None, None]);
    }

    #[test]
    fn manufactured_at_time_zero() {
        let m = manufactured_problem(1.5, 0.5, 2.0, 1.0).unwrap();
        let Forcing::Linear(f) = m.problem.forcing() else {
            panic!()
        };
        for x in [-0.7, 0.1, 0.4] {
            let s = (std::f64::consts::PI * x).sin();
            assert!(((m.exact)(x, 0.0) - s).abs() < 1e-15);
            assert!((f(x, 0.0) - 2.0 * std::f64::consts::PI.powi(2) * s).abs() < 1e-12);
        }
        assert!(manufactured_problem(0.5, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn manufactured_caputo_coefficients() {
        // σ = β + 1: Γ(β+2)/Γ(2) t; σ = 1, β = 1/2: t^{1/2}/Γ(3/2)
        let beta: f64 = 0.3;
        let m = manufactured_problem(1.0 + beta, beta, 1.0, 1.0).unwrap();
        let Forcing::Linear(f) = m.problem.forcing() else {
            panic!()
        };
        let x: f64 = 0.5;
        let t: f64 = 0.7;
        let diffusion = std::f64::consts::PI.powi(2) * (1.0 + t.powf(1.0 + beta));
        assert!((f(x, t) - diffusion - libm::tgamma(beta + 2.0) * t).abs() < 1e-12);
        let m = manufactured_problem(1.0, 0.5, 1.0, 1.0).unwrap();
        let Forcing::Linear(f) = m.problem.forcing() else {
            panic!()
        };
        let diffusion = std::f64::consts::PI.powi(2) * (1.0 + t);
        assert!((f(x, t) - diffusion - t.sqrt() / libm::tgamma(1.5)).abs() < 1e-12);
    }

    #[test]
    fn grid_divisibility() {
        assert_eq!(steps_in(1.0, 0.125), Some(8));
        assert_eq!(steps_in(1.0, 0.3), None);
    }
}

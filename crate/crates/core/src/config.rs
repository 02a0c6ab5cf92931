//! JSON documents for the `solve` and `converge` commands.
//!
//! Unknown fields are rejected everywhere.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{manufactured_problem, Reference, StudySpec};
use crate::stepper::{
    Forcing, ProblemSpec, ScalarFn, SchemeKind, SchemeSpec, SpaceTimeFn, Startup,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    /// `sin(frequency · π x)`; vanishes at `±1` for integer frequencies.
    Sine {
        frequency: f64,
    },
}

impl InitialConfig {
    fn function(&self) -> ScalarFn {
        match *self {
            InitialConfig::Zero => Arc::new(|_| 0.0),
            InitialConfig::Sine { frequency } => {
                Arc::new(move |x| (frequency * std::f64::consts::PI * x).sin())
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            InitialConfig::Zero => "u0 = 0".into(),
            InitialConfig::Sine { frequency } => format!("u0 = sin({frequency} pi x)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `f(u) = Σ c_i u^i`.
    Reaction {
        initial: InitialConfig,
        coefficients: Vec<f64>,
    },
    /// Linear problem with `f ≡ 0`.
    Homogeneous { initial: InitialConfig },
    /// Exact solution `(1 + t^σ) sin(πx)`.
    Manufactured { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mu: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub final_time: f64,
    pub model: ModelConfig,
}

fn one() -> f64 {
    1.0
}

fn polynomial(coefficients: Vec<f64>) -> (ScalarFn, ScalarFn) {
    let c = Arc::new(coefficients);
    let c2 = c.clone();
    let f = move |u: f64| c.iter().rev().fold(0.0, |acc, &a| acc * u + a);
    let df = move |u: f64| {
        c2.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * u + i as f64 * a)
    };
    (Arc::new(f), Arc::new(df))
}

impl ProblemConfig {
    pub fn build(&self) -> Result<(ProblemSpec, Option<SpaceTimeFn>)> {
        let wrap = |e: Error| Error::Config(e.to_string());
        match &self.model {
            ModelConfig::Reaction {
                initial,
                coefficients,
            } => {
                let (f, df) = polynomial(coefficients.clone());
                let p = ProblemSpec::new(
                    self.mu,
                    self.beta,
                    self.final_time,
                    initial.function(),
                    Forcing::Nonlinear { f, df },
                )
                .map_err(wrap)?;
                Ok((p, None))
            }
            ModelConfig::Homogeneous { initial } => {
                let p = ProblemSpec::new(
                    self.mu,
                    self.beta,
                    self.final_time,
                    initial.function(),
                    Forcing::Linear(Arc::new(|_, _| 0.0)),
                )
                .map_err(wrap)?;
                Ok((p, None))
            }
            ModelConfig::Manufactured { sigma } => {
                let m = manufactured_problem(*sigma, self.beta, self.mu, self.final_time)
                    .map_err(wrap)?;
                Ok((m.problem, Some(m.exact)))
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.model {
            ModelConfig::Reaction {
                initial,
                coefficients,
            } => {
                format!(
                    "reaction f(u) = poly{coefficients:?}, {}",
                    initial.describe()
                )
            }
            ModelConfig::Homogeneous { initial } => format!("homogeneous, {}", initial.describe()),
            ModelConfig::Manufactured { sigma } => {
                format!("manufactured (1 + t^{sigma}) sin(pi x)")
            }
        }
    }
}

/// Input of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    pub scheme: SchemeSpec,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    Exact,
    SelfReference { degree: usize, tau: f64 },
}

/// Input of `converge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub scheme: SchemeKind,
    #[serde(default)]
    pub startup: Startup,
    pub degree: usize,
    pub tau_grid: Vec<f64>,
    pub reference: ReferenceConfig,
    #[serde(default = "one")]
    pub eval_time: f64,
}

impl StudyConfig {
    pub fn build(&self) -> Result<StudySpec> {
        let (problem, exact) = self.problem.build()?;
        let reference = match (&self.reference, exact) {
            (ReferenceConfig::Exact, Some(f)) => Reference::Exact(f),
            (ReferenceConfig::Exact, None) => {
                return Err(Error::Config(
                    "an exact reference needs the manufactured model".into(),
                ))
            }
            (&ReferenceConfig::SelfReference { degree, tau }, _) => {
                let finest = self.tau_grid.iter().copied().fold(f64::INFINITY, f64::min);
                if !(tau < finest / 4.0) {
                    return Err(Error::Config(format!(
                        "reference tau = {tau} must be smaller than a quarter of the finest grid step {finest}"
                    )));
                }
                Reference::SelfReference { degree, tau }
            }
        };
        Ok(StudySpec {
            problem,
            scheme: self.scheme,
            startup: self.startup,
            degree: self.degree,
            tau_grid: self.tau_grid.clone(),
            reference,
            eval_time: self.eval_time,
            label: self.problem.describe(),
        })
    }
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl SolveConfig {
    pub fn build(&self) -> Result<(ProblemSpec, SchemeSpec)> {
        let (problem, _) = self.problem.build()?;
        Ok((problem, self.scheme))
    }
}

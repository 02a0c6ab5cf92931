//! Fully discrete time stepping for the subdiffusion problem.
//!
//! Every scheme solves, once per step, the same symmetric positive-definite
//! system
//!
//! ```text
//! (τ^{-β} ϖ_0 M + μ θ S) u^k = -τ^{-β} M h^k - μ (1 - θ) S u^{k-1} + load
//! ```
//!
//! where `h^k = Σ_{j<k} ϖ_{k-j} u^j - b_k u^0` collects the known part of the
//! convolution and `θ = 1` (first order) or `θ = 1 - β/2` (second order).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracweights::CoefficientTable;
use crate::legendre::SpectralSpace;
use crate::linalg::{SkipBanded, SkipBandedFactor};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Nodal magnitude above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

const PICARD_TOL: f64 = 1e-14;
const PICARD_MAX_ITER: usize = 200;

#[derive(Clone)]
pub enum Forcing {
    /// `f(x, t)`, independent of the solution.
    Linear(SpaceTimeFn),
    /// `f(u)` with its derivative.
    Nonlinear { f: ScalarFn, df: ScalarFn },
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Linear(_) => f.write_str("Forcing::Linear"),
            Forcing::Nonlinear { .. } => f.write_str("Forcing::Nonlinear"),
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    mu: f64,
    beta: f64,
    final_time: f64,
    initial: ScalarFn,
    forcing: Forcing,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("mu", &self.mu)
            .field("beta", &self.beta)
            .field("final_time", &self.final_time)
            .field("forcing", &self.forcing)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        mu: f64,
        beta: f64,
        final_time: f64,
        initial: ScalarFn,
        forcing: Forcing,
    ) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!(
                "diffusion coefficient must be positive, got {mu}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!(
                "fractional order must lie in (0, 1), got {beta}"
            )));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::Domain(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let (left, right) = (initial(-1.0), initial(1.0));
        if left.abs() > 1e-12 || right.abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "initial data must vanish at x = ±1, got u0(-1) = {left}, u0(1) = {right}"
            )));
        }
        Ok(Self {
            mu,
            beta,
            final_time,
            initial,
            forcing,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn initial(&self) -> &ScalarFn {
        &self.initial
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// Same problem on a shorter horizon.
    pub fn with_final_time(&self, final_time: f64) -> Result<Self> {
        Self::new(
            self.mu,
            self.beta,
            final_time,
            self.initial.clone(),
            self.forcing.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    LinearP1,
    LinearP2,
    SemiImplicit1,
    SemiImplicit2,
}

impl SchemeKind {
    pub fn is_linear(self) -> bool {
        matches!(self, SchemeKind::LinearP1 | SchemeKind::LinearP2)
    }

    pub fn is_second_order(self) -> bool {
        matches!(self, SchemeKind::LinearP2 | SchemeKind::SemiImplicit2)
    }
}

/// How the second-order semi-implicit scheme obtains `u¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Startup {
    /// One fully implicit first-order step, solved by fixed-point iteration.
    ImplicitFirstStep,
    /// The first-order semi-implicit scheme with this many sub-steps on `[0, τ]`.
    RefinedFirstStep(usize),
}

impl Default for Startup {
    fn default() -> Self {
        Startup::RefinedFirstStep(64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub n_steps: usize,
    #[serde(default)]
    pub startup: Startup,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, n_steps: usize) -> Self {
        Self {
            kind,
            n_steps,
            startup: Startup::default(),
        }
    }

    pub fn with_startup(mut self, startup: Startup) -> Self {
        self.startup = startup;
        self
    }
}

/// Solution levels `u⁰..u^k` (modal coefficients) and the weights driving
/// the convolution.
#[derive(Debug, Clone)]
pub struct TimeHistory {
    table: CoefficientTable,
    levels: Vec<Vec<f64>>,
}

impl TimeHistory {
    pub fn new(table: CoefficientTable, initial: Vec<f64>) -> Self {
        let mut levels = Vec::with_capacity(table.len() + 1);
        levels.push(initial);
        Self { table, levels }
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.levels.last().expect("history always holds u0")
    }

    pub fn level(&self, k: usize) -> Result<&[f64]> {
        self.levels.get(k).map(Vec::as_slice).ok_or(Error::Index {
            index: k,
            max: self.levels.len() - 1,
        })
    }

    pub fn push(&mut self, level: Vec<f64>) -> Result<()> {
        if self.levels.len() > self.table.len() {
            return Err(Error::Index {
                index: self.levels.len(),
                max: self.table.len(),
            });
        }
        debug_assert_eq!(level.len(), self.levels[0].len());
        self.levels.push(level);
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.levels.len() {
            return Err(Error::Index {
                index: k,
                max: self.levels.len() - 1,
            });
        }
        Ok(())
    }

    /// `D_τ^{(β)} u^k = τ^{-β} Σ_{j=0}^k ϖ_{k-j} (u^j - u^0)`.
    pub fn caputo_cq_apply(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        let w = self.table.varpi();
        let u0 = &self.levels[0];
        let mut out = vec![0.0; u0.len()];
        for j in 1..=k {
            let c = w[k - j];
            for ((o, a), b) in out.iter_mut().zip(&self.levels[j]).zip(u0) {
                *o += c * (a - b);
            }
        }
        let scale = 1.0 / self.table.tau_beta();
        out.iter_mut().for_each(|o| *o *= scale);
        Ok(out)
    }

    /// The same operator in telescoped form `τ^{-β} Σ_{j=1}^k b_{k-j} (u^j - u^{j-1})`.
    pub fn caputo_cq_apply_telescoped(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        let b = self.table.b();
        let mut out = vec![0.0; self.levels[0].len()];
        for j in 1..=k {
            let c = b[k - j];
            for ((o, a), p) in out.iter_mut().zip(&self.levels[j]).zip(&self.levels[j - 1]) {
                *o += c * (a - p);
            }
        }
        let scale = 1.0 / self.table.tau_beta();
        out.iter_mut().for_each(|o| *o *= scale);
        Ok(out)
    }

    /// Known part of the convolution at step `k`: `Σ_{j<k} ϖ_{k-j} u^j - b_k u^0`.
    fn convolution_tail(&self, k: usize) -> Vec<f64> {
        let w = self.table.varpi();
        let u0 = &self.levels[0];
        let bk = self.table.b()[k];
        let mut acc: Vec<f64> = u0.iter().map(|v| (w[k] - bk) * v).collect();
        for j in 1..k {
            let c = w[k - j];
            for (a, v) in acc.iter_mut().zip(&self.levels[j]) {
                *a += c * v;
            }
        }
        acc
    }
}

/// Owns the assembled system for one run and advances the history.
pub struct Stepper<'a> {
    problem: &'a ProblemSpec,
    scheme: SchemeSpec,
    space: &'a SpectralSpace,
    tau: f64,
    /// Weight of the implicit level in the diffusion term.
    theta: f64,
    system: SkipBanded,
    factor: SkipBandedFactor,
    history: TimeHistory,
}

impl<'a> Stepper<'a> {
    pub fn new(
        problem: &'a ProblemSpec,
        scheme: SchemeSpec,
        space: &'a SpectralSpace,
    ) -> Result<Self> {
        if scheme.n_steps < 1 {
            return Err(Error::Domain("n_steps must be >= 1".into()));
        }
        if scheme.kind == SchemeKind::SemiImplicit2 && scheme.n_steps < 2 {
            return Err(Error::Domain(
                "second-order semi-implicit scheme needs n_steps >= 2".into(),
            ));
        }
        match (scheme.kind.is_linear(), problem.forcing()) {
            (true, Forcing::Nonlinear { .. }) => {
                return Err(Error::Domain(format!(
                    "{:?} needs a linear forcing f(x, t)",
                    scheme.kind
                )))
            }
            (false, Forcing::Linear(_)) => {
                return Err(Error::Domain(format!(
                    "{:?} needs a nonlinear forcing f(u)",
                    scheme.kind
                )))
            }
            _ => {}
        }
        if let Startup::RefinedFirstStep(0) = scheme.startup {
            return Err(Error::Domain(
                "refined startup needs at least one sub-step".into(),
            ));
        }
        let beta = problem.beta();
        let tau = problem.final_time() / scheme.n_steps as f64;
        let table = CoefficientTable::new(beta, tau, scheme.n_steps)?;
        let theta = if scheme.kind.is_second_order() {
            1.0 - beta / 2.0
        } else {
            1.0
        };
        let system = space.mass().combine(
            table.varpi()[0] / table.tau_beta(),
            space.stiffness(),
            problem.mu() * theta,
        );
        let factor = system.factor()?;
        let initial = space.interpolate(|x| (problem.initial())(x)).into_modal();
        Ok(Self {
            problem,
            scheme,
            space,
            tau,
            theta,
            system,
            factor,
            history: TimeHistory::new(table, initial),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn history(&self) -> &TimeHistory {
        &self.history
    }

    pub fn into_history(self) -> TimeHistory {
        self.history
    }

    /// The matrix factored for every step of this run.
    pub fn system(&self) -> &SkipBanded {
        &self.system
    }

    /// Index of the next level to be computed.
    pub fn next_index(&self) -> usize {
        self.history.len()
    }

    fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    /// Right-hand side pieces shared by all schemes, without the load.
    fn base_rhs(&self, k: usize) -> Vec<f64> {
        let tail = self.history.convolution_tail(k);
        let mut rhs = self.space.mass().mul_vec(&tail);
        let scale = -1.0 / self.history.table().tau_beta();
        rhs.iter_mut().for_each(|r| *r *= scale);
        if self.theta < 1.0 {
            let lagged = self
                .space
                .stiffness()
                .mul_vec(&self.history.levels()[k - 1]);
            let c = self.problem.mu() * (1.0 - self.theta);
            for (r, s) in rhs.iter_mut().zip(&lagged) {
                *r -= c * s;
            }
        }
        rhs
    }

    fn require_levels(&self, k: usize, needed: usize) -> Result<()> {
        if k < needed || k > self.history.len() || k > self.scheme.n_steps {
            return Err(Error::Index {
                index: k,
                max: self.history.len().min(self.scheme.n_steps),
            });
        }
        Ok(())
    }

    fn nodal_checked(&self, modal: &[f64], step: usize) -> Result<Vec<f64>> {
        let nodal = self.space.modal_to_nodal(modal);
        let magnitude = nodal.iter().fold(0.0f64, |m, v| {
            if v.is_finite() {
                m.max(v.abs())
            } else {
                f64::INFINITY
            }
        });
        if magnitude > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence { step, magnitude });
        }
        Ok(nodal)
    }

    fn solve(&self, mut rhs: Vec<f64>) -> Vec<f64> {
        self.factor.solve_in_place(&mut rhs);
        rhs
    }

    /// Linear schemes with `F^k = I_N(L_p f^k)`.
    pub fn step_linear(&self, k: usize) -> Result<Vec<f64>> {
        self.require_levels(k, 1)?;
        let Forcing::Linear(f) = self.problem.forcing() else {
            return Err(Error::Domain("linear step needs f(x, t)".into()));
        };
        let (t, t_prev) = (self.time(k), self.time(k - 1));
        let theta = self.theta;
        let nodal: Vec<f64> = self
            .space
            .nodes()
            .iter()
            .map(|&x| {
                if theta < 1.0 {
                    theta * f(x, t) + (1.0 - theta) * f(x, t_prev)
                } else {
                    f(x, t)
                }
            })
            .collect();
        let load = self.space.load_from_nodal(&nodal);
        let mut rhs = self.base_rhs(k);
        rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
        Ok(self.solve(rhs))
    }

    /// First-order semi-implicit step: `f` evaluated at `u^{k-1}`.
    pub fn step_semi_implicit_1(&self, k: usize) -> Result<Vec<f64>> {
        self.require_levels(k, 1)?;
        let Forcing::Nonlinear { f, .. } = self.problem.forcing() else {
            return Err(Error::Domain("semi-implicit step needs f(u)".into()));
        };
        let prev = self.nodal_checked(&self.history.levels()[k - 1], k - 1)?;
        let nodal: Vec<f64> = prev.iter().map(|&u| f(u)).collect();
        let load = self.space.load_from_nodal(&nodal);
        let mut rhs = self.base_rhs(k);
        rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
        Ok(self.solve(rhs))
    }

    /// Second-order semi-implicit step with the extrapolated load
    /// `(1 - β/2) f(2u^{k-1} - u^{k-2}) + (β/2) f(u^{k-1})`.
    pub fn step_semi_implicit_2(&self, k: usize) -> Result<Vec<f64>> {
        self.require_levels(k, 2)?;
        let Forcing::Nonlinear { f, .. } = self.problem.forcing() else {
            return Err(Error::Domain("semi-implicit step needs f(u)".into()));
        };
        let levels = self.history.levels();
        let prev = self.nodal_checked(&levels[k - 1], k - 1)?;
        let prev2 = self.space.modal_to_nodal(&levels[k - 2]);
        let theta = self.theta;
        let nodal: Vec<f64> = prev
            .iter()
            .zip(&prev2)
            .map(|(&a, &b)| theta * f(2.0 * a - b) + (1.0 - theta) * f(a))
            .collect();
        let load = self.space.load_from_nodal(&nodal);
        let mut rhs = self.base_rhs(k);
        rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
        Ok(self.solve(rhs))
    }

    /// `u¹` for the second-order semi-implicit scheme.
    fn startup_level(&self) -> Result<Vec<f64>> {
        match self.scheme.startup {
            Startup::RefinedFirstStep(substeps) => {
                let short = self.problem.with_final_time(self.tau)?;
                let spec = SchemeSpec::new(SchemeKind::SemiImplicit1, substeps);
                let history = run(&short, spec, self.space)?;
                Ok(history.last().to_vec())
            }
            Startup::ImplicitFirstStep => self.implicit_first_step(),
        }
    }

    /// Fully implicit first-order step by Picard iteration.
    fn implicit_first_step(&self) -> Result<Vec<f64>> {
        let Forcing::Nonlinear { f, .. } = self.problem.forcing() else {
            return Err(Error::Domain("implicit startup needs f(u)".into()));
        };
        let tau_beta = self.history.table().tau_beta();
        let system =
            self.space
                .mass()
                .combine(1.0 / tau_beta, self.space.stiffness(), self.problem.mu());
        let factor = system.factor()?;
        let u0 = &self.history.levels()[0];
        let base: Vec<f64> = self
            .space
            .mass()
            .mul_vec(u0)
            .iter()
            .map(|v| v / tau_beta)
            .collect();
        let mut u = u0.clone();
        for _ in 0..PICARD_MAX_ITER {
            let nodal = self.nodal_checked(&u, 1)?;
            let fu: Vec<f64> = nodal.iter().map(|&v| f(v)).collect();
            let load = self.space.load_from_nodal(&fu);
            let mut next: Vec<f64> = base.iter().zip(&load).map(|(a, b)| a + b).collect();
            factor.solve_in_place(&mut next);
            let change = next
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
            u = next;
            if change <= PICARD_TOL * scale {
                return Ok(u);
            }
        }
        Err(Error::FixedPoint(PICARD_MAX_ITER))
    }

    /// Compute and append the next level.
    pub fn advance(&mut self) -> Result<()> {
        let k = self.next_index();
        let next = match self.scheme.kind {
            SchemeKind::LinearP1 | SchemeKind::LinearP2 => self.step_linear(k),
            SchemeKind::SemiImplicit1 => self.step_semi_implicit_1(k),
            SchemeKind::SemiImplicit2 if k == 1 => self.startup_level(),
            SchemeKind::SemiImplicit2 => self.step_semi_implicit_2(k),
        }
        .map_err(|e| match e {
            Error::Divergence { .. } => e,
            e => Error::Step {
                step: k,
                source: Box::new(e),
            },
        })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k,
                magnitude: f64::INFINITY,
            });
        }
        self.history.push(next)
    }

    pub fn run_to_end(mut self) -> Result<TimeHistory> {
        while self.next_index() <= self.scheme.n_steps {
            self.advance()?;
        }
        let last = self.history.last().to_vec();
        self.nodal_checked(&last, self.scheme.n_steps)?;
        Ok(self.history)
    }
}

/// Advance `k = 1..n_steps` and return the whole history.
pub fn run(
    problem: &ProblemSpec,
    scheme: SchemeSpec,
    space: &SpectralSpace,
) -> Result<TimeHistory> {
    Stepper::new(problem, scheme, space)?.run_to_end()
}

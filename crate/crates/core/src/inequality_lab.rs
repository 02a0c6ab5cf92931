//! Numerical certificates for the discrete fractional Grönwall machinery:
//! the inverse-kernel identity, the Mittag–Leffler kernel bound and the
//! Grönwall bound itself on extremal (equality-saturated) sequences.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracweights::{
    cq_weights, gamma_ratio, inverse_weights, kernel_sum_closed_form, CoefficientTable,
};
use crate::mlf::{mlf_eval, MittagLefflerParams};

/// Term budget for Mittag–Leffler evaluations in the sweeps; small orders
/// with arguments near the top of the swept range need a few thousand.
const SWEEP_MAX_TERMS: usize = 100_000;

fn sweep_params(beta: f64) -> MittagLefflerParams {
    MittagLefflerParams::new(beta).with_max_terms(SWEEP_MAX_TERMS)
}

/// `max_k |Σ_{m<=k} P_{k-m} D_τ (v^m)² - ((v^k)² - (v^0)²)|`.
pub fn verify_kernel_identity(table: &CoefficientTable, v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Ok(0.0);
    }
    let n = v.len() - 1;
    if n > table.len() {
        return Err(Error::Index {
            index: n,
            max: table.len(),
        });
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let w = table.varpi();
    let inv_tb = 1.0 / table.tau_beta();
    let d: Vec<f64> = (0..=n)
        .map(|m| inv_tb * (0..=m).map(|j| w[m - j] * (sq[j] - sq[0])).sum::<f64>())
        .collect();
    let mut worst = 0.0f64;
    for k in 0..=n {
        let lhs: f64 = (0..=k)
            .map(|m| table.gronwall_kernel(k - m).expect("k <= K") * d[m])
            .sum();
        worst = worst.max((lhs - (sq[k] - sq[0])).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelBoundSlack {
    /// `min_k [E_β(μ t_k^β) - 1 - μ Σ_{j<k} P_{k-j} E_β(μ t_j^β)]`.
    pub min_slack: f64,
    pub argmin: usize,
    /// The same minimum divided by `E_β(μ t_k^β) - 1`.
    pub min_relative_slack: f64,
}

/// Minimum slack of `μ Σ_{j<k} P_{k-j} E_β(μ t_j^β) <= E_β(μ t_k^β) - 1` over `1 <= k <= n`.
pub fn verify_kernel_bound(
    beta: f64,
    mu: f64,
    tau: f64,
    n_steps: usize,
) -> Result<KernelBoundSlack> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let table = CoefficientTable::new(beta, tau, n_steps)?;
    let params = sweep_params(beta);
    let e: Vec<f64> = (0..=n_steps)
        .map(|j| mlf_eval(&params, mu * (j as f64 * tau).powf(beta)))
        .collect::<Result<_>>()?;
    let rho = table.varrho();
    let mut best = KernelBoundSlack {
        min_slack: f64::INFINITY,
        argmin: 0,
        min_relative_slack: f64::INFINITY,
    };
    for k in 1..=n_steps {
        let lhs = mu * table.tau_beta() * (0..k).map(|j| rho[k - j] * e[j]).sum::<f64>();
        let rhs = e[k] - 1.0;
        let slack = rhs - lhs;
        if slack < best.min_slack {
            best.min_slack = slack;
            best.argmin = k;
        }
        best.min_relative_slack = best.min_relative_slack.min(slack / rhs);
    }
    Ok(best)
}

/// Which hypothesis the simulated sequence saturates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GronwallForm {
    /// `D_τ (v^k)² <= Σ λ_{k-l} (v^l)² + v^{k-θ} g^{k-θ}`.
    Squared,
    /// `D_τ v^k <= Σ λ_{k-l} v^l + g^k`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallScenario {
    pub beta: f64,
    pub tau: f64,
    pub n_steps: usize,
    /// `λ_0..λ_{n-1}`.
    pub lambdas: Vec<f64>,
    pub lambda_bound: f64,
    /// `g^0..g^n`.
    pub g: Vec<f64>,
    pub theta: f64,
    pub v0: f64,
    pub form: GronwallForm,
    /// Each `v^k` is this fraction of the largest admissible value; 1 means equality.
    pub saturation: f64,
}

impl GronwallScenario {
    /// Largest step allowed by `τ <= (2λ(1+β))^{-1/β}`.
    pub fn max_tau(beta: f64, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            f64::INFINITY
        } else {
            (2.0 * lambda * (1.0 + beta)).powf(-1.0 / beta)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} outside (0, 1)", self.beta));
        }
        if !(self.tau > 0.0) || self.n_steps == 0 {
            return bad("need tau > 0 and n_steps >= 1".into());
        }
        if self.lambdas.len() != self.n_steps || self.g.len() != self.n_steps + 1 {
            return bad("need n lambdas and n + 1 g values".into());
        }
        if self.lambdas.iter().chain(&self.g).any(|x| !(*x >= 0.0)) || !(self.v0 >= 0.0) {
            return bad("lambdas, g and v0 must be non-negative".into());
        }
        if self.lambdas.iter().sum::<f64>() > self.lambda_bound * (1.0 + 1e-12) {
            return bad("lambda_bound below the sum of lambdas".into());
        }
        if !(0.0..=1.0).contains(&self.theta) || !(self.saturation > 0.0 && self.saturation <= 1.0)
        {
            return bad("theta must lie in [0, 1] and saturation in (0, 1]".into());
        }
        if self.tau > Self::max_tau(self.beta, self.lambda_bound) {
            return bad(format!("tau = {} violates the step restriction", self.tau));
        }
        Ok(())
    }

    /// `g^{j-θ}`, with `g^{-1}` read as `g^0`.
    fn g_shifted(&self, j: usize) -> f64 {
        let prev = if j == 0 { self.g[0] } else { self.g[j - 1] };
        (1.0 - self.theta) * self.g[j] + self.theta * prev
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallOutcome {
    pub v: Vec<f64>,
    pub bound: Vec<f64>,
    pub violated: bool,
    /// Smallest `(bound_k - v^k) / bound_k` over `k >= 1`.
    pub min_relative_slack: f64,
}

/// Build the extremal sequence step by step and compare it with
/// `2 E_β(2λ t_k^β) (v^0 + max_{m<=k} Σ_j P_{m-j} g^{j-θ})`.
pub fn run_gronwall_scenario(s: &GronwallScenario) -> Result<GronwallOutcome> {
    s.validate()?;
    let n = s.n_steps;
    let table = CoefficientTable::new(s.beta, s.tau, n)?;
    let w = table.varpi();
    let b = table.b();
    let inv_tb = 1.0 / table.tau_beta();
    let a = inv_tb - s.lambdas[0];
    if !(a > 0.0) {
        return Err(Error::NoRoot(1));
    }

    let mut v = Vec::with_capacity(n + 1);
    v.push(s.v0);
    for k in 1..=n {
        let next = match s.form {
            GronwallForm::Squared => {
                // a w² - B w - D = 0
                let g = s.g_shifted(k);
                let memory =
                    s.v0 * s.v0 * b[k - 1] - (1..k).map(|j| w[k - j] * v[j] * v[j]).sum::<f64>();
                let coupling: f64 = (1..k).map(|l| s.lambdas[k - l] * v[l] * v[l]).sum();
                let bq = (1.0 - s.theta) * g;
                let dq = inv_tb * memory + coupling + s.theta * v[k - 1] * g;
                let disc = bq * bq + 4.0 * a * dq;
                if !(disc >= 0.0) {
                    return Err(Error::NoRoot(k));
                }
                let root = (bq + disc.sqrt()) / (2.0 * a);
                if !(root >= 0.0) {
                    return Err(Error::NoRoot(k));
                }
                root
            }
            GronwallForm::Linear => {
                let memory = s.v0 * b[k - 1] - (1..k).map(|j| w[k - j] * v[j]).sum::<f64>();
                let coupling: f64 = (1..k).map(|l| s.lambdas[k - l] * v[l]).sum();
                let root = (inv_tb * memory + coupling + s.g[k]) / a;
                if !(root >= 0.0) {
                    return Err(Error::NoRoot(k));
                }
                root
            }
        };
        v.push(s.saturation * next);
    }

    let forcing = |j: usize| match s.form {
        GronwallForm::Squared => s.g_shifted(j),
        GronwallForm::Linear => s.g[j],
    };
    let rho = table.varrho();
    let params = sweep_params(s.beta);
    let mut bound = vec![f64::NAN; n + 1];
    bound[0] = 2.0 * s.v0;
    let mut running_max = 0.0f64;
    let mut violated = false;
    let mut min_relative_slack = f64::INFINITY;
    for k in 1..=n {
        let conv = table.tau_beta() * (0..=k).map(|j| rho[k - j] * forcing(j)).sum::<f64>();
        running_max = running_max.max(conv);
        let growth = mlf_eval(
            &params,
            2.0 * s.lambda_bound * (k as f64 * s.tau).powf(s.beta),
        )?;
        bound[k] = 2.0 * growth * (s.v0 + running_max);
        if v[k] > bound[k] {
            violated = true;
        }
        if bound[k] > 0.0 {
            min_relative_slack = min_relative_slack.min((bound[k] - v[k]) / bound[k]);
        }
    }
    Ok(GronwallOutcome {
        v,
        bound,
        violated,
        min_relative_slack,
    })
}

/// Largest value of `z^{1/β}` allowed for the growth factor, keeping
/// `E_β(z)` finite and the series short.
const GROWTH_EXPONENT_CAP: f64 = 300.0;

/// An admissible scenario with random data.
pub fn random_scenario<R: Rng>(rng: &mut R) -> GronwallScenario {
    let beta = rng.gen_range(0.1..0.95);
    let n = rng.gen_range(4..=96usize);
    let lambda_bound = if rng.gen_bool(0.15) {
        0.0
    } else {
        rng.gen_range(0.01..4.0)
    };
    let share = rng.gen_range(0.2..=1.0);
    let raw: Vec<f64> = (0..n)
        .map(|l| {
            if l == 0 || rng.gen_bool(0.3) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let lambdas: Vec<f64> = if total > 0.0 {
        raw.iter()
            .map(|r| r / total * share * lambda_bound)
            .collect()
    } else {
        vec![0.0; n]
    };
    let g: Vec<f64> = (0..=n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..2.0)
            }
        })
        .collect();
    let theta = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
    let mut tau = if lambda_bound > 0.0 {
        GronwallScenario::max_tau(beta, lambda_bound) * rng.gen_range(0.05..=1.0)
    } else {
        rng.gen_range(0.01..2.0)
    };
    if lambda_bound > 0.0 {
        let z_cap = GROWTH_EXPONENT_CAP.powf(beta);
        let t_cap = (z_cap / (2.0 * lambda_bound)).powf(1.0 / beta);
        tau = tau.min(t_cap / n as f64);
    }
    GronwallScenario {
        beta,
        tau,
        n_steps: n,
        lambdas,
        lambda_bound,
        g,
        theta,
        v0: rng.gen_range(0.0..2.0),
        form: if rng.gen_bool(0.5) {
            GronwallForm::Squared
        } else {
            GronwallForm::Linear
        },
        saturation: if rng.gen_bool(0.7) {
            1.0
        } else {
            rng.gen_range(0.3..1.0)
        },
    }
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub parameters: String,
    pub value: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(name: &str, parameters: String, value: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            parameters,
            value,
            pass,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:e},{}",
            self.name, self.parameters, self.value, self.pass
        )
    }
}

pub const CSV_HEADER: &str = "check_name,parameters,slack_or_residual,pass";

pub const SUITE_BETAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Sign chains, bounds and closed forms of the weight sequences, plus the
/// Mittag–Leffler kernel inequality.
pub fn lemma_suite(count: usize) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &beta in &SUITE_BETAS {
        let w = cq_weights(beta, count)?;
        let r = inverse_weights(beta, count)?;
        let b = crate::fracweights::partial_sums(&w);
        let params = format!("beta={beta};K={count}");

        // ϖ_0 = 1, ϖ_j < ϖ_{j+1} < 0 for j >= 1
        let mut margin = f64::INFINITY;
        let mut ok = w[0] == 1.0;
        for j in 1..count {
            ok &= w[j] < w[j + 1] && w[j + 1] < 0.0;
            margin = margin.min((w[j + 1] - w[j]).min(-w[j + 1]));
        }
        out.push(CheckRecord::new(
            "cq_weight_sign_chain",
            params.clone(),
            margin,
            ok,
        ));

        let mut margin = f64::INFINITY;
        let mut ok = true;
        for k in 1..=count {
            ok &= b[k] > 0.0 && b[k] < b[k - 1];
            margin = margin.min(b[k].min(b[k - 1] - b[k]));
        }
        out.push(CheckRecord::new(
            "partial_sum_positive_decreasing",
            params.clone(),
            margin,
            ok,
        ));

        let mut margin = f64::INFINITY;
        let mut ok = r[0] == 1.0;
        for j in 1..count {
            ok &= r[j] > r[j + 1] && r[j + 1] > 0.0;
            margin = margin.min((r[j] - r[j + 1]).min(r[j + 1]));
        }
        out.push(CheckRecord::new(
            "inverse_weight_sign_chain",
            params.clone(),
            margin,
            ok,
        ));

        let mut margin = f64::INFINITY;
        let mut ok = true;
        for j in 0..=count {
            let upper = ((j + 1) as f64).powf(beta - 1.0);
            ok &= r[j] <= upper;
            margin = margin.min(upper - r[j]);
            if j >= 1 {
                let upper = (j as f64).powf(beta - 1.0);
                ok &= r[j] <= upper;
                margin = margin.min(upper - r[j]);
            }
        }
        out.push(CheckRecord::new(
            "inverse_weight_power_bounds",
            params.clone(),
            margin,
            ok,
        ));

        // ϑ_m = δ_{m0}
        let mut worst = 0.0f64;
        let mut ok = true;
        for m in 0..=count {
            let theta: f64 = (0..=m).map(|j| w[j] * r[m - j]).sum();
            if m == 0 {
                ok &= theta == 1.0;
            } else {
                worst = worst.max(theta.abs());
            }
        }
        ok &= worst <= 1e-13;
        out.push(CheckRecord::new(
            "convolution_identity",
            params.clone(),
            worst,
            ok,
        ));

        // closed forms against the recurrences
        let (g_plus, g_minus) = (libm::tgamma(beta), libm::tgamma(1.0 - beta));
        let mut worst = 0.0f64;
        for k in 1..=count {
            let kf = k as f64;
            let varpi = -beta / g_minus * gamma_ratio(kf, -beta, 1.0);
            let varrho = gamma_ratio(kf, beta, 1.0) / g_plus;
            let b_prev = gamma_ratio(kf, -beta, 0.0) / g_minus;
            worst = worst
                .max(((w[k] - varpi) / varpi).abs())
                .max(((r[k] - varrho) / varrho).abs())
                .max(((b[k - 1] - b_prev) / b_prev).abs());
        }
        out.push(CheckRecord::new(
            "gamma_closed_forms",
            params.clone(),
            worst,
            worst <= 1e-12,
        ));

        let mut worst = 0.0f64;
        let mut ok = true;
        let mut direct = 0.0;
        for k in 1..=count {
            direct += r[k - 1];
            let closed = kernel_sum_closed_form(beta, k)?;
            worst = worst.max(((closed - direct) / direct).abs());
            ok &= closed <= (k as f64).powf(beta) / beta;
        }
        out.push(CheckRecord::new(
            "kernel_sum_closed_form",
            params.clone(),
            worst,
            ok && worst <= 1e-12,
        ));

        // b_{k-1} Γ(1-β) k^β → 1; only the approach is checked, not a rate constant
        if count >= 10 {
            let ratio = |k: usize| b[k - 1] * g_minus * (k as f64).powf(beta);
            let (coarse, fine) = ((ratio(count / 10) - 1.0).abs(), (ratio(count) - 1.0).abs());
            out.push(CheckRecord::new(
                "partial_sum_asymptotic_ratio",
                params,
                fine,
                fine < coarse,
            ));
        }
    }

    let cases: Vec<(f64, f64, f64)> = [0.2, 0.5, 0.8]
        .iter()
        .flat_map(|&beta| {
            [0.5, 1.0, 2.0]
                .iter()
                .flat_map(move |&mu| [2f64.powi(-4), 2f64.powi(-6)].map(|tau| (beta, mu, tau)))
        })
        .collect();
    let slacks = cases
        .par_iter()
        .map(|&(beta, mu, tau)| verify_kernel_bound(beta, mu, tau, 256))
        .collect::<Result<Vec<_>>>()?;
    for ((beta, mu, tau), slack) in cases.into_iter().zip(slacks) {
        out.push(CheckRecord::new(
            "mittag_leffler_kernel_bound",
            format!("beta={beta};mu={mu};tau={tau};n=256"),
            slack.min_slack,
            slack.min_slack >= -1e-12,
        ));
    }
    Ok(out)
}

/// Random sequences pushed through the inverse-kernel identity.
pub fn identity_suite(
    seed: u64,
    sequences_per_beta: usize,
    n_steps: usize,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for (i, &beta) in SUITE_BETAS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let inputs: Vec<(f64, Vec<f64>)> = (0..sequences_per_beta)
            .map(|_| {
                let tau = 10f64.powf(rng.gen_range(-3.0..0.5));
                let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
                let v = (0..=n_steps)
                    .map(|_| scale * rng.gen_range(-1.0..1.0))
                    .collect();
                (tau, v)
            })
            .collect();
        let worst = inputs
            .par_iter()
            .map(|(tau, v)| {
                let table = CoefficientTable::new(beta, *tau, n_steps)?;
                let max_sq = v.iter().map(|x| x * x).fold(0.0, f64::max);
                Ok(verify_kernel_identity(&table, v)? / max_sq)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push(CheckRecord::new(
            "kernel_identity",
            format!("beta={beta};sequences={sequences_per_beta};n={n_steps}"),
            worst,
            worst <= 1e-11,
        ));
    }
    Ok(out)
}

fn describe(s: &GronwallScenario) -> String {
    format!(
        "form={:?};beta={:.4};tau={:.4e};n={};lambda={:.4};theta={};saturation={:.3}",
        s.form, s.beta, s.tau, s.n_steps, s.lambda_bound, s.theta, s.saturation
    )
}

/// Randomized admissible scenarios plus the zero-coupling large-step case.
pub fn gronwall_suite(seed: u64, scenarios: usize) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list: Vec<(String, GronwallScenario)> = (0..scenarios)
        .map(|_| ("gronwall_random".to_string(), random_scenario(&mut rng)))
        .collect();
    for form in [GronwallForm::Squared, GronwallForm::Linear] {
        for theta in [0.0, 0.5, 1.0] {
            let n = 64;
            list.push((
                "gronwall_zero_coupling_large_step".to_string(),
                GronwallScenario {
                    beta: 0.5,
                    tau: 10.0,
                    n_steps: n,
                    lambdas: vec![0.0; n],
                    lambda_bound: 0.0,
                    g: (0..=n).map(|_| rng.gen_range(0.0..2.0)).collect(),
                    theta,
                    v0: 1.0,
                    form,
                    saturation: 1.0,
                },
            ));
        }
    }
    let outcomes = list
        .par_iter()
        .map(|(_, s)| run_gronwall_scenario(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(list
        .into_iter()
        .zip(outcomes)
        .map(|((name, s), o)| {
            CheckRecord::new(&name, describe(&s), o.min_relative_slack, !o.violated)
        })
        .collect())
}

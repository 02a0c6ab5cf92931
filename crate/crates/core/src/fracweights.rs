//! Generating-function coefficients of `(1 - z)^{±β}` and the discrete
//! Grönwall kernel built from them.
//!
//! All sequences are produced by first-order recurrences. The Gamma-function
//! closed forms go through [`gamma_ratio`], which avoids the cancellation of
//! plain log-Gamma differences at large arguments.

use crate::error::{Error, Result};

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "fractional order must lie in (0, 1), got {beta}"
        )))
    }
}

/// Taylor coefficients `ϖ_0..ϖ_K` of `(1 - z)^β`.
pub fn cq_weights(beta: f64, count: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let mut w = Vec::with_capacity(count + 1);
    w.push(1.0);
    for k in 1..=count {
        let prev = w[k - 1];
        w.push(prev * ((k as f64 - 1.0 - beta) / k as f64));
    }
    Ok(w)
}

/// Taylor coefficients `ϱ_0..ϱ_K` of `(1 - z)^{-β}`.
pub fn inverse_weights(beta: f64, count: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let mut r = Vec::with_capacity(count + 1);
    r.push(1.0);
    for k in 1..=count {
        let prev = r[k - 1];
        r.push(prev * ((k as f64 - 1.0 + beta) / k as f64));
    }
    Ok(r)
}

/// Running sums `b_k = Σ_{j<=k} ϖ_j`.
pub fn partial_sums(varpi: &[f64]) -> Vec<f64> {
    varpi
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// `Γ(x+a) / Γ(x+b)` for `x >= 1` and `|a|, |b| <= 1`.
///
/// Shifts `x` upward with the functional equation, then sums the Stirling
/// series of the log-ratio term by term so no large logarithms cancel.
pub fn gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    const SHIFT: f64 = 12.0;
    // B_{2n} / (2n (2n - 1)), n = 1..7
    const STIRLING: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
    ];
    let mut scale = 1.0;
    let mut x = x;
    while x < SHIFT {
        scale *= (x + b) / (x + a);
        x += 1.0;
    }
    let la = (a / x).ln_1p();
    let lb = (b / x).ln_1p();
    let mut log = ((x + a - 0.5) * la - a) - ((x + b - 0.5) * lb - b);
    let (ia, ib) = (1.0 / (x + a), 1.0 / (x + b));
    let (mut pa, mut pb) = (ia, ib);
    for c in STIRLING {
        log += c * (pa - pb);
        pa *= ia * ia;
        pb *= ib * ib;
    }
    scale * x.powf(a - b) * log.exp()
}

/// `Σ_{j=0}^{k-1} ϱ_j = Γ(k+β) / (Γ(1+β) Γ(k))`.
pub fn kernel_sum_closed_form(beta: f64, k: usize) -> Result<f64> {
    check_beta(beta)?;
    if k == 0 {
        return Err(Error::Domain("kernel sum needs k >= 1".into()));
    }
    let value = gamma_ratio(k as f64, beta, 0.0) / libm::tgamma(1.0 + beta);
    if !value.is_finite() {
        return Err(Error::Overflow(format!("kernel sum at k = {k}")));
    }
    Ok(value)
}

/// Precomputed weights for a run with `K` time steps of size `tau`.
///
/// Immutable once built; share it freely between readers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    beta: f64,
    tau: f64,
    varpi: Vec<f64>,
    varrho: Vec<f64>,
    b: Vec<f64>,
    tau_beta: f64,
}

impl CoefficientTable {
    pub fn new(beta: f64, tau: f64, count: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let varpi = cq_weights(beta, count)?;
        let varrho = inverse_weights(beta, count)?;
        let b = partial_sums(&varpi);
        Ok(Self {
            beta,
            tau,
            tau_beta: tau.powf(beta),
            varpi,
            varrho,
            b,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `τ^β`.
    pub fn tau_beta(&self) -> f64 {
        self.tau_beta
    }

    /// Largest index `K` stored.
    pub fn len(&self) -> usize {
        self.varpi.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn varpi(&self) -> &[f64] {
        &self.varpi
    }

    pub fn varrho(&self) -> &[f64] {
        &self.varrho
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Grönwall kernel entry `P_m = τ^β ϱ_m`.
    pub fn gronwall_kernel(&self, m: usize) -> Result<f64> {
        self.varrho
            .get(m)
            .map(|r| self.tau_beta * r)
            .ok_or(Error::Index {
                index: m,
                max: self.len(),
            })
    }
}

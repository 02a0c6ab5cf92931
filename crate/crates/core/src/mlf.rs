//! One-parameter Mittag–Leffler function `E_β(z) = Σ z^l / Γ(1 + lβ)` for
//! non-negative real arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MittagLefflerParams {
    pub beta: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl MittagLefflerParams {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            rel_tol: 1e-14,
            max_terms: 2000,
        }
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Domain(format!(
                "Mittag-Leffler order must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.rel_tol >= f64::EPSILON) {
            return Err(Error::Domain(format!(
                "rel_tol {} below machine epsilon",
                self.rel_tol
            )));
        }
        if self.max_terms < 10 {
            return Err(Error::Domain(format!("max_terms {} < 10", self.max_terms)));
        }
        Ok(())
    }
}

/// Truncated power series; each term is formed as `exp(l ln z - lnΓ(1 + lβ))`.
pub fn mlf_eval(params: &MittagLefflerParams, z: f64) -> Result<f64> {
    params.validate()?;
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "Mittag-Leffler argument must be a finite z >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let log_z = z.ln();
    let mut sum = 1.0;
    for l in 1..params.max_terms {
        let lf = l as f64;
        let term = (lf * log_z - libm::lgamma(1.0 + lf * params.beta)).exp();
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Overflow(format!("E_{}({z})", params.beta)));
        }
        if term < params.rel_tol * sum {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        z,
        max_terms: params.max_terms,
    })
}

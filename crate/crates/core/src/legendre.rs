//! Legendre–Galerkin discretization on `I = (-1, 1)` with homogeneous
//! Dirichlet data.
//!
//! The trial/test space is spanned by `φ_k = L_k - L_{k+2}`, `k = 0..N-2`.
//! In that basis the stiffness matrix is `diag(4k + 6)` and the mass matrix
//! only couples `k` with `k ± 2`. Nodal data lives on the `N + 1`
//! Legendre–Gauss–Lobatto (LGL) points.

use crate::error::{Error, Result};
use crate::linalg::SkipBanded;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// `(L_n(x), L_n'(x))` by the three-term recurrence.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        // L'_{k+1} = L'_{k-1} + (2k+1) L_k
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// `L_0(x)..L_n(x)`.
fn legendre_row(n: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n == 0 {
        return;
    }
    out[1] = x;
    for k in 1..n {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Evaluate `Σ a_n L_n(x)` with Clenshaw's recurrence.
pub fn legendre_series(a: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for n in (0..a.len()).rev() {
        let nf = n as f64;
        let alpha = (2.0 * nf + 1.0) / (nf + 1.0) * x;
        let beta = (nf + 1.0) / (nf + 2.0);
        let b0 = a[n] + alpha * b1 - beta * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// LGL nodes (ascending) and weights of degree `n`.
pub fn lgl_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::Domain("LGL rule needs degree >= 1".into()));
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // Interior roots of L'_N, Newton from Chebyshev–Gauss–Lobatto guesses.
    for j in 1..=n / 2 {
        let mut x = -(std::f64::consts::PI * j as f64 / nf).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_and_derivative(n, x);
            let d2 = (2.0 * x * d - nf * (nf + 1.0) * p) / (1.0 - x * x);
            let dx = d / d2;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NodeConvergence { node: j, degree: n });
        }
        nodes[j] = x;
        nodes[n - j] = -x;
    }
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre_and_derivative(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// `‖L_n‖² = 2 / (2n + 1)`.
fn legendre_norm_sq(n: usize) -> f64 {
    2.0 / (2.0 * n as f64 + 1.0)
}

/// The discrete space `V_N⁰` together with its LGL grid and Galerkin matrices.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    degree: usize,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    mass: SkipBanded,
    stiffness: SkipBanded,
    /// Row-major `L_n(x_i)`, `(N + 1) × (N + 1)`.
    vandermonde: Vec<f64>,
    fine_nodes: Vec<f64>,
    fine_weights: Vec<f64>,
}

impl SpectralSpace {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Domain(format!(
                "polynomial degree must be >= 2, got {degree}"
            )));
        }
        let (nodes, quad_weights) = lgl_rule(degree)?;
        let (fine_nodes, fine_weights) = lgl_rule(2 * degree)?;
        let dim = degree - 1;

        let mass_diag = (0..dim)
            .map(|k| legendre_norm_sq(k) + legendre_norm_sq(k + 2))
            .collect();
        let mass_off = (0..dim.saturating_sub(2))
            .map(|k| -legendre_norm_sq(k + 2))
            .collect();
        let mass = SkipBanded::new(mass_diag, mass_off);
        let stiffness = SkipBanded::diagonal((0..dim).map(|k| 4.0 * k as f64 + 6.0).collect());

        let np = degree + 1;
        let mut vandermonde = vec![0.0; np * np];
        for (i, &x) in nodes.iter().enumerate() {
            legendre_row(degree, x, &mut vandermonde[i * np..(i + 1) * np]);
        }
        Ok(Self {
            degree,
            nodes,
            quad_weights,
            mass,
            stiffness,
            vandermonde,
            fine_nodes,
            fine_weights,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of modal unknowns, `N - 1`.
    pub fn dim(&self) -> usize {
        self.degree - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn mass(&self) -> &SkipBanded {
        &self.mass
    }

    pub fn stiffness(&self) -> &SkipBanded {
        &self.stiffness
    }

    /// Legendre coefficients `a_0..a_N` of `Σ c_k φ_k`.
    pub fn modal_to_legendre(&self, modal: &[f64]) -> Vec<f64> {
        let n = self.degree;
        let mut a = vec![0.0; n + 1];
        for (k, &c) in modal.iter().enumerate() {
            a[k] += c;
            a[k + 2] -= c;
        }
        a
    }

    /// Inverse of [`modal_to_legendre`](Self::modal_to_legendre) for
    /// polynomials vanishing at `±1`; the two top coefficients are implied.
    pub fn legendre_to_modal(&self, a: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut c = vec![0.0; dim];
        for k in 0..dim {
            c[k] = a[k] + if k >= 2 { c[k - 2] } else { 0.0 };
        }
        c
    }

    /// Values of `Σ a_n L_n` at the LGL nodes.
    pub fn legendre_to_nodal(&self, a: &[f64]) -> Vec<f64> {
        let np = self.degree + 1;
        self.vandermonde
            .chunks_exact(np)
            .map(|row| row.iter().zip(a).map(|(v, c)| v * c).sum())
            .collect()
    }

    /// Legendre coefficients of the LGL interpolant of nodal data.
    pub fn nodal_to_legendre(&self, values: &[f64]) -> Vec<f64> {
        let n = self.degree;
        let np = n + 1;
        let mut a = vec![0.0; np];
        for (i, row) in self.vandermonde.chunks_exact(np).enumerate() {
            let wg = self.quad_weights[i] * values[i];
            for (acc, v) in a.iter_mut().zip(row) {
                *acc += wg * v;
            }
        }
        for (k, ak) in a.iter_mut().enumerate() {
            // discrete norm of L_N on the LGL grid is 2/N
            let norm = if k == n {
                2.0 / n as f64
            } else {
                legendre_norm_sq(k)
            };
            *ak /= norm;
        }
        a
    }

    pub fn modal_to_nodal(&self, modal: &[f64]) -> Vec<f64> {
        self.legendre_to_nodal(&self.modal_to_legendre(modal))
    }

    /// `(I_N g, φ_k)` for `k = 0..N-2`, integrated exactly.
    pub fn load_from_nodal(&self, values: &[f64]) -> Vec<f64> {
        let a = self.nodal_to_legendre(values);
        (0..self.dim())
            .map(|k| a[k] * legendre_norm_sq(k) - a[k + 2] * legendre_norm_sq(k + 2))
            .collect()
    }

    /// LGL interpolation with the linear boundary lift removed.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> SpectralFunction<'_> {
        let values: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        self.interpolate_nodal(&values)
    }

    pub fn interpolate_nodal(&self, values: &[f64]) -> SpectralFunction<'_> {
        let left = values[0];
        let right = values[self.degree];
        let lifted: Vec<f64> = values
            .iter()
            .zip(&self.nodes)
            .map(|(v, &x)| v - 0.5 * (left * (1.0 - x) + right * (1.0 + x)))
            .collect();
        let a = self.nodal_to_legendre(&lifted);
        SpectralFunction::new(self, self.legendre_to_modal(&a))
    }

    /// `H¹₀` projection, `(∂(Πf - f), ∂v) = 0` for all `v ∈ V_N⁰`.
    ///
    /// Uses `(∂f, ∂φ_k) = (2k + 3)(f, L'_{k+1})`, valid because `f(±1) = 0`,
    /// integrated on the over-resolved LGL grid.
    pub fn h10_project<F: Fn(f64) -> f64>(&self, f: F) -> Result<SpectralFunction<'_>> {
        let dim = self.dim();
        let mut load = vec![0.0; dim];
        let mut row = vec![0.0; self.degree + 1];
        for (&x, &w) in self.fine_nodes.iter().zip(&self.fine_weights) {
            let fx = f(x) * w;
            if fx == 0.0 {
                continue;
            }
            legendre_row(self.degree, x, &mut row);
            // L'_{k+1} = Σ_{m ≡ k (mod 2), m <= k} (2m+1) L_m
            let mut acc = [0.0; 2];
            for k in 0..dim {
                acc[k % 2] += (2.0 * k as f64 + 1.0) * row[k];
                load[k] += fx * (2.0 * k as f64 + 3.0) * acc[k % 2];
            }
        }
        let factor = self.stiffness.factor()?;
        Ok(SpectralFunction::new(self, factor.solve(&load)))
    }

    /// `‖u‖` through the mass matrix.
    pub fn l2_norm(&self, u: &SpectralFunction<'_>) -> f64 {
        self.modal_l2_norm(&u.modal)
    }

    pub fn modal_l2_norm(&self, modal: &[f64]) -> f64 {
        self.mass.quadratic_form(modal).max(0.0).sqrt()
    }

    /// `‖u - g‖` by quadrature on the `2N` LGL grid.
    pub fn l2_error<F: Fn(f64) -> f64>(&self, u: &SpectralFunction<'_>, reference: F) -> f64 {
        self.modal_l2_error(&u.modal, reference)
    }

    pub fn modal_l2_error<F: Fn(f64) -> f64>(&self, modal: &[f64], reference: F) -> f64 {
        let a = self.modal_to_legendre(modal);
        self.fine_nodes
            .iter()
            .zip(&self.fine_weights)
            .map(|(&x, &w)| {
                let d = legendre_series(&a, x) - reference(x);
                w * d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A member of `V_N⁰` given by its modal coefficients.
#[derive(Debug, Clone)]
pub struct SpectralFunction<'a> {
    space: &'a SpectralSpace,
    modal: Vec<f64>,
}

impl<'a> SpectralFunction<'a> {
    pub fn new(space: &'a SpectralSpace, modal: Vec<f64>) -> Self {
        assert_eq!(modal.len(), space.dim());
        Self { space, modal }
    }

    pub fn space(&self) -> &'a SpectralSpace {
        self.space
    }

    pub fn modal(&self) -> &[f64] {
        &self.modal
    }

    pub fn into_modal(self) -> Vec<f64> {
        self.modal
    }

    pub fn nodal_values(&self) -> Vec<f64> {
        self.space.modal_to_nodal(&self.modal)
    }

    pub fn eval(&self, x: f64) -> f64 {
        legendre_series(&self.space.modal_to_legendre(&self.modal), x)
    }
}

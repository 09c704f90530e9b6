//! Deterministic controllability of the kinetic system
//! `v̇ = φ_s`, `ż = v` on `[0, t]` from `x = (v, z)` to `x′ = (v′, z′)`.
//!
//! The minimal-energy control is `φ_s = B* R(t, s)* Q_t⁻¹ (x′ − R(t, 0)x)`,
//! in closed form `φ_s = y₁(6s − 2t)/t² + 6y₂(t − 2s)/t³` with
//! `y₁ = v′ − v`, `y₂ = z′ − z − vt`. Its energy is `2 d²_t(x, x′)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{bail, Result};
use crate::linalg::{self, Matrix};
use crate::quadrature::{self, QuadratureOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub d_prime: usize,
}

impl ControlProblem {
    pub fn new(t: f64, x: Vec<f64>, x_prime: Vec<f64>) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            bail!(InvalidArgument, "horizon must be positive, got {t}");
        }
        if x.is_empty() || !x.len().is_multiple_of(2) || x.len() != x_prime.len() {
            bail!(InvalidArgument, "endpoints must share an even dimension, got {} and {}", x.len(), x_prime.len());
        }
        let d_prime = x.len() / 2;
        Ok(Self { t, x, x_prime, d_prime })
    }

    /// `x′ − R(t, 0)x` split as `(y₁, y₂)`.
    pub fn target_gap(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.d_prime;
        let y1 = (0..n).map(|i| self.x_prime[i] - self.x[i]).collect();
        let y2 = (0..n).map(|i| self.x_prime[n + i] - self.x[n + i] - self.x[i] * self.t).collect();
        (y1, y2)
    }
}

/// `R(t, t0) = [[I, 0], [(t − t0)I, I]]`.
pub fn resolvent(t: f64, t0: f64, d_prime: usize) -> Matrix {
    let mut r = Matrix::identity(2 * d_prime);
    for i in 0..d_prime {
        r[(d_prime + i, i)] = t - t0;
    }
    r
}

/// `Q_t = [[tI, t²/2 I], [t²/2 I, t³/3 I]]`.
pub fn gram(t: f64, d_prime: usize) -> Matrix {
    block_matrix(d_prime, t, t * t / 2.0, t * t * t / 3.0)
}

/// `Q_t⁻¹ = [[4/t I, −6/t² I], [−6/t² I, 12/t³ I]]`.
pub fn gram_inverse(t: f64, d_prime: usize) -> Matrix {
    block_matrix(d_prime, 4.0 / t, -6.0 / (t * t), 12.0 / (t * t * t))
}

fn block_matrix(n: usize, p: f64, q: f64, r: f64) -> Matrix {
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = p;
        m[(i, n + i)] = q;
        m[(n + i, i)] = q;
        m[(n + i, n + i)] = r;
    }
    m
}

fn check_time(problem: &ControlProblem, s: f64) {
    assert!((0.0..=problem.t).contains(&s), "control time {s} outside [0, {}]", problem.t);
}

/// `φ_s` from the closed form.
pub fn optimal_control(problem: &ControlProblem, s: f64) -> Vec<f64> {
    check_time(problem, s);
    let t = problem.t;
    let (y1, y2) = problem.target_gap();
    let a = (6.0 * s - 2.0 * t) / (t * t);
    let b = 6.0 * (t - 2.0 * s) / (t * t * t);
    y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect()
}

/// `φ_s = B* R(t, s)* Q_t⁻¹ (x′ − R(t, 0)x)` by explicit matrix products.
pub fn optimal_control_gram(problem: &ControlProblem, s: f64) -> Vec<f64> {
    check_time(problem, s);
    let n = problem.d_prime;
    let t = problem.t;
    let free = resolvent(t, 0.0, n).mul_vec(&problem.x);
    let gap: Vec<f64> = problem.x_prime.iter().zip(&free).map(|(a, b)| a - b).collect();
    let w = gram_inverse(t, n).mul_vec(&gap);
    let rt = resolvent(t, s, n).transpose().mul_vec(&w);
    rt[..n].to_vec()
}

/// `I(t, x, x′) = ∫₀ᵗ |φ_s|² ds` by adaptive quadrature.
pub fn energy(problem: &ControlProblem) -> Result<f64> {
    let est = quadrature::integrate(
        |s| {
            let phi = optimal_control(problem, s.clamp(0.0, problem.t));
            linalg::dot(&phi, &phi)
        },
        0.0,
        problem.t,
        QuadratureOptions::with_tol(1e-14, 1e-13),
    )?;
    Ok(est.value)
}

/// `yᵀ Q_t⁻¹ y` with `y = x′ − R(t, 0)x`; equal to [`energy`].
pub fn energy_closed_form(problem: &ControlProblem) -> f64 {
    let t = problem.t;
    let (y1, y2) = problem.target_gap();
    y1.iter()
        .zip(&y2)
        .map(|(p, q)| 4.0 * p * p / t - 12.0 * p * q / (t * t) + 12.0 * q * q / (t * t * t))
        .sum()
}

/// Controlled path sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// States `(v, z)`, one per time.
    pub states: Vec<Vec<f64>>,
    /// `|ϕ_t − x′|`.
    pub endpoint_error: f64,
}

/// Integrates `v̇ = φ_s`, `ż = v` with classical RK4 over `steps` steps.
/// Fails if the endpoint misses `x′` by more than `10⁻⁶(1 + |x′|)`.
pub fn geodesic(problem: &ControlProblem, steps: usize) -> Result<Trajectory> {
    if steps < 2 {
        bail!(InvalidArgument, "geodesic needs at least 2 steps, got {steps}");
    }
    let n = problem.d_prime;
    let t = problem.t;
    let h = t / steps as f64;
    let rhs = |s: f64, y: &[f64]| -> Vec<f64> {
        let phi = optimal_control(problem, s.clamp(0.0, t));
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(&phi);
        out[n..].copy_from_slice(&y[..n]);
        out
    };
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(p, q)| p + a * q).collect() };
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = problem.x.clone();
    times.push(0.0);
    states.push(y.clone());
    for i in 0..steps {
        let s = i as f64 * h;
        let k1 = rhs(s, &y);
        let k2 = rhs(s + h / 2.0, &axpy(&y, &k1, h / 2.0));
        let k3 = rhs(s + h / 2.0, &axpy(&y, &k2, h / 2.0));
        let k4 = rhs(s + h, &axpy(&y, &k3, h));
        for j in 0..2 * n {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        times.push(if i + 1 == steps { t } else { s + h });
        states.push(y.clone());
    }
    let miss: Vec<f64> = y.iter().zip(&problem.x_prime).map(|(a, b)| a - b).collect();
    let endpoint_error = linalg::norm(&miss);
    let tol = 1e-6 * (1.0 + linalg::norm(&problem.x_prime));
    if !(endpoint_error < tol) {
        bail!(Tolerance, "geodesic endpoint misses the target by {endpoint_error:e} (tolerance {tol:e})");
    }
    Ok(Trajectory { times, states, endpoint_error })
}

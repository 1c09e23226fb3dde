//! Queue parameters, the per-frequency characteristic roots, and the
//! tridiagonal generator of the sojourn-density evolution.
//!
//! With the service rate normalised to one, the conditional sojourn density
//! `p_n(t)` of a customer who finds `n` others present evolves as
//!
//! ```text
//! p_n' = rho p_{n+1} - (1 + rho) p_n + n/(n+1) p_{n-1},   0 <= n <= K-1
//! ```
//!
//! with `p_n(0) = 1/(n+1)` and the boundary fold `p_K = p_{K-1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Traffic intensity and capacity of one finite-capacity PS queue.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    rho: f64,
    capacity: usize,
}

impl ModelParams {
    pub fn new(rho: f64, capacity: usize) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParams(format!("rho must be positive, got {rho}")));
        }
        if capacity == 0 {
            return Err(Error::InvalidParams("capacity must be at least 1".into()));
        }
        Ok(Self { rho, capacity })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Frequency at which the characteristic roots merge, `-(1 - sqrt(rho))^2`.
    pub fn coalescence(&self) -> f64 {
        let s = 1.0 - self.rho.sqrt();
        -s * s
    }

    /// Heavy-traffic scaling variable `(rho - 1) K^{2/3}`.
    pub fn eta(&self) -> f64 {
        (self.rho - 1.0) * (self.capacity as f64).powf(2.0 / 3.0)
    }
}

/// Roots of `rho z^2 - (1 + rho + theta) z + 1 = 0`.
///
/// Labeling: for real `theta` above coalescence `z_plus > z_minus > 0`. On the
/// real axis below coalescence the roots are conjugate and `z_plus` carries
/// the positive imaginary part. Off the real axis `z_plus` is the root of
/// larger modulus.
pub fn characteristic_roots(params: &ModelParams, theta: Complex64) -> (Complex64, Complex64) {
    let rho = params.rho;
    let b = Complex64::new(1.0 + rho, 0.0) + theta;
    let disc = b * b - 4.0 * rho;

    if theta.im == 0.0 && disc.im == 0.0 && disc.re <= 0.0 {
        // Conjugate pair (or double root) on the real axis.
        let half = b.re / (2.0 * rho);
        let spread = (-disc.re).sqrt() / (2.0 * rho);
        return (Complex64::new(half, -spread), Complex64::new(half, spread));
    }

    let mut s = disc.sqrt();
    // Choose the sign that avoids cancellation, then recover the partner via Vieta.
    if (b.conj() * s).re < 0.0 {
        s = -s;
    }
    let big = (b + s) / (2.0 * rho);
    let small = Complex64::new(1.0 / rho, 0.0) / big;
    if big.norm() >= small.norm() {
        (small, big)
    } else {
        (big, small)
    }
}

/// Per-frequency quantities entering the exact transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootData {
    pub theta: Complex64,
    pub z_minus: Complex64,
    pub z_plus: Complex64,
    /// `z_plus / (z_plus - z_minus)`
    pub alpha: Complex64,
    /// `z_minus (z_plus / z_minus)^alpha`, principal branch.
    pub m_factor: Complex64,
    pub rho: f64,
}

impl RootData {
    /// True when `theta` is real and the roots are real and distinct.
    pub fn is_real_pair(&self) -> bool {
        self.theta.im == 0.0 && self.z_minus.im == 0.0 && self.z_plus.im == 0.0
    }

    /// Half the root separation, `(z_plus - z_minus) / 2`.
    pub fn half_gap(&self) -> Complex64 {
        (self.z_plus - self.z_minus) * 0.5
    }

    pub fn center(&self) -> Complex64 {
        (self.z_plus + self.z_minus) * 0.5
    }
}

/// Relative coalescence tolerance for [`root_data`].
pub const COALESCENCE_TOL: f64 = 1e-10;

pub fn root_data(params: &ModelParams, theta: Complex64) -> Result<RootData> {
    let (z_minus, z_plus) = characteristic_roots(params, theta);
    let gap = (z_plus - z_minus).norm();
    if gap < COALESCENCE_TOL * (1.0 + z_plus.norm()) {
        return Err(Error::CoalescentRoots {
            theta: theta.re,
            gap,
        });
    }
    let alpha = z_plus / (z_plus - z_minus);
    let m_factor = z_minus * (alpha * (z_plus / z_minus).ln()).exp();
    Ok(RootData {
        theta,
        z_minus,
        z_plus,
        alpha,
        m_factor,
        rho: params.rho,
    })
}

/// Real-frequency convenience wrapper around [`root_data`].
pub fn root_data_real(params: &ModelParams, theta: f64) -> Result<RootData> {
    root_data(params, Complex64::new(theta, 0.0))
}

/// The `K x K` tridiagonal operator `A` with `p' = A p`.
///
/// Row `n` holds `sub[n-1]` at column `n-1`, `diag[n]` and `sup[n]` at
/// column `n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub capacity: usize,
    pub rho: f64,
    /// `n/(n+1)` for `n = 1..K-1`
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// `rho` for rows `0..K-2`
    pub sup: Vec<f64>,
}

pub fn generator_matrix(params: &ModelParams) -> GeneratorMatrix {
    let k = params.capacity;
    let rho = params.rho;
    let sub = (1..k).map(|n| n as f64 / (n as f64 + 1.0)).collect();
    let mut diag = vec![-(1.0 + rho); k];
    // p_K = p_{K-1} folds rho back onto the last diagonal entry.
    diag[k - 1] = -1.0;
    let sup = vec![rho; k.saturating_sub(1)];
    GeneratorMatrix {
        capacity: k,
        rho,
        sub,
        diag,
        sup,
    }
}

impl GeneratorMatrix {
    /// `out = A x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let k = self.capacity;
        for n in 0..k {
            let mut acc = self.diag[n] * x[n];
            if n > 0 {
                acc += self.sub[n - 1] * x[n - 1];
            }
            if n + 1 < k {
                acc += self.sup[n] * x[n + 1];
            }
            out[n] = acc;
        }
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.capacity)
            .map(|n| {
                let mut s = self.diag[n].abs();
                if n > 0 {
                    s += self.sub[n - 1].abs();
                }
                if n + 1 < self.capacity {
                    s += self.sup[n].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Off-diagonal of the symmetric matrix similar to `A`: `sqrt(rho n/(n+1))`.
    pub fn symmetric_offdiag(&self) -> Vec<f64> {
        self.sub
            .iter()
            .zip(&self.sup)
            .map(|(l, u)| (l * u).sqrt())
            .collect()
    }

    /// Dense row-major copy; intended for tests and small `K`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let k = self.capacity;
        let mut m = vec![vec![0.0; k]; k];
        for n in 0..k {
            m[n][n] = self.diag[n];
            if n > 0 {
                m[n][n - 1] = self.sub[n - 1];
            }
            if n + 1 < k {
                m[n][n + 1] = self.sup[n];
            }
        }
        m
    }
}

/// Initial density vector `p_n(0) = 1/(n+1)`.
pub fn initial_density(capacity: usize) -> Vec<f64> {
    (0..capacity).map(|n| 1.0 / (n as f64 + 1.0)).collect()
}

//! Laplace transform `p̂_n(θ) = ∫ e^{-θt} p_n(t) dt` of the conditional
//! sojourn density.
//!
//! Two routes: the closed form assembled from the Green's function pair
//! `(G_n, H_n)`, and a direct solve of the tridiagonal system
//! `(θI - A) p̂ = p(0)`, which also accepts complex `θ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{delta_g, delta_h, g_integral, h_contour};
use crate::model::{generator_matrix, initial_density, root_data_real, GeneratorMatrix, ModelParams};
use crate::scaled::Scaled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMethod {
    Theorem21,
    Resolvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformVector {
    pub theta: Complex64,
    /// `p̂_n` for `n = 0..K-1`.
    pub values: Vec<Complex64>,
    pub method: TransformMethod,
}

impl TransformVector {
    /// Real parts; exact for real `θ`.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

/// `|α - round(α)|` below which the closed form is refused.
pub const ALPHA_INTEGER_TOL: f64 = 1e-6;
/// `|ΔH_K| / |H_{K-1}|` below which `θ` is treated as a pole.
pub const POLE_TOL: f64 = 1e-11;

struct ClosedForm {
    values: Vec<f64>,
    /// The generic-`n` expression evaluated at `n = K-1`.
    #[cfg_attr(not(test), allow(dead_code))]
    generic_last: f64,
}

fn closed_form(params: &ModelParams, theta: f64) -> Result<ClosedForm> {
    let rd = root_data_real(params, theta)?;
    if !rd.is_real_pair() {
        return Err(Error::Domain(format!(
            "closed form needs real roots, theta = {theta} is below coalescence {}",
            params.coalescence()
        )));
    }
    let alpha = rd.alpha.re;
    if (alpha - alpha.round()).abs() < ALPHA_INTEGER_TOL {
        return Err(Error::DegenerateAlpha { alpha });
    }
    let k = params.capacity();
    let rho = params.rho();

    let g = (0..k).map(|n| g_integral(&rd, n)).collect::<Result<Vec<_>>>()?;
    let h = (0..k).map(|n| h_contour(&rd, n)).collect::<Result<Vec<_>>>()?;
    let dh = delta_h(&rd, k)?;
    let dg = delta_g(&rd, k)?;

    let rel = (dh.ln_abs() - h[k - 1].ln_abs()).exp();
    if !(rel > POLE_TOL) {
        let (lo, hi) = nearest_pole_bracket(params, theta);
        return Err(Error::NearPole {
            theta,
            magnitude: rel,
            lo,
            hi,
        });
    }

    // prefix[n] = sum_{l<=n} rho^l H_l, suffix[n] = sum_{l>=n} rho^l G_l
    let mut prefix = Vec::with_capacity(k);
    let mut acc = Scaled::ZERO;
    for (l, hl) in h.iter().enumerate() {
        acc = acc.add(Scaled::powi_f64(rho, l) * *hl);
        prefix.push(acc);
    }
    let mut suffix = vec![Scaled::ZERO; k + 1];
    for l in (0..k).rev() {
        suffix[l] = suffix[l + 1].add(Scaled::powi_f64(rho, l) * g[l]);
    }

    let m = Scaled::from_f64(rd.m_factor.re);
    let ratio = dg / dh;
    let total = prefix[k - 1];
    let generic = |n: usize| -> f64 {
        let t1 = g[n] * prefix[n];
        let t2 = h[n] * suffix[n + 1];
        let t3 = ratio * h[n] * total;
        (m * t1.add(t2).sub(t3)).to_f64()
    };
    let mut values: Vec<f64> = (0..k - 1).map(generic).collect();
    let last = total / (Scaled::from_f64(k as f64) * Scaled::powi_f64(rho, k) * dh);
    values.push(last.to_f64());
    Ok(ClosedForm {
        values,
        generic_last: generic(k - 1),
    })
}

fn nearest_pole_bracket(params: &ModelParams, theta: f64) -> (f64, f64) {
    let spec = crate::spectrum::eigen_spectrum(params);
    let nearest = spec
        .eigenvalues
        .iter()
        .copied()
        .min_by(|a, b| (a - theta).abs().total_cmp(&(b - theta).abs()))
        .unwrap_or(theta);
    (nearest.min(theta), nearest.max(theta))
}

/// Closed-form transform at real `θ` above the coalescence point.
pub fn transform_theorem21(params: &ModelParams, theta: f64) -> Result<TransformVector> {
    let cf = closed_form(params, theta)?;
    Ok(TransformVector {
        theta: Complex64::new(theta, 0.0),
        values: cf.values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        method: TransformMethod::Theorem21,
    })
}

/// Relative pivot size below which the shifted system counts as singular.
pub const PIVOT_TOL: f64 = 1e-13;

/// Solves `(θI - A) x = rhs` by Gaussian elimination with partial pivoting
/// on the tridiagonal band.
pub fn solve_shifted(gen: &GeneratorMatrix, theta: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let k = gen.capacity;
    assert_eq!(rhs.len(), k, "right-hand side length must equal capacity");
    let scale = theta.norm() + gen.norm_inf();
    let tiny = PIVOT_TOL * scale.max(1.0);

    let mut d: Vec<Complex64> = gen.diag.iter().map(|&a| theta - a).collect();
    let dl: Vec<Complex64> = gen.sub.iter().map(|&a| Complex64::new(-a, 0.0)).collect();
    let mut du: Vec<Complex64> = gen.sup.iter().map(|&a| Complex64::new(-a, 0.0)).collect();
    // second superdiagonal created by row interchanges
    let mut du2 = vec![Complex64::new(0.0, 0.0); k.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..k.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i].norm() < tiny {
                return Err(Error::SingularSystem {
                    pivot: d[i].norm(),
                    row: i,
                });
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] = b[i + 1] - fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 1 < k - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[k - 1].norm() < tiny {
        return Err(Error::SingularSystem {
            pivot: d[k - 1].norm(),
            row: k - 1,
        });
    }

    b[k - 1] /= d[k - 1];
    if k > 1 {
        b[k - 2] = (b[k - 2] - du[k - 2] * b[k - 1]) / d[k - 2];
    }
    for i in (0..k.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    Ok(b)
}

/// Transform by a direct tridiagonal solve; valid for any `θ` off the pole set.
pub fn resolvent_solve(params: &ModelParams, theta: Complex64) -> Result<TransformVector> {
    let gen = generator_matrix(params);
    let rhs: Vec<Complex64> = initial_density(params.capacity())
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let values = solve_shifted(&gen, theta, &rhs)?;
    Ok(TransformVector {
        theta,
        values,
        method: TransformMethod::Resolvent,
    })
}

/// Conditional moments `E[V^order | N(0-) = n]` for `order` 1 or 2.
pub fn conditional_moments(params: &ModelParams, order: u32) -> Result<Vec<f64>> {
    if !(1..=2).contains(&order) {
        return Err(Error::Domain(format!("moment order must be 1 or 2, got {order}")));
    }
    let gen = generator_matrix(params);
    let zero = Complex64::new(0.0, 0.0);
    let ones = vec![Complex64::new(1.0, 0.0); params.capacity()];
    let m1 = solve_shifted(&gen, zero, &ones)?;
    let out = if order == 1 {
        m1
    } else {
        let rhs: Vec<Complex64> = m1.iter().map(|v| v * 2.0).collect();
        solve_shifted(&gen, zero, &rhs)?
    };
    Ok(out.into_iter().map(|v| v.re).collect())
}

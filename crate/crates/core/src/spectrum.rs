//! Pole set of the transform and the relaxation rate `θ_s`.
//!
//! The poles are the eigenvalues of the generator `A`. With
//! `D = diag(sqrt(rho^n (n+1)))`, `D A D^{-1}` is symmetric tridiagonal with
//! off-diagonal `b_n = sqrt(rho n/(n+1))`, so all poles are real and Sturm
//! bisection finds each one to working precision. The same poles are the
//! zeros of `ΔH_K = H_K - H_{K-1}`, which gives an independent route.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::delta_h;
use crate::model::{generator_matrix, root_data_real, ModelParams};
use crate::scaled::Scaled;
use crate::special::{airy_max_root, solve_r1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Eigen,
    #[serde(rename = "deltaH")]
    DeltaH,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest (least negative) pole.
    pub theta_s: f64,
    pub method: SpectrumMethod,
}

/// Diagonal and squared off-diagonal of the symmetrized generator.
struct SymTridiag {
    diag: Vec<f64>,
    /// `off2[i]` couples rows `i` and `i+1`.
    off2: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl SymTridiag {
    fn new(params: &ModelParams) -> Self {
        let gen = generator_matrix(params);
        let off2: Vec<f64> = gen.sub.iter().zip(&gen.sup).map(|(l, u)| l * u).collect();
        let k = gen.capacity;
        let off = |i: usize| if i < off2.len() { off2[i].sqrt() } else { 0.0 };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for n in 0..k {
            let r = off(n) + if n > 0 { off(n - 1) } else { 0.0 };
            lo = lo.min(gen.diag[n] - r);
            hi = hi.max(gen.diag[n] + r);
        }
        SymTridiag {
            diag: gen.diag,
            off2,
            lo,
            hi: hi.min(0.0),
        }
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.diag.len() {
                break;
            }
            q = self.diag[i + 1] - x - self.off2[i] / q;
        }
        count
    }

    /// `j`-th smallest eigenvalue, bisected until the bracket cannot shrink.
    fn eigenvalue(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = (self.lo, self.hi);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

/// All `K` poles by Sturm bisection.
pub fn eigen_spectrum(params: &ModelParams) -> Spectrum {
    let t = SymTridiag::new(params);
    let k = params.capacity();
    let eigenvalues: Vec<f64> = if k >= 256 {
        (0..k).into_par_iter().map(|j| t.eigenvalue(j)).collect()
    } else {
        (0..k).map(|j| t.eigenvalue(j)).collect()
    };
    let theta_s = eigenvalues[k - 1];
    Spectrum {
        eigenvalues,
        theta_s,
        method: SpectrumMethod::Eigen,
    }
}

/// Only the dominant pole; `O(K)` per bisection step.
pub fn theta_s_exact(params: &ModelParams) -> f64 {
    SymTridiag::new(params).eigenvalue(params.capacity() - 1)
}

// ---------------------------------------------------------------------------
// ΔH_K route

/// Bracket tolerance for the ΔH_K roots.
pub const DELTA_H_ROOT_TOL: f64 = 1e-10;

fn coalescence_skip(theta_c: f64) -> f64 {
    1e-7 * (1.0 + theta_c.abs())
}

fn delta_h_at(params: &ModelParams, theta: f64) -> Result<Scaled> {
    let rd = root_data_real(params, theta)?;
    delta_h(&rd, params.capacity())
}

/// Value relative to `exp(reference)`, as a plain float.
fn relative(s: Scaled, reference: f64) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    s.value * (s.log_scale - reference).exp()
}

/// Illinois regula falsi on a bracket `[a, b]` with `f(a) f(b) < 0`.
fn refine_root(params: &ModelParams, mut a: f64, fa: Scaled, mut b: f64, fb: Scaled) -> Result<f64> {
    let reference = fa.ln_abs().max(fb.ln_abs());
    let (mut fa, mut fb) = (relative(fa, reference), relative(fb, reference));
    let mut side = 0i32;
    for _ in 0..200 {
        if (b - a).abs() < DELTA_H_ROOT_TOL {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        let lo = a.min(b);
        let hi = a.max(b);
        let margin = 1e-3 * (hi - lo);
        if !(c > lo + margin && c < hi - margin) {
            c = 0.5 * (a + b);
        }
        let fc = relative(delta_h_at(params, c)?, reference);
        if fc == 0.0 {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Roots of `ΔH_K` found by scanning downward from `θ = 0` to `lower`
/// (clipped to the lower edge of the complex-root band), stopping after
/// `max_roots` roots. Returned in descending order.
pub fn delta_h_roots(params: &ModelParams, lower: f64, max_roots: usize) -> Result<Vec<f64>> {
    let k = params.capacity() as f64;
    let c_hi = params.coalescence();
    let c_lo = -(1.0 + params.rho().sqrt()).powi(2);
    let floor = lower.max(c_lo + coalescence_skip(c_lo));
    let base_step = 0.25 / k;

    let eval = |theta: f64| -> Result<Option<Scaled>> {
        match delta_h_at(params, theta) {
            Ok(v) => Ok(Some(v)),
            Err(Error::CoalescentRoots { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut roots = Vec::new();
    let mut theta = 0.0;
    if (theta - c_hi).abs() < coalescence_skip(c_hi) {
        theta = c_hi - coalescence_skip(c_hi);
    }
    let mut prev: Option<(f64, Scaled)> = eval(theta)?.map(|v| (theta, v));
    while theta > floor && roots.len() < max_roots {
        let dist = (theta - c_hi).abs().min((theta - c_lo).abs());
        let mut next = theta - base_step.min(dist / 10.0).max(1e-12);
        if (next - c_hi).abs() < coalescence_skip(c_hi) {
            next = c_hi - coalescence_skip(c_hi);
        }
        if next < floor {
            next = floor;
        }
        if next >= theta {
            break;
        }
        let cur = eval(next)?;
        if let (Some((pt, pv)), Some(cv)) = (prev, cur) {
            if cv.is_zero() {
                roots.push(next);
            } else if pv.signum() != cv.signum() && !pv.is_zero() {
                roots.push(refine_root(params, pt, pv, next, cv)?);
            }
        }
        prev = cur.map(|v| (next, v));
        theta = next;
    }
    Ok(roots)
}

/// Dominant pole from the first sign change of `ΔH_K` below zero.
pub fn theta_s_via_delta_h(params: &ModelParams) -> Result<f64> {
    let c_lo = -(1.0 + params.rho().sqrt()).powi(2);
    delta_h_roots(params, c_lo, 1)?
        .first()
        .copied()
        .ok_or(Error::NoBracket { lo: c_lo, hi: 0.0 })
}

/// Full pole set from `ΔH_K`; fails unless exactly `K` roots are found.
pub fn delta_h_spectrum(params: &ModelParams) -> Result<Spectrum> {
    let k = params.capacity();
    let c_lo = -(1.0 + params.rho().sqrt()).powi(2);
    let mut roots = delta_h_roots(params, c_lo, k)?;
    if roots.len() != k {
        return Err(Error::NoBracket { lo: c_lo, hi: 0.0 });
    }
    roots.reverse();
    let theta_s = roots[k - 1];
    Ok(Spectrum {
        eigenvalues: roots,
        theta_s,
        method: SpectrumMethod::DeltaH,
    })
}

// ---------------------------------------------------------------------------
// Large-K expansions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Critical,
    Super,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEstimate {
    pub regime: Regime,
    pub eta: f64,
    /// Contributions in increasing order of `1/K`.
    pub terms: Vec<f64>,
    pub theta_s_estimate: f64,
}

impl AsymptoticEstimate {
    fn from_terms(regime: Regime, eta: f64, terms: Vec<f64>) -> Self {
        let theta_s_estimate = terms.iter().sum();
        AsymptoticEstimate {
            regime,
            eta,
            terms,
            theta_s_estimate,
        }
    }
}

/// Default half-width of the critical window in `η`.
pub const CRITICAL_WINDOW: f64 = 3.0;

/// `ρ < 1`: four-term expansion with the largest Airy zero `r_0`.
pub fn asymp_subcritical(params: &ModelParams) -> Result<AsymptoticEstimate> {
    let rho = params.rho();
    if rho >= 1.0 {
        return Err(Error::Regime(format!("sub-critical expansion needs rho < 1, got {rho}")));
    }
    let k = params.capacity() as f64;
    let s = rho.sqrt();
    let r0 = airy_max_root();
    let terms = vec![
        -(1.0 - s) * (1.0 - s),
        -s / k,
        s * r0 / k.powf(4.0 / 3.0),
        -8.0 * s * r0 * r0 / (15.0 * k.powf(5.0 / 3.0)),
    ];
    Ok(AsymptoticEstimate::from_terms(Regime::Sub, params.eta(), terms))
}

pub fn asymp_critical(params: &ModelParams) -> Result<AsymptoticEstimate> {
    asymp_critical_window(params, CRITICAL_WINDOW)
}

/// `ρ` near one with `η = (ρ-1) K^{2/3}` inside `[-window, window]`.
pub fn asymp_critical_window(params: &ModelParams, window: f64) -> Result<AsymptoticEstimate> {
    let eta = params.eta();
    if eta.abs() > window {
        return Err(Error::Regime(format!(
            "critical expansion needs |eta| <= {window}, got eta = {eta}"
        )));
    }
    let k = params.capacity() as f64;
    let r1 = solve_r1(eta)?;
    let num = 16.0 * r1.powi(3) + 8.0 * eta * eta * r1 * r1 + (eta.powi(4) + 19.0 * eta) * r1 + eta.powi(3) + 9.0;
    let terms = vec![-1.0 / k, r1 / k.powf(4.0 / 3.0), -num / (30.0 * r1 * k.powf(5.0 / 3.0))];
    Ok(AsymptoticEstimate::from_terms(Regime::Critical, eta, terms))
}

/// `ρ > 1`: expansion in powers of `1/K`.
pub fn asymp_supercritical(params: &ModelParams) -> Result<AsymptoticEstimate> {
    let rho = params.rho();
    if rho <= 1.0 {
        return Err(Error::Regime(format!("super-critical expansion needs rho > 1, got {rho}")));
    }
    let k = params.capacity() as f64;
    let d = rho - 1.0;
    let terms = vec![
        -1.0 / k,
        -1.0 / (d * k * k),
        -1.0 / (d * d * k.powi(3)),
        (rho * rho + 1.0) / (d.powi(4) * k.powi(4)),
    ];
    Ok(AsymptoticEstimate::from_terms(Regime::Super, params.eta(), terms))
}

/// Regime picked by `η`: critical when `|η| <= 3`, otherwise by its sign.
pub fn regime_for(params: &ModelParams) -> Regime {
    let eta = params.eta();
    if eta.abs() <= CRITICAL_WINDOW {
        Regime::Critical
    } else if eta < 0.0 {
        Regime::Sub
    } else {
        Regime::Super
    }
}

pub fn asymp_for(params: &ModelParams, regime: Regime) -> Result<AsymptoticEstimate> {
    match regime {
        Regime::Sub => asymp_subcritical(params),
        Regime::Critical => asymp_critical(params),
        Regime::Super => asymp_supercritical(params),
    }
}

/// Exact `θ_s` together with the estimate of the regime `η` selects.
pub fn theta_s_auto(params: &ModelParams) -> Result<(f64, AsymptoticEstimate)> {
    let exact = theta_s_exact(params);
    let est = asymp_for(params, regime_for(params))?;
    Ok((exact, est))
}

//! The two homogeneous solutions of the transformed recurrence
//!
//! ```text
//! (n+1) rho y_{n+1} - (n+1)(1 + rho + theta) y_n + n y_{n-1} = 0
//! ```
//!
//! `G_n` is the solution that decays in `n`; it is an integral over
//! `[0, z_minus]` with an algebraic singularity at the right endpoint and is
//! evaluated with tanh-sinh quadrature. `H_n` is regular at `n = -1` and
//! grows like `z_plus^n`; it is a closed-contour integral around the segment
//! joining the roots, evaluated with the trapezoid rule on a confocal
//! ellipse. The ellipse passes through the real saddle of the integrand so
//! the `z^n` factor does not cost more digits than the result carries.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::RootData;
use crate::scaled::{LogSum, Scaled};

/// Values of `G_n` and `H_n` at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenPair {
    pub n: usize,
    pub g_value: f64,
    pub h_value: f64,
    pub log_scale_g: f64,
    pub log_scale_h: f64,
}

impl GreenPair {
    pub fn g(&self) -> Scaled {
        Scaled::new(self.g_value, self.log_scale_g)
    }

    pub fn h(&self) -> Scaled {
        Scaled::new(self.h_value, self.log_scale_h)
    }
}

pub fn green_pair(rd: &RootData, n: usize) -> Result<GreenPair> {
    let g = g_integral(rd, n)?;
    let h = h_contour(rd, n)?;
    Ok(GreenPair {
        n,
        g_value: g.value,
        h_value: h.value,
        log_scale_g: g.log_scale,
        log_scale_h: h.log_scale,
    })
}

// ---------------------------------------------------------------------------
// G_n

const TS_TMAX: f64 = 4.5;
const TS_H0: f64 = 0.5;
const TS_MAX_LEVELS: usize = 12;
const TS_TOL: f64 = 1e-12;

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Tanh-sinh quadrature of `int_0^1 coef(v) exp(log_f(v)) dv`.
///
/// The integrand callback receives `(v, 1 - v, ln v, ln(1 - v))`, each formed
/// without cancellation near the endpoints, and returns `(coef, log_f)`.
fn tanh_sinh<F>(integrand: F) -> Scaled
where
    F: Fn(f64, f64, f64, f64) -> (f64, f64),
{
    let node = |t: f64, acc: &mut LogSum| {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ln_v = -softplus(-2.0 * u);
        let ln_w = -softplus(2.0 * u);
        let (v, w) = (ln_v.exp(), ln_w.exp());
        if v == 0.0 || w == 0.0 {
            return;
        }
        let ln_weight = std::f64::consts::PI.ln() + t.cosh().ln() + ln_v + ln_w;
        let (coef, log_f) = integrand(v, w, ln_v, ln_w);
        if coef != 0.0 && log_f.is_finite() {
            acc.push(coef, log_f + ln_weight);
        }
    };

    let mut acc = LogSum::new();
    let mut h = TS_H0;
    let kmax = (TS_TMAX / h).floor() as i64;
    for k in -kmax..=kmax {
        node(k as f64 * h, &mut acc);
    }
    let mut estimate = scale_by(acc.total(), h);
    for _ in 0..TS_MAX_LEVELS {
        h *= 0.5;
        let kmax = (TS_TMAX / h).floor() as i64;
        let mut k = -kmax;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= kmax {
            node(k as f64 * h, &mut acc);
            k += 2;
        }
        let refined = scale_by(acc.total(), h);
        let floor = scale_by(acc.magnitude(), h).ln_abs() + (1e-15f64).ln();
        let diff = refined.sub(estimate).ln_abs();
        estimate = refined;
        if diff <= refined.ln_abs() + TS_TOL.ln() || diff <= floor {
            break;
        }
    }
    estimate
}

fn scale_by(s: Scaled, h: f64) -> Scaled {
    s * Scaled::from_f64(h)
}

fn require_real_pair(rd: &RootData, what: &str) -> Result<(f64, f64, f64)> {
    if !rd.is_real_pair() {
        return Err(Error::Domain(format!(
            "{what} needs real theta above coalescence (theta = {})",
            rd.theta
        )));
    }
    Ok((rd.z_minus.re, rd.z_plus.re, rd.alpha.re))
}

/// `int_0^{z_-} z^n p(z) (z_+ - z)^{-alpha} (z_- - z)^{alpha-1} dz` for a
/// real polynomial factor `p`, via `z = z_-(1 - v)`.
fn g_type_integral<P: Fn(f64) -> f64>(rd: &RootData, n: usize, factor: P) -> Result<Scaled> {
    let (zm, zp, alpha) = require_real_pair(rd, "G_n")?;
    let gap = zp - zm;
    let ln_zm = zm.ln();
    let nf = n as f64;
    let s = tanh_sinh(|v, w, ln_v, ln_w| {
        let z = zm * w;
        let log_f = nf * (ln_zm + ln_w) - alpha * (gap + zm * v).ln() + (alpha - 1.0) * (ln_zm + ln_v);
        (factor(z), log_f)
    });
    Ok(s * Scaled::new(zm, 0.0))
}

/// `G_n = int_0^{z_-} z^n (z_+ - z)^{-alpha} (z_- - z)^{alpha-1} dz`.
pub fn g_integral(rd: &RootData, n: usize) -> Result<Scaled> {
    g_type_integral(rd, n, |_| 1.0)
}

/// `G_K - G_{K-1}` as a single integral with factor `z^{K-1}(z - 1)`.
pub fn delta_g(rd: &RootData, capacity: usize) -> Result<Scaled> {
    if capacity == 0 {
        return Err(Error::Domain("capacity must be at least 1".into()));
    }
    g_type_integral(rd, capacity - 1, |z| z - 1.0)
}

// ---------------------------------------------------------------------------
// H_n and dH_K

/// Knobs for the ellipse contour. `None` fields pick the defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContourOptions {
    /// Elliptic radius `mu` of the contour `c + h cosh(mu + i phi)`.
    pub mu: Option<f64>,
}

const CONTOUR_N0: usize = 64;
const CONTOUR_NMAX: usize = 1 << 14;
const CONTOUR_TOL: f64 = 1e-10;
const REALNESS_TOL: f64 = 1e-9;
/// Default margin: minor semi-axis equal to 25% of the segment length.
fn default_mu() -> f64 {
    (0.5f64).asinh()
}

/// Elliptic radius of the confocal ellipse through the dominant real saddle
/// of `z^n (z - z_-)^{alpha-1} (z - z_+)^{-alpha}`.
///
/// The saddle equation reduces to `(n-1) x^2 - 2 n c x + n / rho = 0` with
/// `c` the segment midpoint.
fn saddle_mu(rd: &RootData, n: usize) -> Option<f64> {
    if n < 2 {
        return None;
    }
    let c = rd.center();
    let h = rd.half_gap();
    let nf = n as f64;
    let disc = (c * c * (nf * nf) - nf * (nf - 1.0) / rd.rho).sqrt();
    let roots = [(c * nf + disc) / (nf - 1.0), (c * nf - disc) / (nf - 1.0)];
    roots
        .iter()
        .map(|s| ((s - c) / h).acosh().re.abs())
        .filter(|m| m.is_finite())
        .fold(None, |best: Option<f64>, m| Some(best.map_or(m, |b| b.max(m))))
}

fn pick_mu(rd: &RootData, n_eff: usize) -> f64 {
    let floor = default_mu().max(rd.alpha.norm().ln());
    match saddle_mu(rd, n_eff) {
        Some(m) if m > 1e-3 => m.max(0.02),
        _ => floor,
    }
}

/// Trapezoid rule for `(1/2 pi i) contour-integral of z^n extra(z) (z - z_-)^{-1} w^alpha dz`
/// on the confocal ellipse with radius `mu`, `w = (z - z_-)/(z - z_+)`.
fn contour_sum<E>(rd: &RootData, n: usize, mu: f64, extra: &E) -> Result<(Complex64, f64, f64)>
where
    E: Fn(Complex64) -> Complex64,
{
    let c = rd.center();
    let h = rd.half_gap();
    let nf = n as f64;
    let eval = |phi: f64, re: &mut LogSum, im: &mut LogSum, mag: &mut LogSum| {
        let zeta = Complex64::new(mu, phi);
        let z = c + h * zeta.cosh();
        let w = (z - rd.z_minus) / (z - rd.z_plus);
        let expo = z.ln() * nf + rd.alpha * w.ln();
        let coef = extra(z) * h * zeta.sinh() / (z - rd.z_minus);
        let phase = Complex64::from_polar(1.0, expo.im) * coef;
        re.push(phase.re, expo.re);
        im.push(phase.im, expo.re);
        mag.push(phase.norm(), expo.re);
    };

    let mut re = LogSum::new();
    let mut im = LogSum::new();
    let mut mag = LogSum::new();
    let mut nodes = CONTOUR_N0;
    for j in 0..nodes {
        eval(2.0 * std::f64::consts::PI * j as f64 / nodes as f64, &mut re, &mut im, &mut mag);
    }
    loop {
        let prev_re = re.total();
        nodes *= 2;
        for j in (1..nodes).step_by(2) {
            eval(2.0 * std::f64::consts::PI * j as f64 / nodes as f64, &mut re, &mut im, &mut mag);
        }
        let cur = re.total();
        let prev = prev_re * Scaled::from_f64(2.0); // same normalization as `cur`
        // near a zero of the integral, roundoff in the sum is the limit
        let floor = mag.magnitude().ln_abs() + (1e-4f64).ln();
        let scale = cur.ln_abs().max(floor);
        let diff = cur.sub(prev).ln_abs();
        if diff <= scale + CONTOUR_TOL.ln() {
            break;
        }
        if nodes >= CONTOUR_NMAX {
            return Err(Error::Contour {
                reason: format!("trapezoid rule did not settle with {nodes} nodes (n = {n}, mu = {mu})"),
                residual: (diff - scale).exp(),
            });
        }
    }
    let total_re = re.total() * Scaled::from_f64(1.0 / nodes as f64);
    let total_im = im.total() * Scaled::from_f64(1.0 / nodes as f64);
    let floor = mag.magnitude().ln_abs() - (nodes as f64).ln() + (1e-6f64).ln();
    let denom = total_re.ln_abs().max(floor);
    let realness = (total_im.ln_abs() - denom).exp();
    Ok((
        Complex64::new(total_re.value, 0.0),
        total_re.log_scale,
        realness,
    ))
}

fn h_type_integral<E>(rd: &RootData, n: usize, n_eff: usize, opts: ContourOptions, extra: E) -> Result<Scaled>
where
    E: Fn(Complex64) -> Complex64,
{
    if rd.theta.im != 0.0 {
        return Err(Error::Domain(format!(
            "contour evaluation is implemented for real theta (got {})",
            rd.theta
        )));
    }
    let mut mu = opts.mu.unwrap_or_else(|| pick_mu(rd, n_eff));
    let mut last_residual = f64::NAN;
    for _ in 0..4 {
        let (value, log_scale, realness) = contour_sum(rd, n, mu, &extra)?;
        if realness < REALNESS_TOL {
            return Ok(Scaled::new(value.re, log_scale));
        }
        last_residual = realness;
        if opts.mu.is_some() {
            break;
        }
        mu *= 0.75;
    }
    Err(Error::Contour {
        reason: "imaginary part of a real-theta contour integral did not vanish".into(),
        residual: last_residual,
    })
}

/// `H_n` by the contour integral, default contour.
pub fn h_contour(rd: &RootData, n: usize) -> Result<Scaled> {
    h_contour_with(rd, n, ContourOptions::default())
}

pub fn h_contour_with(rd: &RootData, n: usize, opts: ContourOptions) -> Result<Scaled> {
    h_type_integral(rd, n, n, opts, |_| Complex64::new(1.0, 0.0))
}

/// `H_K - H_{K-1}` from one contour integral with factor `z^{K-1}(z - 1)`,
/// so no subtraction of nearly equal values takes place.
pub fn delta_h(rd: &RootData, capacity: usize) -> Result<Scaled> {
    delta_h_with(rd, capacity, ContourOptions::default())
}

pub fn delta_h_with(rd: &RootData, capacity: usize, opts: ContourOptions) -> Result<Scaled> {
    if capacity == 0 {
        return Err(Error::Domain("capacity must be at least 1".into()));
    }
    h_type_integral(rd, capacity - 1, capacity, opts, |z| z - 1.0)
}

/// Relative residual of the discrete Wronskian identity
/// `G_l H_{l+1} - G_{l+1} H_l = 1 / (rho M (l+1) rho^l)`.
pub fn wronskian_check(rd: &RootData, l: usize) -> Result<f64> {
    let g0 = g_integral(rd, l)?;
    let g1 = g_integral(rd, l + 1)?;
    let h0 = h_contour(rd, l)?;
    let h1 = h_contour(rd, l + 1)?;
    let w = (g0 * h1).sub(g1 * h0);
    let rhs = Scaled::from_f64(1.0)
        / (Scaled::from_f64(rd.rho * rd.m_factor.re * (l as f64 + 1.0)) * Scaled::powi_f64(rd.rho, l));
    Ok(w.rel_diff(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{root_data_real, ModelParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rd(rho: f64, theta: f64) -> RootData {
        root_data_real(&ModelParams::new(rho, 4).unwrap(), theta).unwrap()
    }

    /// H_n is the solution regular at n = -1, so H_0 = 1 and the forward
    /// recurrence generates it exactly (forward is stable for the dominant
    /// solution).
    fn h_by_recurrence(rho: f64, theta: f64, nmax: usize) -> Vec<Scaled> {
        let mut h = vec![Scaled::from_f64(1.0), Scaled::from_f64((1.0 + rho + theta) / rho)];
        for n in 1..nmax {
            let nf = n as f64;
            let a = h[n] * Scaled::from_f64((nf + 1.0) * (1.0 + rho + theta));
            let b = h[n - 1] * Scaled::from_f64(nf);
            h.push(a.sub(b) / Scaled::from_f64((nf + 1.0) * rho));
        }
        h
    }

    #[test]
    fn g0_closed_form_integer_alpha() {
        // rho = 1/2, theta = 0: integrand (1 - z)/(2 - z)^2 on [0, 1].
        let g = g_integral(&rd(0.5, 0.0), 0).unwrap().to_f64();
        assert_relative_eq!(g, 2f64.ln() - 0.5, max_relative = 1e-12);
        let g1 = g_integral(&rd(0.5, 0.0), 1).unwrap().to_f64();
        assert_relative_eq!(g1, 3.0 * 2f64.ln() - 2.0, max_relative = 1e-11);
    }

    #[test]
    fn g_positive() {
        let r = rd(0.8, 0.3);
        for n in 0..=50 {
            let g = g_integral(&r, n).unwrap();
            assert!(g.value > 0.0);
        }
    }

    #[test]
    fn g_ratio_tends_to_z_minus() {
        let r = rd(0.5, 0.5);
        let ratio = (g_integral(&r, 201).unwrap() / g_integral(&r, 200).unwrap()).to_f64();
        assert!((ratio / r.z_minus.re - 1.0).abs() < 0.01);
    }

    #[test]
    fn g_rejects_band() {
        let p = ModelParams::new(0.5, 4).unwrap();
        let r = root_data_real(&p, p.coalescence() - 0.01).unwrap();
        assert!(matches!(g_integral(&r, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn h_integer_alpha_residues() {
        let r = rd(0.5, 0.0);
        for (n, expected) in [(0, 1.0), (1, 3.0), (2, 8.0), (10, 12.0 * 512.0)] {
            let h = h_contour(&r, n).unwrap().to_f64();
            assert_relative_eq!(h, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn h_matches_recurrence_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rho = rng.gen_range(0.2..3.0);
            let p = ModelParams::new(rho, 4).unwrap();
            let theta = p.coalescence() + rng.gen_range(0.01..3.0);
            let r = root_data_real(&p, theta).unwrap();
            let oracle = h_by_recurrence(rho, theta, 101);
            for n in [0usize, 1, 2, 7, 30, 100] {
                let h = h_contour(&r, n).unwrap();
                assert!(h.rel_diff(oracle[n]) < 1e-9, "rho={rho} theta={theta} n={n}");
            }
        }
    }

    #[test]
    fn h_in_complex_band_is_real_and_matches_recurrence() {
        for rho in [0.3, 0.5, 0.8] {
            let p = ModelParams::new(rho, 4).unwrap();
            for off in [1e-4, 0.01, 0.05] {
                let theta = p.coalescence() - off;
                let r = root_data_real(&p, theta).unwrap();
                let oracle = h_by_recurrence(rho, theta, 60);
                for n in [0usize, 3, 20, 59] {
                    let h = h_contour(&r, n).unwrap();
                    let tol = 1e-9 * oracle[n].abs().to_f64().max(1.0);
                    let scale = (0..=n).map(|j| oracle[j].abs().to_f64()).fold(0.0, f64::max);
                    assert!(
                        (h.to_f64() - oracle[n].to_f64()).abs() < tol.max(1e-9 * scale),
                        "rho={rho} off={off} n={n}: {} vs {}",
                        h.to_f64(),
                        oracle[n].to_f64()
                    );
                }
            }
        }
    }

    #[test]
    fn h_satisfies_three_term_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let rho = rng.gen_range(0.2..3.0);
            let p = ModelParams::new(rho, 4).unwrap();
            let theta = p.coalescence() + rng.gen_range(0.05..3.0);
            let r = root_data_real(&p, theta).unwrap();
            let n = rng.gen_range(1..100usize);
            let (hm, h0, hp) = (
                h_contour(&r, n - 1).unwrap(),
                h_contour(&r, n).unwrap(),
                h_contour(&r, n + 1).unwrap(),
            );
            let nf = n as f64;
            let a = hp * Scaled::from_f64((nf + 1.0) * rho);
            let b = h0 * Scaled::from_f64((nf + 1.0) * (1.0 + rho + theta));
            let c = hm * Scaled::from_f64(nf);
            let resid = a.sub(b).add(c);
            assert!((resid.ln_abs() - b.ln_abs()).exp() < 1e-9);
        }
    }

    #[test]
    fn g_satisfies_three_term_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let rho = rng.gen_range(0.2..3.0);
            let p = ModelParams::new(rho, 4).unwrap();
            let theta = p.coalescence() + rng.gen_range(0.05..3.0);
            let r = root_data_real(&p, theta).unwrap();
            let n = rng.gen_range(1..100usize);
            let (gm, g0, gp) = (
                g_integral(&r, n - 1).unwrap(),
                g_integral(&r, n).unwrap(),
                g_integral(&r, n + 1).unwrap(),
            );
            let nf = n as f64;
            let a = gp * Scaled::from_f64((nf + 1.0) * rho);
            let b = g0 * Scaled::from_f64((nf + 1.0) * (1.0 + rho + theta));
            let c = gm * Scaled::from_f64(nf);
            let resid = a.sub(b).add(c);
            assert!((resid.ln_abs() - b.ln_abs()).exp() < 1e-9, "rho={rho} theta={theta} n={n}");
        }
    }

    #[test]
    fn h_ratio_tends_to_z_plus() {
        let r = rd(0.5, 0.5);
        let ratio = (h_contour(&r, 201).unwrap() / h_contour(&r, 200).unwrap()).to_f64();
        assert!((ratio / r.z_plus.re - 1.0).abs() < 0.01);
    }

    #[test]
    fn contour_radius_independence() {
        let r = rd(0.7, 0.4);
        for n in [0usize, 5, 40] {
            let a = h_contour_with(&r, n, ContourOptions { mu: Some(0.3) }).unwrap();
            let b = h_contour_with(&r, n, ContourOptions { mu: Some(0.6) }).unwrap();
            assert!(a.rel_diff(b) < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn scaling_reproduces_direct_values() {
        let r = rd(0.6, 0.9);
        let oracle = h_by_recurrence(0.6, 0.9, 6);
        for n in 0..6 {
            let h = h_contour(&r, n).unwrap();
            assert!(h.value.abs() >= 1e-8 && h.value.abs() <= 1e8);
            assert_relative_eq!(h.to_f64(), oracle[n].to_f64(), max_relative = 1e-12);
        }
    }

    #[test]
    fn huge_index_stays_finite() {
        let r = rd(0.5, 0.5);
        let h = h_contour(&r, 500).unwrap();
        let g = g_integral(&r, 500).unwrap();
        assert!(h.log_scale > 500.0 && h.value.is_finite());
        assert!(g.log_scale < -200.0 && g.value.is_finite());
        let w = (g * h).to_f64();
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn delta_h_small_cases() {
        let d = delta_h(&rd(0.5, 0.0), 1).unwrap().to_f64();
        assert_relative_eq!(d, 2.0, max_relative = 1e-10);
        // K = 1: dH_1 = (1 + theta)/rho vanishes at theta = -1.
        for rho in [0.5, 2.0] {
            let p = ModelParams::new(rho, 1).unwrap();
            for theta in [-0.9, -1.1] {
                if let Ok(r) = root_data_real(&p, theta) {
                    let d = delta_h(&r, 1).unwrap().to_f64();
                    assert_relative_eq!(d, (1.0 + theta) / rho, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn delta_h_matches_difference_of_recurrence() {
        for (rho, theta, k) in [(0.8, 0.2, 8usize), (2.0, -0.05, 30), (0.5, -0.1, 12), (1.3, 1.0, 60)] {
            let p = ModelParams::new(rho, k).unwrap();
            let r = root_data_real(&p, theta).unwrap();
            let h = h_by_recurrence(rho, theta, k + 1);
            let expected = h[k].sub(h[k - 1]);
            let got = delta_h(&r, k).unwrap();
            assert!(got.rel_diff(expected) < 1e-9, "rho={rho} theta={theta} K={k}");
        }
    }

    #[test]
    fn delta_g_matches_difference() {
        let r = rd(0.8, 0.3);
        let k = 10;
        let d = delta_g(&r, k).unwrap();
        let diff = g_integral(&r, k).unwrap().sub(g_integral(&r, k - 1).unwrap());
        assert!(d.rel_diff(diff) < 1e-9);
    }

    #[test]
    fn wronskian_identity() {
        assert!(wronskian_check(&rd(0.5, 0.5), 3).unwrap() < 1e-8);
        // Integer alpha: exact values available.
        assert!(wronskian_check(&rd(0.5, 0.0), 0).unwrap() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let rho = rng.gen_range(0.2..3.0);
            let p = ModelParams::new(rho, 4).unwrap();
            let theta = p.coalescence() + rng.gen_range(0.05..3.0);
            let r = root_data_real(&p, theta).unwrap();
            for l in (0..=30).step_by(5) {
                let res = wronskian_check(&r, l).unwrap();
                assert!(res < 1e-8, "rho={rho} theta={theta} l={l}: {res}");
            }
        }
    }

    #[test]
    fn growth_laws_use_gamma() {
        // H_n ~ n^{alpha-1} z+^{n+1-alpha} (z+ - z-)^{alpha-1} / Gamma(alpha)
        let r = rd(0.5, 0.5);
        let (zm, zp, a) = (r.z_minus.re, r.z_plus.re, r.alpha.re);
        let n = 4000usize;
        let nf = n as f64;
        let ln_g = crate::special::ln_gamma(a).unwrap();
        let ln_h = (a - 1.0) * nf.ln() + (nf + 1.0 - a) * zp.ln() + (a - 1.0) * (zp - zm).ln() - ln_g;
        let h = h_contour(&r, n).unwrap();
        assert!((h.ln_abs() - ln_h).abs() < 5e-3);
        let ln_gn = ln_g - a * nf.ln() + (a + nf) * zm.ln() - a * (zp - zm).ln();
        let g = g_integral(&r, n).unwrap();
        assert!((g.ln_abs() - ln_gn).abs() < 5e-3);
    }
}

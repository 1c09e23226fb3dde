//! Gamma and Airy kernels plus the Airy-related roots used by the
//! large-capacity pole expansions.
//!
//! `Ai` and `Ai'` come from the Maclaurin pair for `|x| <= 8`, summed in
//! double-double arithmetic so the cancellation between the two series on the
//! positive axis does not eat the result, and from the standard asymptotic
//! expansions beyond.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Gamma(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x).exp())
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Shift up once; the Lanczos sum is most accurate for x >= 1/2.
        return ln_gamma_pos(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

// ---------------------------------------------------------------------------
// double-double arithmetic

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        Dd::new(s, e)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        Dd::new(p, e)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = self.add(Dd { hi: -p, lo: -e });
        let q2 = r.hi / d;
        Dd::new(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `Ai(0) = 3^{-2/3} / Gamma(2/3)` as a double-double.
const AI0: Dd = Dd {
    hi: 0.355_028_053_887_817_2,
    lo: 2.052_336_324_362_12e-17,
};
/// `-Ai'(0) = 3^{-1/3} / Gamma(1/3)` as a double-double.
const AIP0: Dd = Dd {
    hi: 0.258_819_403_792_806_8,
    lo: -2.522_243_111_610_832e-17,
};

/// Airy function of the first kind and its derivative at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub x: f64,
    pub ai: f64,
    pub ai_prime: f64,
}

/// Switch point between the Maclaurin pair and the asymptotic expansions.
const SERIES_LIMIT: f64 = 8.0;

/// `Ai(x)` and `Ai'(x)`.
pub fn airy(x: f64) -> AiryValue {
    let (ai, ai_prime) = if x.abs() <= SERIES_LIMIT {
        airy_series(x)
    } else if x > 0.0 {
        airy_asymptotic_pos(x)
    } else {
        airy_asymptotic_neg(-x)
    };
    AiryValue { x, ai, ai_prime }
}

/// Power series `y = sum a_n x^n`, `a_{n+3} = a_n / ((n+2)(n+3))`, split into
/// the `3k` and `3k+1` chains.
fn airy_series(x: f64) -> (f64, f64) {
    let xd = Dd::from_f64(x);
    let x2 = xd.mul(xd);
    let x3 = x2.mul(xd);

    // t0 = a_{3k} x^{3k}, t1 = a_{3k+1} x^{3k+1}
    let mut t0 = AI0;
    let mut t1 = AIP0.neg().mul(xd);
    let mut ai = t0.add(t1);
    // derivative chains: d0 = 3k a_{3k} x^{3k-1}, d1 = (3k+1) a_{3k+1} x^{3k}
    let mut aip = AIP0.neg();

    for k in 0..200 {
        let kf = k as f64;
        let d0 = t0.mul(x2).div_f64(3.0 * kf + 2.0);
        let d1 = t1.mul(x2).div_f64(3.0 * kf + 3.0);
        t0 = t0.mul(x3).div_f64((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        t1 = t1.mul(x3).div_f64((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        ai = ai.add(t0).add(t1);
        aip = aip.add(d0).add(d1);
        let small = t0.hi.abs() + t1.hi.abs() + d0.hi.abs() + d1.hi.abs();
        if k > 2 && small < 1e-34 * (1.0 + ai.hi.abs() + aip.hi.abs()) {
            break;
        }
    }
    (ai.to_f64(), aip.to_f64())
}

/// Coefficients `u_k` of the Airy asymptotic expansions.
fn airy_u_coeffs(count: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(count);
    u.push(1.0);
    for k in 1..count {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    u
}

/// Sums an asymptotic series `sum c_k s^k` up to its smallest term.
fn truncated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for t in terms {
        if t.abs() > last {
            break;
        }
        sum += t;
        last = t.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Series `(sum (-1)^k u_k zeta^-k, sum (-1)^k v_k zeta^-k)`.
fn decaying_sums(zeta: f64) -> (f64, f64) {
    let u = airy_u_coeffs(40);
    let su = truncated_sum(u.iter().enumerate().map(|(k, uk)| (-1f64).powi(k as i32) * uk * zeta.powi(-(k as i32))));
    let sv = truncated_sum(u.iter().enumerate().map(|(k, uk)| {
        let kf = k as f64;
        let vk = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk;
        (-1f64).powi(k as i32) * vk * zeta.powi(-(k as i32))
    }));
    (su, sv)
}

fn airy_asymptotic_pos(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (su, sv) = decaying_sums(zeta);
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (pre / q * su, -pre * q * sv)
}

fn airy_asymptotic_neg(x: f64) -> (f64, f64) {
    // Ai(-x) and Ai'(-x) for x > 0.
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = airy_u_coeffs(40);
    let v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            let kf = k as f64;
            -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk
        })
        .collect();
    let even = |c: &[f64]| {
        truncated_sum((0..c.len() / 2).map(|k| (-1f64).powi(k as i32) * c[2 * k] * zeta.powi(-2 * k as i32)))
    };
    let odd = |c: &[f64]| {
        truncated_sum((0..c.len() / 2).map(|k| (-1f64).powi(k as i32) * c[2 * k + 1] * zeta.powi(-(2 * k as i32 + 1))))
    };
    let phase = zeta - PI / 4.0;
    let (s, c) = phase.sin_cos();
    let q = x.powf(0.25);
    let ai = (c * even(&u) + s * odd(&u)) / (PI.sqrt() * q);
    let aip = q / PI.sqrt() * (s * even(&v) - c * odd(&v));
    (ai, aip)
}

/// `Ai'(x) / Ai(x)`, evaluated without forming `Ai` for large positive `x`.
pub fn airy_log_derivative(x: f64) -> f64 {
    if x > SERIES_LIMIT {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let (su, sv) = decaying_sums(zeta);
        -x.sqrt() * sv / su
    } else {
        let a = airy(x);
        a.ai_prime / a.ai
    }
}

/// Grid step used to bracket sign changes.
const SCAN_STEP: f64 = 0.05;

/// Root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign: bisection
/// down to a narrow bracket, then one secant step inside it.
pub fn bracketed_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let secant = b - fb * (b - a) / (fb - fa);
    if secant.is_finite() && secant >= a.min(b) && secant <= a.max(b) {
        secant
    } else {
        0.5 * (a + b)
    }
}

/// Largest (least negative) zero of `Ai`, `r_0 ~ -2.3381`.
pub fn airy_max_root() -> f64 {
    largest_zero_below(|x| airy(x).ai, 0.0)
}

/// Largest zero of `Ai'`, `a'_1 ~ -1.0188`.
pub fn airy_prime_max_root() -> f64 {
    largest_zero_below(|x| airy(x).ai_prime, 0.0)
}

fn largest_zero_below<F: Fn(f64) -> f64>(f: F, start: f64) -> f64 {
    let mut hi = start;
    let mut fhi = f(hi);
    loop {
        let lo = hi - SCAN_STEP;
        let flo = f(lo);
        if (flo < 0.0) != (fhi < 0.0) {
            return bracketed_root(&f, lo, hi, 1e-15);
        }
        hi = lo;
        fhi = flo;
        if hi < -20.0 {
            unreachable!("Ai and Ai' both have zeros in (-3, 0)");
        }
    }
}

/// Largest `r_1` with `Ai'(r_1 + eta^2/4) / Ai(r_1 + eta^2/4) = -eta/2`.
///
/// In `y = r_1 + eta^2/4` the logarithmic derivative falls monotonically
/// from `+inf` at the largest zero of `Ai` to `-inf`, so the root is the
/// unique sign change of `Ai' + (eta/2) Ai` to the right of that zero.
pub fn solve_r1(eta: f64) -> Result<f64> {
    if !(eta.abs() <= 50.0) {
        return Err(Error::Domain(format!("solve_r1 requires |eta| <= 50, got {eta}")));
    }
    let half = 0.5 * eta;
    let residual = |y: f64| {
        if y > SERIES_LIMIT {
            airy_log_derivative(y) + half
        } else {
            let a = airy(y);
            a.ai_prime + half * a.ai
        }
    };
    let r0 = airy_max_root();
    let window_hi = SERIES_LIMIT + 0.25 * eta * eta + 10.0;
    let mut lo = r0;
    let mut flo = residual(lo);
    while lo < window_hi {
        let hi = lo + SCAN_STEP;
        let fhi = residual(hi);
        if (fhi < 0.0) != (flo < 0.0) || fhi == 0.0 {
            let y = bracketed_root(residual, lo, hi, 1e-14);
            return Ok(y - 0.25 * eta * eta);
        }
        lo = hi;
        flo = fhi;
    }
    Err(Error::Convergence {
        lo: r0,
        hi: window_hi,
    })
}

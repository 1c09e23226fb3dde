//! Real numbers carried as `value * exp(log_scale)` so that products like
//! `z_plus^K` and `rho^l G_l H_l` stay in floating-point range.

use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub value: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        value: 0.0,
        log_scale: 0.0,
    };

    /// Builds a normalized value with `|value|` in `[1, e)` (or exactly zero).
    pub fn new(value: f64, log_scale: f64) -> Self {
        if value == 0.0 || !value.is_finite() {
            return Scaled {
                value,
                log_scale: if value == 0.0 { 0.0 } else { log_scale },
            };
        }
        let shift = value.abs().ln().floor();
        Scaled {
            value: value * (-shift).exp(),
            log_scale: log_scale + shift,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Scaled::new(x, 0.0)
    }

    /// `exp(log_mag)` with the given sign.
    pub fn from_log(sign: f64, log_mag: f64) -> Self {
        Scaled::new(sign.signum(), log_mag)
    }

    pub fn to_f64(self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * self.log_scale.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.value == 0.0
    }

    pub fn signum(self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value.signum()
        }
    }

    /// `ln |x|`; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        if self.value == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.value.abs().ln() + self.log_scale
        }
    }

    pub fn abs(self) -> Self {
        Scaled {
            value: self.value.abs(),
            log_scale: self.log_scale,
        }
    }

    pub fn add(self, other: Scaled) -> Scaled {
        if self.value == 0.0 {
            return other;
        }
        if other.value == 0.0 {
            return self;
        }
        let (big, small) = if self.log_scale >= other.log_scale {
            (self, other)
        } else {
            (other, self)
        };
        let v = big.value + small.value * (small.log_scale - big.log_scale).exp();
        Scaled::new(v, big.log_scale)
    }

    pub fn sub(self, other: Scaled) -> Scaled {
        self.add(-other)
    }

    pub fn powi_f64(base: f64, n: usize) -> Scaled {
        if base == 0.0 {
            return if n == 0 { Scaled::from_f64(1.0) } else { Scaled::ZERO };
        }
        let sign = if base < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        Scaled::from_log(sign, n as f64 * base.abs().ln())
    }

    /// Relative difference `|a - b| / |b|`.
    pub fn rel_diff(self, reference: Scaled) -> f64 {
        let d = self.sub(reference);
        if reference.is_zero() {
            return d.to_f64().abs();
        }
        (d.ln_abs() - reference.ln_abs()).exp()
    }

    pub fn cmp_abs(self, other: Scaled) -> Ordering {
        self.ln_abs()
            .partial_cmp(&other.ln_abs())
            .unwrap_or(Ordering::Equal)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            value: -self.value,
            log_scale: self.log_scale,
        }
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, o: Scaled) -> Scaled {
        Scaled::new(self.value * o.value, self.log_scale + o.log_scale)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, o: Scaled) -> Scaled {
        Scaled::new(self.value / o.value, self.log_scale - o.log_scale)
    }
}

/// Streaming `sum_j c_j exp(e_j)` with a running log offset.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    sum: f64,
    abs_sum: f64,
    offset: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum {
            sum: 0.0,
            abs_sum: 0.0,
            offset: f64::NEG_INFINITY,
        }
    }

    /// Adds `coef * exp(exponent)`.
    pub(crate) fn push(&mut self, coef: f64, exponent: f64) {
        if coef == 0.0 || exponent == f64::NEG_INFINITY {
            return;
        }
        if exponent > self.offset {
            let r = (self.offset - exponent).exp();
            self.sum *= r;
            self.abs_sum *= r;
            self.offset = exponent;
        }
        let w = (exponent - self.offset).exp();
        self.sum += coef * w;
        self.abs_sum += coef.abs() * w;
    }

    pub(crate) fn total(&self) -> Scaled {
        if self.offset == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        Scaled::new(self.sum, self.offset)
    }

    /// Sum of absolute contributions; the floor for cancellation checks.
    pub(crate) fn magnitude(&self) -> Scaled {
        if self.offset == f64::NEG_INFINITY {
            return Scaled::ZERO;
        }
        Scaled::new(self.abs_sum, self.offset)
    }
}

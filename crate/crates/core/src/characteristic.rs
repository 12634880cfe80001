//! The characteristic function of `x'(t) + c x'(t-1) + a x(t) + b x(t-1) = 0`
//!
//! ```text
//! h(λ)  = λ + cλe^{-λ} + a + be^{-λ}
//! h0(λ) = λ(1 + ce^{-λ})
//! ```
//!
//! and the shifted form obtained from `λ = z + ln|c|`:
//!
//! ```text
//! z(1 + δe^{-z}) + A + Be^{-z} = 0,   A = a + ln|c|,   B = δ(ln|c| + b/c),   δ = sign(c)
//! ```
//!
//! `B` equals `ln|c| + b/|c|` for `c > 0` and `b/|c| - ln|c|` for `c < 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Coefficients `(a, b, c)` with the derived shifted constants.
///
/// Equality compares `(a, b, c)` only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct NeutralParams {
    a: f64,
    b: f64,
    c: f64,
    big_a: f64,
    big_b: f64,
    delta: i8,
    accumulation: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    a: f64,
    b: f64,
    c: f64,
}

impl TryFrom<RawParams> for NeutralParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        NeutralParams::new(raw.a, raw.b, raw.c)
    }
}

impl From<NeutralParams> for RawParams {
    fn from(p: NeutralParams) -> Self {
        RawParams { a: p.a, b: p.b, c: p.c }
    }
}

impl PartialEq for NeutralParams {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.c == other.c
    }
}

impl NeutralParams {
    /// Rejects `c = 0` and non-finite coefficients.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParams("coefficients a, b, c must be finite".into()));
        }
        if c == 0.0 {
            return Err(Error::InvalidParams(
                "c must be nonzero (the equation is not neutral)".into(),
            ));
        }
        let accumulation = c.abs().ln();
        let delta: i8 = if c > 0.0 { 1 } else { -1 };
        let big_a = a + accumulation;
        let big_b = f64::from(delta) * accumulation + b / c.abs();
        Ok(Self {
            a,
            b,
            c,
            big_a,
            big_b,
            delta,
            accumulation,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `A = a + ln|c|`.
    pub fn big_a(&self) -> f64 {
        self.big_a
    }

    /// `B = δ ln|c| + b/|c|`.
    pub fn big_b(&self) -> f64 {
        self.big_b
    }

    /// `sign(c)`.
    pub fn delta(&self) -> i8 {
        self.delta
    }

    /// `ln|c|`, the only accumulation point of root real parts.
    pub fn accumulation(&self) -> f64 {
        self.accumulation
    }

    /// `arg(-c)`: π for `c > 0`, 0 for `c < 0`.
    pub fn phase(&self) -> f64 {
        if self.delta > 0 {
            PI
        } else {
            0.0
        }
    }

    /// `h(λ) = λ + cλe^{-λ} + a + be^{-λ}`.
    pub fn eval_h(&self, lambda: Complex64) -> Complex64 {
        let e = (-lambda).exp();
        lambda + self.c * lambda * e + self.a + self.b * e
    }

    /// `h'(λ) = 1 + ce^{-λ} - cλe^{-λ} - be^{-λ}`.
    pub fn eval_h_prime(&self, lambda: Complex64) -> Complex64 {
        let e = (-lambda).exp();
        1.0 + self.c * e - self.c * lambda * e - self.b * e
    }

    /// `h''(λ) = (cλ + b - 2c)e^{-λ}`.
    pub fn eval_h_second(&self, lambda: Complex64) -> Complex64 {
        let e = (-lambda).exp();
        (self.c * lambda + self.b - 2.0 * self.c) * e
    }

    /// The single real zero `(2c - b)/c` of `h''`.
    pub fn h_second_zero(&self) -> f64 {
        (2.0 * self.c - self.b) / self.c
    }

    /// `(h, h')` sharing one exponential.
    pub fn eval_h_pair(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let e = (-lambda).exp();
        let cle = self.c * lambda * e;
        let h = lambda + cle + self.a + self.b * e;
        let dh = 1.0 + self.c * e - cle - self.b * e;
        (h, dh)
    }

    /// `h0(λ) = λ(1 + ce^{-λ})`.
    pub fn eval_h0(&self, lambda: Complex64) -> Complex64 {
        lambda * (1.0 + self.c * (-lambda).exp())
    }

    /// `h0'(λ) = 1 + ce^{-λ} - cλe^{-λ}`.
    pub fn eval_h0_prime(&self, lambda: Complex64) -> Complex64 {
        let e = (-lambda).exp();
        1.0 + self.c * e - self.c * lambda * e
    }

    /// `z_n = ln|c| + i(2nπ + arg(-c))`.
    pub fn auxiliary_eigen(&self, n: i64) -> Complex64 {
        Complex64::new(self.accumulation, 2.0 * PI * n as f64 + self.phase())
    }

    /// `a ≠ b/c` and `ln|c| ≠ -(a + b/c)/2`, equivalently `|A| ≠ |B|`.
    pub fn dichotomy_condition(&self) -> bool {
        let ratio = self.b / self.c;
        self.a != ratio && self.accumulation != -0.5 * (self.a + ratio)
    }
}

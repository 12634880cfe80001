//! Location and certification of characteristic roots.
//!
//! All roots lie in a vertical strip `ν1 < Re λ < ν2`. Far from the real axis
//! each horizontal slice `Im λ ∈ (2kπ + arg(-c) - π, 2kπ + arg(-c) + π)` holds
//! exactly one root, close to `z_k`. Near the axis the slices are searched by
//! subdivision. Every count comes from the argument principle.

mod enumerate;
mod real;
mod winding;

pub(crate) use enumerate::certify_ball;
pub use enumerate::{enumerate_eigenvalues, enumerate_eigenvalues_with, Spectrum};
pub use real::{real_roots, real_roots_with};
pub use winding::{count_zeros_in_rect, count_zeros_in_rect_with, segment_phase, winding_number, Rectangle};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, NeutralParams, Result, Tolerances};

/// A root of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: Complex64,
    /// Asymptotic index `n` when the root sits in a certified ball around `z_n`.
    pub index: Option<i64>,
    /// `|h(value)|`.
    pub residual: f64,
    pub multiplicity: u32,
    /// An argument-principle count isolated this root.
    pub certified: bool,
    /// Half-width of the certification square around `z_n`.
    pub ball_radius: Option<f64>,
}

impl Eigenvalue {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }

    pub fn is_simple(&self) -> bool {
        self.multiplicity == 1
    }

    pub(crate) fn conj_with_index(&self, index: Option<i64>) -> Self {
        Self {
            value: self.value.conj(),
            index,
            ..*self
        }
    }
}

/// Real-part bounds `(ν1, ν2)` of the strip containing every root.
///
/// With `K = |ac - b|`, no root exists where `e^{Re λ} + K/|λ + a| ≤ |c|/2`
/// or where `e^{Re λ} ≥ 2|c|` and `K/|λ + a| ≤ |c|`. Both bounds carry a 0.25
/// margin. When `K = 0` the root `-a` is kept inside.
pub fn strip_bounds(params: &NeutralParams) -> (f64, f64) {
    let (a, c) = (params.a(), params.c().abs());
    let k = (params.a() * params.c() - params.b()).abs();
    let nu1 = if k == 0.0 {
        (c / 2.0).ln().min(-a - 1.0)
    } else {
        let g = |nu: f64| nu.exp() + k / (-a - nu);
        let mut lo = (-a - 4.0 * k / c).min((c / 4.0).ln());
        let mut hi = -a;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) <= c / 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut nu2 = (2.0 * c).ln().max(-a + k / c);
    if k == 0.0 {
        nu2 = nu2.max(-a + 1.0);
    }
    (nu1 - 0.25, nu2 + 0.25)
}

/// Bound on `|Re λ - ln|c||` valid for every root with `|Im λ| ≥ y`.
///
/// From `e^λ = -c(1 + q)`, `q = β/(λ + a)`, `β = (b - ac)/c`. Returns infinity
/// when `y` is too small for the bound to apply.
pub fn tail_bound(params: &NeutralParams, y: f64) -> f64 {
    let beta = (params.b() - params.a() * params.c()) / params.c();
    if beta == 0.0 {
        return 0.0;
    }
    let (nu1, nu2) = strip_bounds(params);
    let a = params.a();
    let mut r = (nu1 + a).abs().max((nu2 + a).abs());
    let mut t = f64::INFINITY;
    for _ in 0..4 {
        let s = (2.0 * beta.abs() * r + beta * beta) / (y * y);
        if s >= 1.0 {
            return t;
        }
        t = t.min(-0.5 * (1.0 - s).ln());
        r = r.min(params.big_a().abs() + t);
    }
    t
}

/// Newton refinement of `seed`.
///
/// Returns `certified = false` if the iteration does not converge or if a
/// small square around the limit does not enclose exactly one zero.
pub fn find_eigenvalue_near(params: &NeutralParams, seed: Complex64) -> Result<Eigenvalue> {
    find_eigenvalue_near_with(params, seed, &Tolerances::default())
}

pub fn find_eigenvalue_near_with(params: &NeutralParams, seed: Complex64, tol: &Tolerances) -> Result<Eigenvalue> {
    let (value, converged) = newton(params, seed, tol)?;
    let certified = converged && isolated_count(params, value, tol) == Some(1);
    Ok(Eigenvalue {
        value,
        index: None,
        residual: params.eval_h(value).norm(),
        multiplicity: 1,
        certified,
        ball_radius: None,
    })
}

pub(crate) fn newton(params: &NeutralParams, seed: Complex64, tol: &Tolerances) -> Result<(Complex64, bool)> {
    let mut z = seed;
    for _ in 0..=tol.newton_iterations {
        let (h, dh) = params.eval_h_pair(z);
        if h.norm() <= tol.root * (1.0 + z.norm()) {
            return Ok((polish(params, z, h), true));
        }
        if !(dh.norm() >= tol.derivative_floor) {
            return Err(Error::DerivativeVanished { at: z });
        }
        let next = z - h / dh;
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Ok((z, false));
        }
        z = next;
    }
    Ok((z, false))
}

/// A few extra Newton steps past the stopping test, keeping the smallest `|h|`.
fn polish(params: &NeutralParams, mut z: Complex64, mut h: Complex64) -> Complex64 {
    let mut best = (h.norm(), z);
    for _ in 0..3 {
        let dh = params.eval_h_prime(z);
        if h.norm() == 0.0 || dh.norm() == 0.0 {
            break;
        }
        z -= h / dh;
        h = params.eval_h(z);
        if !(h.norm() < best.0) {
            break;
        }
        best = (h.norm(), z);
    }
    best.1
}

/// Zero count in a small square around `z`, trying shrinking half-widths.
pub(crate) fn isolated_count(params: &NeutralParams, z: Complex64, tol: &Tolerances) -> Option<u32> {
    for r in [1e-2, 3e-3, 1e-3, 1e-4] {
        if let Ok(rect) = Rectangle::square(z, r) {
            if let Ok(n) = count_zeros_in_rect_with(params, &rect, tol) {
                return Some(n);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn strip_exact_case() {
        let p = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        let (nu1, nu2) = strip_bounds(&p);
        assert!(nu1 < 0.0);
        assert!(nu2 >= 4f64.ln());
        for (a, c) in [(1.0, 0.5), (-2.0, 3.0), (0.5, -0.25)] {
            let p = NeutralParams::new(a, a * c, c).unwrap();
            let (nu1, nu2) = strip_bounds(&p);
            assert!(nu2.exp() >= 2.0 * c.abs());
            assert!(nu1 < -a && nu2 > -a);
        }
    }

    #[test]
    fn strip_sufficient_conditions() {
        for (a, b, c) in [(1.0, 2.0, 0.5), (2.0, 0.5, 1.0), (-1.0, 3.0, -0.3), (0.2, -5.0, 4.0)] {
            let p = NeutralParams::new(a, b, c).unwrap();
            let (nu1, nu2) = strip_bounds(&p);
            let k = (a * c - b).abs();
            for im in [0.0, 1.0, 10.0, 100.0] {
                let l = Complex64::new(nu1, im);
                assert!(l.exp().norm() + k / (l + a).norm() <= c.abs() / 2.0);
                let l = Complex64::new(nu2, im);
                assert!(l.exp().norm() >= c.abs() + k / (l + a).norm());
            }
        }
    }

    #[test]
    fn newton_on_exact_root_is_fixed() {
        let p = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        let z3 = p.auxiliary_eigen(3);
        let e = find_eigenvalue_near(&p, z3).unwrap();
        assert!(e.certified);
        assert!((e.value - z3).norm() < 1e-12);
    }

    #[test]
    fn newton_conjugate_symmetric() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        for n in [1, 4, 10, 33] {
            let seed = p.auxiliary_eigen(n) + Complex64::new(0.01, -0.02);
            let up = find_eigenvalue_near(&p, seed).unwrap();
            let down = find_eigenvalue_near(&p, seed.conj()).unwrap();
            assert_eq!(down.value.re.to_bits(), up.value.re.to_bits());
            assert_eq!(down.value.im.to_bits(), (-up.value.im).to_bits());
        }
    }

    #[test]
    fn newton_seed_z10() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let e = find_eigenvalue_near(&p, p.auxiliary_eigen(10)).unwrap();
        assert!(e.certified);
        // |β|/(2π n) with β = (b - ac)/c = 3
        assert!((e.value - p.auxiliary_eigen(10)).norm() <= 1.5 * 3.0 / (2.0 * PI * 10.0));
    }

    #[test]
    fn tail_bound_covers_roots() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        for n in [5, 20, 80] {
            let y = 2.0 * PI * n as f64;
            let t = tail_bound(&p, y);
            assert!(t.is_finite());
            let e = find_eigenvalue_near(&p, p.auxiliary_eigen(n)).unwrap();
            assert!((e.value.re - p.accumulation()).abs() <= t);
        }
        assert_eq!(tail_bound(&NeutralParams::new(0.0, 0.0, 2.0).unwrap(), 1.0), 0.0);
    }
}

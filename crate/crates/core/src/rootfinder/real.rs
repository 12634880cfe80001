use num_complex::Complex64;

use super::{strip_bounds, Eigenvalue};
use crate::{Error, NeutralParams, Result, Tolerances};

const BISECTION_STEPS: u32 = 200;

fn h(p: &NeutralParams, x: f64) -> f64 {
    p.eval_h(Complex64::new(x, 0.0)).re
}

fn dh(p: &NeutralParams, x: f64) -> f64 {
    p.eval_h_prime(Complex64::new(x, 0.0)).re
}

/// Zero of a monotone `g` on `[lo, hi]`, or `None` without a sign change.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut glo = g(lo);
    let ghi = g(hi);
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (g(lo).abs(), g(hi).abs());
    Some(if a <= b { lo } else { hi })
}

fn polish(p: &NeutralParams, mut x: f64) -> f64 {
    for _ in 0..3 {
        let d = dh(p, x);
        if d == 0.0 {
            break;
        }
        let next = x - h(p, x) / d;
        if !next.is_finite() || h(p, next).abs() >= h(p, x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// All real roots of `h` inside the strip.
///
/// `h''` has one real zero, so `h'` has at most two and `h` at most three.
pub fn real_roots(params: &NeutralParams) -> Result<Vec<Eigenvalue>> {
    real_roots_with(params, &Tolerances::default())
}

pub fn real_roots_with(params: &NeutralParams, tol: &Tolerances) -> Result<Vec<Eigenvalue>> {
    let (nu1, nu2) = strip_bounds(params);
    let s = params.h_second_zero();
    let mut pieces = vec![nu1];
    if s > nu1 && s < nu2 {
        pieces.push(s);
    }
    pieces.push(nu2);

    let mut crits = Vec::new();
    for w in pieces.windows(2) {
        if let Some(x) = bisect(|x| dh(params, x), w[0], w[1]) {
            if x > nu1 && x < nu2 {
                crits.push(x);
            }
        }
    }

    let accept = |x: f64| h(params, x).abs() <= tol.root * (1.0 + x.abs());
    let mut out: Vec<(f64, u32)> = Vec::new();
    let mut breaks = vec![nu1];
    breaks.extend(&crits);
    breaks.push(nu2);
    for w in breaks.windows(2) {
        let Some(x) = bisect(|x| h(params, x), w[0], w[1]) else {
            continue;
        };
        let x = polish(params, x);
        if !accept(x) {
            return Err(Error::ToleranceNotMet {
                what: format!("real root bisection near {x}"),
                residual: h(params, x).abs(),
            });
        }
        out.push((x, 1));
    }
    for &x in &crits {
        if accept(x) {
            let multiplicity = if params.eval_h_second(Complex64::new(x, 0.0)).norm() <= tol.root.sqrt() {
                3
            } else {
                2
            };
            out.push((x, multiplicity));
        }
    }

    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, u32)> = Vec::new();
    for (x, m) in out {
        match merged.last_mut() {
            Some(last) if (x - last.0).abs() <= tol.cluster * (1.0 + x.abs()) => {
                if m > last.1 {
                    *last = (x, m);
                }
            }
            _ => merged.push((x, m)),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(x, m)| {
            let value = Complex64::new(x, 0.0);
            Eigenvalue {
                value,
                index: None,
                residual: params.eval_h(value).norm(),
                multiplicity: m,
                certified: false,
                ball_radius: None,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(p: &NeutralParams) -> Vec<f64> {
        real_roots(p).unwrap().iter().map(|e| e.value.re).collect()
    }

    #[test]
    fn single_root_at_zero() {
        let p = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        assert_eq!(values(&p), vec![0.0]);
    }

    #[test]
    fn two_exact_roots() {
        let p = NeutralParams::new(0.0, 0.0, -0.5).unwrap();
        let v = values(&p);
        assert_eq!(v.len(), 2);
        assert!((v[0] - 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn double_root_detected() {
        let p = NeutralParams::new(0.0, 0.0, -1.0).unwrap();
        let r = real_roots(&p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!(r[0].value.re.abs() < 1e-7);
    }

    #[test]
    fn matches_dense_sign_scan() {
        for (a, b, c) in [(1.0, 2.0, 0.5), (2.0, 0.5, 1.0), (-1.0, 0.3, -0.4), (0.5, -3.0, 2.0)] {
            let p = NeutralParams::new(a, b, c).unwrap();
            let (nu1, nu2) = strip_bounds(&p);
            let n = 100_000;
            let mut scan = Vec::new();
            let mut prev = h(&p, nu1);
            for k in 1..=n {
                let x = nu1 + (nu2 - nu1) * k as f64 / n as f64;
                let v = h(&p, x);
                if v.signum() != prev.signum() {
                    scan.push(x);
                }
                prev = v;
            }
            let found = values(&p);
            assert_eq!(found.len(), scan.len(), "{a} {b} {c}");
            let step = (nu2 - nu1) / n as f64;
            for (f, s) in found.iter().zip(&scan) {
                assert!((f - s).abs() <= step, "{f} vs {s}");
            }
        }
    }
}

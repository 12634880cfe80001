use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, NeutralParams, Result, Tolerances};

const INITIAL_SPACING: f64 = 0.05;
const MAX_DEPTH: u32 = 48;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidInput(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Square of half-width `r` around `center`.
    pub fn square(center: Complex64, r: f64) -> Result<Self> {
        Self::new(center.re - r, center.re + r, center.im - r, center.im + r)
    }

    pub fn re_min(&self) -> f64 {
        self.re_min
    }

    pub fn re_max(&self) -> f64 {
        self.re_max
    }

    pub fn im_min(&self) -> f64 {
        self.im_min
    }

    pub fn im_max(&self) -> f64 {
        self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    /// Strict interior membership.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    pub(crate) fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

fn sample<F>(f: &F, z: Complex64, tol: &Tolerances) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let v = f(z);
    let floor = tol.clearance * (1.0 + z.norm());
    if !(v.norm() >= floor) {
        return Err(Error::BoundaryTooClose {
            min_modulus: v.norm(),
            at: z,
        });
    }
    Ok(v)
}

fn refine<F>(
    f: &F,
    (z0, f0): (Complex64, Complex64),
    (z1, f1): (Complex64, Complex64),
    tol: &Tolerances,
    depth: u32,
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let d = (f1 / f0).arg();
    if d.abs() < tol.phase_step {
        return Ok(d);
    }
    let zm = 0.5 * (z0 + z1);
    if depth >= MAX_DEPTH {
        return Err(Error::BoundaryTooClose {
            min_modulus: f0.norm().min(f1.norm()),
            at: zm,
        });
    }
    let fm = sample(f, zm, tol)?;
    Ok(refine(f, (z0, f0), (zm, fm), tol, depth + 1)? + refine(f, (zm, fm), (z1, f1), tol, depth + 1)?)
}

/// Continuous change of `arg f` along the segment from `a` to `b`.
pub fn segment_phase<F>(f: &F, a: Complex64, b: Complex64, tol: &Tolerances) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let n = ((b - a).norm() / INITIAL_SPACING).ceil().max(4.0) as usize;
    let mut prev = (a, sample(f, a, tol)?);
    let mut total = 0.0;
    for k in 1..=n {
        let z = if k == n { b } else { a + (b - a) * (k as f64 / n as f64) };
        let next = (z, sample(f, z, tol)?);
        total += refine(f, prev, next, tol, 0)?;
        prev = next;
    }
    Ok(total)
}

/// Rounds an accumulated phase to a winding number.
pub(crate) fn to_count(total_phase: f64, at: Complex64) -> Result<u32> {
    let w = total_phase / std::f64::consts::TAU;
    let r = w.round();
    if (w - r).abs() > 0.1 || r < 0.0 {
        return Err(Error::BoundaryTooClose {
            min_modulus: f64::NAN,
            at,
        });
    }
    Ok(r as u32)
}

/// Winding number of `f` around the boundary of `rect`.
pub fn winding_number<F>(f: &F, rect: &Rectangle, tol: &Tolerances) -> Result<u32>
where
    F: Fn(Complex64) -> Complex64,
{
    let c = rect.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += segment_phase(f, c[i], c[(i + 1) % 4], tol)?;
    }
    to_count(total, rect.center())
}

/// Number of zeros of `h` inside `rect`, with multiplicity.
pub fn count_zeros_in_rect(params: &NeutralParams, rect: &Rectangle) -> Result<u32> {
    count_zeros_in_rect_with(params, rect, &Tolerances::default())
}

pub fn count_zeros_in_rect_with(params: &NeutralParams, rect: &Rectangle, tol: &Tolerances) -> Result<u32> {
    winding_number(&|z| params.eval_h(z), rect, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_degenerate() {
        assert!(Rectangle::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Rectangle::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(Rectangle::new(0.0, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn polynomial_counts() {
        let tol = Tolerances::default();
        let f = |z: Complex64| (z - 0.5) * (z - 0.5) * (z + Complex64::new(0.0, 2.0));
        let r = Rectangle::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(winding_number(&f, &r, &tol).unwrap(), 2);
        let r = Rectangle::new(-1.0, 1.0, -3.0, 1.0).unwrap();
        assert_eq!(winding_number(&f, &r, &tol).unwrap(), 3);
        let r = Rectangle::new(2.0, 3.0, -1.0, 1.0).unwrap();
        assert_eq!(winding_number(&f, &r, &tol).unwrap(), 0);
    }

    #[test]
    fn boundary_through_zero_is_refused() {
        let tol = Tolerances::default();
        let f = |z: Complex64| z - 1.0;
        let r = Rectangle::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!(matches!(
            winding_number(&f, &r, &tol),
            Err(Error::BoundaryTooClose { .. })
        ));
    }

    #[test]
    fn exact_root_ball() {
        let p = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        let r = Rectangle::square(p.auxiliary_eigen(0), 0.5).unwrap();
        assert_eq!(count_zeros_in_rect(&p, &r).unwrap(), 1);
    }

    #[test]
    fn additivity() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let whole = Rectangle::new(-6.0, 3.0, 0.3, 20.0).unwrap();
        let lower = Rectangle::new(-6.0, 3.0, 0.3, 4.0 * PI).unwrap();
        let upper = Rectangle::new(-6.0, 3.0, 4.0 * PI, 20.0).unwrap();
        let n = count_zeros_in_rect(&p, &whole).unwrap();
        assert_eq!(
            n,
            count_zeros_in_rect(&p, &lower).unwrap() + count_zeros_in_rect(&p, &upper).unwrap()
        );
        assert!(n >= 3);
    }
}

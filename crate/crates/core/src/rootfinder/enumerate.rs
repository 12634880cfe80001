use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::winding::{segment_phase, to_count, winding_number, Rectangle};
use super::{isolated_count, newton, real_roots_with, strip_bounds, tail_bound, Eigenvalue};
use crate::{Error, NeutralParams, Result, Tolerances};

const LINE_OFFSET: f64 = 0.05;
const BAND_HEIGHTS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const MAX_SPLITS: u32 = 64;

/// Every root with `|Im λ| < im_cover`, sorted by `(Re, Im)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    params: NeutralParams,
    n_max: u32,
    roots: Vec<Eigenvalue>,
    strip: (f64, f64),
    im_cover: f64,
    n_eps: Option<i64>,
}

impl Spectrum {
    pub fn params(&self) -> &NeutralParams {
        &self.params
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn roots(&self) -> &[Eigenvalue] {
        &self.roots
    }

    pub fn into_roots(self) -> Vec<Eigenvalue> {
        self.roots
    }

    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    /// The enumeration is complete for `|Im λ| < im_cover`.
    pub fn im_cover(&self) -> f64 {
        self.im_cover
    }

    /// Smallest `n` from which every index up to `n_max` has a ball no wider than the configured maximum.
    pub fn n_eps(&self) -> Option<i64> {
        self.n_eps
    }

    /// Roots outside the cover lie within this distance of `ln|c|`.
    pub fn tail_bound(&self) -> f64 {
        tail_bound(&self.params, self.im_cover)
    }

    pub fn indexed(&self, n: i64) -> Option<&Eigenvalue> {
        self.roots.iter().find(|e| e.index == Some(n))
    }

    /// `|n|·|λ_n - z_n|`.
    pub fn scaled_deviation(&self, n: i64) -> Option<f64> {
        self.indexed(n)
            .map(|e| (e.value - self.params.auxiliary_eigen(n)).norm() * n.unsigned_abs() as f64)
    }

    pub fn all_certified(&self) -> bool {
        self.roots.iter().all(|e| e.certified)
    }

    /// Replaces the root list, keeping the metadata.
    pub fn with_roots(&self, roots: Vec<Eigenvalue>) -> Self {
        Self { roots, ..self.clone() }
    }
}

/// Enumerates all roots with asymptotic index up to `n_max` plus the low-lying ones.
pub fn enumerate_eigenvalues(params: &NeutralParams, n_max: u32) -> Result<Spectrum> {
    enumerate_eigenvalues_with(params, n_max, &Tolerances::default())
}

pub fn enumerate_eigenvalues_with(params: &NeutralParams, n_max: u32, tol: &Tolerances) -> Result<Spectrum> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let h = |z: Complex64| params.eval_h(z);
    let (nu1, nu2) = strip_bounds(params);
    let phi0 = params.phase();

    // Horizontal line k separates z_k from z_{k+1}.
    let lines: Vec<(f64, f64)> = (0..=n_max as i64)
        .into_par_iter()
        .map(|k| horizontal_line(&h, nu1, nu2, TAU * k as f64 + phi0 + PI, tol))
        .collect::<Result<_>>()?;

    let mut reals = real_roots_with(params, tol)?;
    let real_mult: u32 = reals.iter().map(|e| e.multiplicity).sum();
    let (eta, eta_phase) = BAND_HEIGHTS
        .iter()
        .find_map(|&eta| {
            let rect = Rectangle::new(nu1, nu2, -eta, eta).ok()?;
            let n = winding_number(&h, &rect, tol).ok()?;
            let phase = segment_phase(&h, Complex64::new(nu1, eta), Complex64::new(nu2, eta), tol).ok()?;
            (n == real_mult).then_some((eta, phase))
        })
        .ok_or_else(|| Error::ToleranceNotMet {
            what: "real-axis band count".into(),
            residual: f64::NAN,
        })?;
    for e in &mut reals {
        e.certified = isolated_count(params, e.value, tol) == Some(e.multiplicity);
    }

    // Slice k spans lines k-1..k; slice 0 runs from the band up to line 0.
    let slices: Vec<Vec<Eigenvalue>> = (0..=n_max as i64)
        .into_par_iter()
        .map(|k| {
            let (bottom, top) = if k == 0 {
                ((eta, eta_phase), lines[0])
            } else {
                (lines[k as usize - 1], lines[k as usize])
            };
            let right = segment_phase(&h, Complex64::new(nu2, bottom.0), Complex64::new(nu2, top.0), tol)?;
            let left = segment_phase(&h, Complex64::new(nu1, bottom.0), Complex64::new(nu1, top.0), tol)?;
            let count = to_count(bottom.1 + right - top.1 - left, Complex64::new(nu1, bottom.0))?;
            let rect = Rectangle::new(nu1, nu2, bottom.0, top.0)?;
            let z = params.auxiliary_eigen(k);
            let seed = rect.contains(z).then_some(z);
            let mut found = search(params, rect, count, seed, tol, 0)?;
            assign_index(params, &mut found, k, tol);
            Ok(found)
        })
        .collect::<Result<_>>()?;

    if params.delta() < 0 {
        let z0 = params.auxiliary_eigen(0);
        let nearest = reals
            .iter_mut()
            .filter(|e| e.is_simple())
            .min_by(|x, y| (x.value - z0).norm().total_cmp(&(y.value - z0).norm()));
        if let Some(e) = nearest {
            if let Some(r) = certify_ball(params, z0, e.value, tol) {
                e.index = Some(0);
                e.ball_radius = Some(r);
            }
        }
    }

    let top = lines[n_max as usize].0;
    let im_cover = if params.delta() > 0 { TAU * n_max as f64 } else { top };

    let ok = |k: i64| -> bool {
        let hit = if k == 0 && params.delta() < 0 {
            reals.iter().find(|e| e.index == Some(0))
        } else {
            slices[k as usize].iter().find(|e| e.index == Some(k))
        };
        hit.and_then(|e| e.ball_radius).is_some_and(|r| r <= tol.max_ball)
    };
    let mut n_eps = None;
    for k in (0..=n_max as i64).rev() {
        if !ok(k) {
            break;
        }
        n_eps = Some(k);
    }

    let mut roots = reals;
    for e in slices.into_iter().flatten() {
        if e.value.im < im_cover {
            let mirror = e.index.map(|k| if params.delta() > 0 { -k - 1 } else { -k });
            roots.push(e.conj_with_index(mirror));
        }
        roots.push(e);
    }
    for e in &mut roots {
        if e.value.im.abs() < tol.real_snap {
            e.value.im = 0.0;
        }
    }
    roots.sort_by(|x, y| {
        x.value
            .re
            .total_cmp(&y.value.re)
            .then(x.value.im.total_cmp(&y.value.im))
    });

    Ok(Spectrum {
        params: *params,
        n_max,
        roots,
        strip: (nu1, nu2),
        im_cover,
        n_eps,
    })
}

/// A horizontal line near `y` that stays clear of zeros, with its phase change.
fn horizontal_line<F>(h: &F, nu1: f64, nu2: f64, y: f64, tol: &Tolerances) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut last = None;
    for attempt in 0..=tol.retries {
        let step = attempt.div_ceil(2) as f64 * LINE_OFFSET;
        let y = if attempt % 2 == 1 { y + step } else { y - step };
        match segment_phase(h, Complex64::new(nu1, y), Complex64::new(nu2, y), tol) {
            Ok(phase) => return Ok((y, phase)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn certified_root(params: &NeutralParams, z: Complex64) -> Eigenvalue {
    Eigenvalue {
        value: z,
        index: None,
        residual: params.eval_h(z).norm(),
        multiplicity: 1,
        certified: true,
        ball_radius: None,
    }
}

/// Finds the `count` zeros inside `rect` by Newton and bisection of the rectangle.
fn search(
    params: &NeutralParams,
    rect: Rectangle,
    count: u32,
    seed: Option<Complex64>,
    tol: &Tolerances,
    depth: u32,
) -> Result<Vec<Eigenvalue>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count == 1 {
        for s in seed.into_iter().chain([rect.center()]) {
            if let Ok((z, true)) = newton(params, s, tol) {
                if rect.contains(z) {
                    return Ok(vec![certified_root(params, z)]);
                }
            }
        }
    } else if let Some(e) = multiple_root(params, &rect, count, tol) {
        return Ok(vec![e]);
    }
    if depth >= MAX_SPLITS {
        return Err(Error::ToleranceNotMet {
            what: format!("isolating {count} zero(s) near {}", rect.center()),
            residual: f64::NAN,
        });
    }
    let h = |z: Complex64| params.eval_h(z);
    let vertical = rect.width() >= rect.height();
    for frac in [0.5, 0.47, 0.53, 0.44, 0.56, 0.41] {
        let (r1, r2) = if vertical {
            let x = rect.re_min() + frac * rect.width();
            (
                Rectangle::new(rect.re_min(), x, rect.im_min(), rect.im_max())?,
                Rectangle::new(x, rect.re_max(), rect.im_min(), rect.im_max())?,
            )
        } else {
            let y = rect.im_min() + frac * rect.height();
            (
                Rectangle::new(rect.re_min(), rect.re_max(), rect.im_min(), y)?,
                Rectangle::new(rect.re_min(), rect.re_max(), y, rect.im_max())?,
            )
        };
        let (Ok(n1), Ok(n2)) = (winding_number(&h, &r1, tol), winding_number(&h, &r2, tol)) else {
            continue;
        };
        if n1 + n2 != count {
            continue;
        }
        let s1 = seed.filter(|s| r1.contains(*s));
        let s2 = seed.filter(|s| r2.contains(*s));
        let mut out = search(params, r1, n1, s1, tol, depth + 1)?;
        out.extend(search(params, r2, n2, s2, tol, depth + 1)?);
        return Ok(out);
    }
    Err(Error::BoundaryTooClose {
        min_modulus: f64::NAN,
        at: rect.center(),
    })
}

/// A zero of multiplicity `count` found as a critical point of `h`.
fn multiple_root(params: &NeutralParams, rect: &Rectangle, count: u32, tol: &Tolerances) -> Option<Eigenvalue> {
    let mut w = rect.center();
    for _ in 0..tol.newton_iterations {
        let d2 = params.eval_h_second(w);
        if d2.norm() < tol.derivative_floor {
            break;
        }
        w -= params.eval_h_prime(w) / d2;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
    }
    if !rect.contains(w) || params.eval_h(w).norm() > 1e-10 * (1.0 + w.norm()) {
        return None;
    }
    let n = winding_number(&|z| params.eval_h(z), &Rectangle::square(w, 1e-2).ok()?, tol).ok()?;
    (n == count).then(|| Eigenvalue {
        value: w,
        index: None,
        residual: params.eval_h(w).norm(),
        multiplicity: count,
        certified: true,
        ball_radius: None,
    })
}

/// Square half-width around `z` that isolates `root`, or `None`.
pub(crate) fn certify_ball(params: &NeutralParams, z: Complex64, root: Complex64, tol: &Tolerances) -> Option<f64> {
    let d = (root - z).norm();
    let eps = if d < tol.max_ball {
        (4.0 * d).clamp(0.01, tol.max_ball)
    } else if 2.0 * d < PI {
        2.0 * d
    } else {
        return None;
    };
    [1.0, 1.1, 0.95].iter().find_map(|s| {
        let r = eps * s;
        if r <= d {
            return None;
        }
        let rect = Rectangle::square(z, r).ok()?;
        let n = winding_number(&|w| params.eval_h(w), &rect, tol).ok()?;
        (n == 1).then_some(r)
    })
}

fn assign_index(params: &NeutralParams, found: &mut [Eigenvalue], k: i64, tol: &Tolerances) {
    if k == 0 && params.delta() < 0 {
        return;
    }
    let z = params.auxiliary_eigen(k);
    let nearest = found
        .iter_mut()
        .filter(|e| e.is_simple())
        .min_by(|x, y| (x.value - z).norm().total_cmp(&(y.value - z).norm()));
    if let Some(e) = nearest {
        if let Some(r) = certify_ball(params, z, e.value, tol) {
            e.index = Some(k);
            e.ball_radius = Some(r);
        }
    }
}
